#include "ecommit/lp.hpp"

#include <cmath>

namespace ecommit::lp {

std::optional<double> bruteForceVerify(const LinearProgram& program, double gridStep)
{
    checkWellFormed(program);
    if (!(gridStep > 0.0) || !std::isfinite(gridStep)) {
        throw MalformedProgram("grid step must be a positive finite number");
    }
    const auto& vars = program.variables();
    std::vector<std::size_t> counts;
    double total = 1.0;
    for (const auto& v : vars) {
        if (!std::isfinite(v.lower) || !std::isfinite(v.upper)) {
            throw MalformedProgram("variable " + v.name + " needs finite bounds for grid search");
        }
        const auto points = static_cast<std::size_t>(std::floor((v.upper - v.lower) / gridStep + 1e-9)) + 1;
        counts.push_back(points);
        total *= static_cast<double>(points);
        if (total > kMaxGridPoints) {
            throw GridTooLarge("grid exceeds " + std::to_string(static_cast<long>(kMaxGridPoints)) +
                               " points at step " + std::to_string(gridStep));
        }
    }

    std::vector<std::size_t> index(vars.size(), 0);
    std::vector<double> point(vars.size());
    for (std::size_t j = 0; j < vars.size(); ++j) {
        point[j] = vars[j].lower;
    }

    std::optional<double> best;
    for (;;) {
        bool feasible = true;
        for (const auto& row : program.constraints()) {
            double lhs = 0.0;
            for (const auto& term : row.terms) {
                lhs += term.coef * point[term.var];
            }
            const double slack = row.relation == Relation::LessEqual      ? row.rhs - lhs
                                 : row.relation == Relation::GreaterEqual ? lhs - row.rhs
                                                                          : -std::abs(lhs - row.rhs);
            if (slack < -kFeasibilityTolerance) {
                feasible = false;
                break;
            }
        }
        if (feasible) {
            const double value = program.evaluate(point);
            if (!best || value < *best) {
                best = value;
            }
        }

        std::size_t j = 0;
        for (; j < vars.size(); ++j) {
            if (++index[j] < counts[j]) {
                point[j] = vars[j].lower + static_cast<double>(index[j]) * gridStep;
                break;
            }
            index[j] = 0;
            point[j] = vars[j].lower;
        }
        if (j == vars.size()) {
            break;
        }
    }
    return best;
}

}  // namespace ecommit::lp
