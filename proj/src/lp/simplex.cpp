#include "ecommit/lp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ecommit::lp {

std::size_t LinearProgram::addVariable(std::string name, double lower, double upper, double cost)
{
    variables_.push_back({std::move(name), lower, upper, cost});
    return variables_.size() - 1;
}

std::size_t LinearProgram::addConstraint(std::string name, std::vector<Term> terms, Relation relation,
                                         double rhs)
{
    constraints_.push_back({std::move(name), std::move(terms), relation, rhs});
    return constraints_.size() - 1;
}

void LinearProgram::setBounds(std::size_t var, double lower, double upper)
{
    auto& v = variables_.at(var);
    v.lower = lower;
    v.upper = upper;
}

double LinearProgram::evaluate(const std::vector<double>& values) const
{
    double total = objectiveOffset;
    for (std::size_t j = 0; j < variables_.size(); ++j) {
        if (variables_[j].cost != 0.0) {
            total += variables_[j].cost * values.at(j);
        }
    }
    return total;
}

std::string statusName(Status status)
{
    switch (status) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    }
    return "?";
}

void checkWellFormed(const LinearProgram& program)
{
    const auto& vars = program.variables();
    for (std::size_t j = 0; j < vars.size(); ++j) {
        const auto& v = vars[j];
        if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper) {
            throw MalformedProgram("variable " + v.name + " has lower bound above upper bound");
        }
        if (v.lower == kInfinity || v.upper == -kInfinity) {
            throw MalformedProgram("variable " + v.name + " has an empty domain");
        }
        if (!std::isfinite(v.cost)) {
            throw MalformedProgram("variable " + v.name + " has a non-finite cost");
        }
    }
    for (const auto& row : program.constraints()) {
        if (!std::isfinite(row.rhs)) {
            throw MalformedProgram("row " + row.name + " has a non-finite right-hand side");
        }
        for (const auto& term : row.terms) {
            if (term.var >= vars.size()) {
                throw MalformedProgram("row " + row.name + " references undeclared variable #" +
                                       std::to_string(term.var));
            }
            if (!std::isfinite(term.coef)) {
                throw MalformedProgram("row " + row.name + " has a non-finite coefficient on " +
                                       vars[term.var].name);
            }
        }
    }
}

double maxViolation(const LinearProgram& program, const std::vector<double>& values)
{
    double worst = 0.0;
    const auto& vars = program.variables();
    for (std::size_t j = 0; j < vars.size(); ++j) {
        worst = std::max(worst, vars[j].lower - values.at(j));
        worst = std::max(worst, values.at(j) - vars[j].upper);
    }
    for (const auto& row : program.constraints()) {
        double lhs = 0.0;
        for (const auto& term : row.terms) {
            lhs += term.coef * values.at(term.var);
        }
        switch (row.relation) {
        case Relation::LessEqual: worst = std::max(worst, lhs - row.rhs); break;
        case Relation::GreaterEqual: worst = std::max(worst, row.rhs - lhs); break;
        case Relation::Equal: worst = std::max(worst, std::abs(lhs - row.rhs)); break;
        }
    }
    return worst;
}

namespace {

constexpr double kCostTolerance = 1e-9;
constexpr double kRatioTieTolerance = 1e-12;
constexpr double kSnapTolerance = 1e-9;
constexpr std::size_t kRefactorInterval = 100;
constexpr std::size_t kDegenerateLimit = 50;
constexpr std::size_t kPricingSegment = 1024;

struct Entry {
    std::size_t row;
    double value;
};

enum class Where { Basic, AtLower, AtUpper, FreeZero };

/// Working state of one solve. Columns are ordered structurals, slacks,
/// artificials; that order is the Bland index order used when stalling.
class Simplex {
public:
    explicit Simplex(const LinearProgram& program) : m_(program.constraints().size())
    {
        const auto& vars = program.variables();
        n_ = vars.size();

        columns_.resize(n_);
        for (std::size_t r = 0; r < m_; ++r) {
            const auto& row = program.constraints()[r];
            for (const auto& term : row.terms) {
                auto& col = columns_[term.var];
                if (!col.empty() && col.back().row == r) {
                    col.back().value += term.coef;
                }
                else {
                    col.push_back({r, term.coef});
                }
            }
            rhs_.push_back(row.rhs);
        }
        for (std::size_t j = 0; j < n_; ++j) {
            lower_.push_back(vars[j].lower);
            upper_.push_back(vars[j].upper);
            cost_.push_back(vars[j].cost);
        }
        for (std::size_t r = 0; r < m_; ++r) {
            columns_.push_back({{r, 1.0}});
            switch (program.constraints()[r].relation) {
            case Relation::LessEqual: lower_.push_back(0.0); upper_.push_back(kInfinity); break;
            case Relation::GreaterEqual: lower_.push_back(-kInfinity); upper_.push_back(0.0); break;
            case Relation::Equal: lower_.push_back(0.0); upper_.push_back(0.0); break;
            }
            cost_.push_back(0.0);
        }

        x_.assign(columns_.size(), 0.0);
        where_.assign(columns_.size(), Where::AtLower);
        for (std::size_t j = 0; j < n_; ++j) {
            if (std::isfinite(lower_[j])) {
                x_[j] = lower_[j];
                where_[j] = Where::AtLower;
            }
            else if (std::isfinite(upper_[j])) {
                x_[j] = upper_[j];
                where_[j] = Where::AtUpper;
            }
            else {
                x_[j] = 0.0;
                where_[j] = Where::FreeZero;
            }
        }
        for (std::size_t r = 0; r < m_; ++r) {
            where_[n_ + r] = std::isfinite(lower_[n_ + r]) ? Where::AtLower : Where::AtUpper;
        }

        // Residual each row must absorb with its structurals at their start bounds.
        std::vector<double> residual = rhs_;
        for (std::size_t j = 0; j < n_; ++j) {
            if (x_[j] == 0.0) {
                continue;
            }
            for (const auto& e : columns_[j]) {
                residual[e.row] -= e.value * x_[j];
            }
        }

        basis_.assign(m_, 0);
        for (std::size_t r = 0; r < m_; ++r) {
            const std::size_t slack = n_ + r;
            if (residual[r] >= lower_[slack] && residual[r] <= upper_[slack]) {
                basis_[r] = slack;
                where_[slack] = Where::Basic;
                x_[slack] = residual[r];
                continue;
            }
            const double sign = residual[r] >= 0.0 ? 1.0 : -1.0;
            const std::size_t art = columns_.size();
            columns_.push_back({{r, sign}});
            lower_.push_back(0.0);
            upper_.push_back(kInfinity);
            cost_.push_back(0.0);
            x_.push_back(std::abs(residual[r]));
            where_.push_back(Where::Basic);
            basis_[r] = art;
            artificials_.push_back(art);
        }
        refactor();
    }

    LpSolution run(const LinearProgram& program)
    {
        LpSolution solution;
        if (!artificials_.empty()) {
            std::vector<double> phaseOne(columns_.size(), 0.0);
            for (auto a : artificials_) {
                phaseOne[a] = 1.0;
            }
            iterate(phaseOne, false);
            double infeasibility = 0.0;
            for (auto a : artificials_) {
                infeasibility += x_[a];
            }
            if (infeasibility > kFeasibilityTolerance) {
                solution.status = Status::Infeasible;
                solution.pivots = pivots_;
                return solution;
            }
            for (auto a : artificials_) {
                upper_[a] = 0.0;
                if (where_[a] != Where::Basic) {
                    x_[a] = 0.0;
                    where_[a] = Where::AtLower;
                }
            }
        }
        std::vector<double> phaseTwo(columns_.size(), 0.0);
        std::copy(cost_.begin(), cost_.begin() + static_cast<std::ptrdiff_t>(n_), phaseTwo.begin());
        const bool bounded = iterate(phaseTwo, true);
        solution.pivots = pivots_;
        if (!bounded) {
            solution.status = Status::Unbounded;
            return solution;
        }
        solution.status = Status::Optimal;
        solution.values.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(n_));
        for (std::size_t j = 0; j < n_; ++j) {
            auto& v = solution.values[j];
            if (std::abs(v - lower_[j]) <= kSnapTolerance) {
                v = lower_[j];
            }
            else if (std::abs(v - upper_[j]) <= kSnapTolerance) {
                v = upper_[j];
            }
            if (v == 0.0) {
                v = 0.0;  // no negative zeros in output
            }
        }
        solution.objective = program.evaluate(solution.values);
        return solution;
    }

private:
    /// Runs simplex pivots until optimal. Returns false on unboundedness,
    /// which is only reported when `detectUnbounded`.
    bool iterate(const std::vector<double>& cost, bool detectUnbounded)
    {
        std::vector<double> y(m_);
        std::vector<double> alpha(m_);
        std::size_t degenerateRun = 0;
        bool freshDuals = false;
        std::size_t segmentStart = 0;
        for (;;) {
            // Duals y' = c_B' B^-1, rebuilt after each refactor and updated in between.
            if (!freshDuals) {
                std::fill(y.begin(), y.end(), 0.0);
                for (std::size_t i = 0; i < m_; ++i) {
                    const double cb = cost[basis_[i]];
                    if (cb == 0.0) {
                        continue;
                    }
                    const double* row = &inverse_[i * m_];
                    for (std::size_t k = 0; k < m_; ++k) {
                        y[k] += cb * row[k];
                    }
                }
                freshDuals = true;
            }

            // Partial Dantzig pricing over cyclic column segments; Bland's
            // first-eligible rule while pivots stall.
            const bool bland = degenerateRun >= kDegenerateLimit;
            const std::size_t total = columns_.size();
            std::size_t entering = total;
            double direction = 0.0;
            double best = 0.0;
            double reduced = 0.0;
            std::size_t scanned = 0;
            std::size_t j = bland ? 0 : segmentStart;
            for (; scanned < total; ++scanned, j = j + 1 == total ? 0 : j + 1) {
                if (!bland && entering != total && scanned >= kPricingSegment) {
                    break;
                }
                if (where_[j] == Where::Basic || lower_[j] == upper_[j]) {
                    continue;
                }
                double d = cost[j];
                for (const auto& e : columns_[j]) {
                    d -= y[e.row] * e.value;
                }
                double gain = 0.0;
                double dir = 0.0;
                if (d < -kCostTolerance && where_[j] != Where::AtUpper) {
                    gain = -d;
                    dir = 1.0;
                }
                else if (d > kCostTolerance && where_[j] != Where::AtLower) {
                    gain = d;
                    dir = -1.0;
                }
                if (dir == 0.0 || gain <= best) {
                    continue;
                }
                entering = j;
                direction = dir;
                best = gain;
                reduced = d;
                if (bland) {
                    break;
                }
            }
            if (!bland) {
                segmentStart = j;
            }
            if (entering == columns_.size()) {
                return true;
            }

            std::fill(alpha.begin(), alpha.end(), 0.0);
            for (const auto& e : columns_[entering]) {
                for (std::size_t i = 0; i < m_; ++i) {
                    alpha[i] += inverse_[i * m_ + e.row] * e.value;
                }
            }

            // Ratio test; ties go to the smallest variable index.
            double step = upper_[entering] - lower_[entering];  // bound flip
            std::size_t leaving = m_;
            bool leavesAtUpper = false;
            for (std::size_t i = 0; i < m_; ++i) {
                if (std::abs(alpha[i]) <= kPivotTolerance) {
                    continue;
                }
                const std::size_t var = basis_[i];
                const double rate = -direction * alpha[i];
                double limit = kInfinity;
                bool atUpper = false;
                if (rate < 0.0 && std::isfinite(lower_[var])) {
                    limit = (x_[var] - lower_[var]) / -rate;
                }
                else if (rate > 0.0 && std::isfinite(upper_[var])) {
                    limit = (upper_[var] - x_[var]) / rate;
                    atUpper = true;
                }
                if (!std::isfinite(limit)) {
                    continue;
                }
                limit = std::max(limit, 0.0);
                // A tie with the bound flip keeps the flip.
                const bool better = limit < step - kRatioTieTolerance;
                const bool tie = leaving != m_ && std::abs(limit - step) <= kRatioTieTolerance &&
                                 var < basis_[leaving];
                if (better || tie) {
                    step = limit;
                    leaving = i;
                    leavesAtUpper = atUpper;
                }
            }

            if (!std::isfinite(step)) {
                if (detectUnbounded) {
                    return false;
                }
                throw std::logic_error("phase-one simplex found an unbounded ray");
            }

            for (std::size_t i = 0; i < m_; ++i) {
                if (alpha[i] != 0.0) {
                    x_[basis_[i]] -= step * direction * alpha[i];
                }
            }
            x_[entering] += step * direction;
            ++pivots_;
            degenerateRun = step > kRatioTieTolerance ? 0 : degenerateRun + 1;

            if (leaving == m_) {
                // Entering variable moved to its opposite bound.
                if (direction > 0.0) {
                    x_[entering] = upper_[entering];
                    where_[entering] = Where::AtUpper;
                }
                else {
                    x_[entering] = lower_[entering];
                    where_[entering] = Where::AtLower;
                }
                continue;
            }

            const std::size_t out = basis_[leaving];
            x_[out] = leavesAtUpper ? upper_[out] : lower_[out];
            where_[out] = leavesAtUpper ? Where::AtUpper : Where::AtLower;
            basis_[leaving] = entering;
            where_[entering] = Where::Basic;

            if (pivots_ % kRefactorInterval == 0) {
                refactor();
                freshDuals = false;
            }
            else {
                pivotInverse(leaving, alpha);
                const double* row = &inverse_[leaving * m_];
                for (auto k : nonzero_) {
                    y[k] += reduced * row[k];
                }
            }
        }
    }

    void pivotInverse(std::size_t r, const std::vector<double>& alpha)
    {
        double* pivotRow = &inverse_[r * m_];
        const double inv = 1.0 / alpha[r];
        nonzero_.clear();
        for (std::size_t k = 0; k < m_; ++k) {
            pivotRow[k] *= inv;
            if (pivotRow[k] != 0.0) {
                nonzero_.push_back(k);
            }
        }
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == r || alpha[i] == 0.0) {
                continue;
            }
            const double f = alpha[i];
            double* row = &inverse_[i * m_];
            for (auto k : nonzero_) {
                row[k] -= f * pivotRow[k];
            }
        }
    }

    /// Rebuilds B^-1 by Gauss-Jordan and recomputes the basic values.
    void refactor()
    {
        std::vector<double> b(m_ * m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) {
            for (const auto& e : columns_[basis_[i]]) {
                b[e.row * m_ + i] = e.value;
            }
        }
        inverse_.assign(m_ * m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) {
            inverse_[i * m_ + i] = 1.0;
        }
        std::vector<std::size_t> bNonzero;
        std::vector<std::size_t> invNonzero;
        for (std::size_t c = 0; c < m_; ++c) {
            std::size_t pivot = c;
            for (std::size_t r = c + 1; r < m_; ++r) {
                if (std::abs(b[r * m_ + c]) > std::abs(b[pivot * m_ + c])) {
                    pivot = r;
                }
            }
            if (std::abs(b[pivot * m_ + c]) < 1e-14) {
                throw std::logic_error("simplex basis became singular");
            }
            if (pivot != c) {
                for (std::size_t k = 0; k < m_; ++k) {
                    std::swap(b[pivot * m_ + k], b[c * m_ + k]);
                    std::swap(inverse_[pivot * m_ + k], inverse_[c * m_ + k]);
                }
            }
            const double inv = 1.0 / b[c * m_ + c];
            bNonzero.clear();
            invNonzero.clear();
            for (std::size_t k = 0; k < m_; ++k) {
                b[c * m_ + k] *= inv;
                inverse_[c * m_ + k] *= inv;
                if (b[c * m_ + k] != 0.0) {
                    bNonzero.push_back(k);
                }
                if (inverse_[c * m_ + k] != 0.0) {
                    invNonzero.push_back(k);
                }
            }
            // Both matrices stay sparse for these programs; touch nonzeros only.
            for (std::size_t r = 0; r < m_; ++r) {
                const double f = b[r * m_ + c];
                if (r == c || f == 0.0) {
                    continue;
                }
                for (auto k : bNonzero) {
                    b[r * m_ + k] -= f * b[c * m_ + k];
                }
                for (auto k : invNonzero) {
                    inverse_[r * m_ + k] -= f * inverse_[c * m_ + k];
                }
            }
        }

        std::vector<double> residual = rhs_;
        for (std::size_t j = 0; j < columns_.size(); ++j) {
            if (where_[j] == Where::Basic || x_[j] == 0.0) {
                continue;
            }
            for (const auto& e : columns_[j]) {
                residual[e.row] -= e.value * x_[j];
            }
        }
        for (std::size_t i = 0; i < m_; ++i) {
            double v = 0.0;
            const double* row = &inverse_[i * m_];
            for (std::size_t k = 0; k < m_; ++k) {
                v += row[k] * residual[k];
            }
            x_[basis_[i]] = v;
        }
    }

    std::size_t m_;
    std::size_t n_ = 0;
    std::vector<std::vector<Entry>> columns_;
    std::vector<double> rhs_;
    std::vector<double> lower_;
    std::vector<double> upper_;
    std::vector<double> cost_;
    std::vector<double> x_;
    std::vector<Where> where_;
    std::vector<std::size_t> basis_;
    std::vector<std::size_t> artificials_;
    std::vector<double> inverse_;
    std::vector<std::size_t> nonzero_;
    std::size_t pivots_ = 0;
};

}  // namespace

LpSolution solveLp(const LinearProgram& program)
{
    checkWellFormed(program);
    Simplex simplex(program);
    return simplex.run(program);
}

}  // namespace ecommit::lp
