#include "ecommit/lp.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace ecommit::lp {

namespace {

std::string sanitize(const std::string& name)
{
    std::string out;
    for (char ch : name) {
        const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
                        ch == '_' || ch == '.';
        out.push_back(ok ? ch : '_');
    }
    if (out.empty() || (out[0] >= '0' && out[0] <= '9') || out[0] == '.') {
        out.insert(out.begin(), '_');
    }
    return out;
}

void writeTerm(std::ostream& out, double coef, const std::string& name)
{
    out << ' ' << (coef < 0.0 ? '-' : '+') << ' ' << std::abs(coef) << ' ' << name;
}

std::string bound(double value)
{
    if (value == kInfinity) return "+inf";
    if (value == -kInfinity) return "-inf";
    std::ostringstream s;
    s.precision(17);
    s << value;
    return s.str();
}

}  // namespace

void writeLpText(const LinearProgram& program, std::ostream& out)
{
    const auto precision = out.precision(17);
    const auto& vars = program.variables();
    std::vector<std::string> names;
    for (std::size_t j = 0; j < vars.size(); ++j) {
        names.push_back(sanitize(vars[j].name) + "_" + std::to_string(j));
    }
    out << "\\ objective offset: " << program.objectiveOffset << '\n';
    out << "Minimize\n obj:";
    bool any = false;
    for (std::size_t j = 0; j < vars.size(); ++j) {
        if (vars[j].cost != 0.0) {
            writeTerm(out, vars[j].cost, names[j]);
            any = true;
        }
    }
    if (!any) {
        out << " 0 " << (names.empty() ? std::string("_empty") : names[0]);
    }
    out << "\nSubject To\n";
    for (std::size_t r = 0; r < program.constraints().size(); ++r) {
        const auto& row = program.constraints()[r];
        out << ' ' << sanitize(row.name) << "_" << r << ':';
        for (const auto& term : row.terms) {
            writeTerm(out, term.coef, names[term.var]);
        }
        const char* rel = row.relation == Relation::LessEqual ? "<=" : row.relation == Relation::Equal ? "=" : ">=";
        out << ' ' << rel << ' ' << row.rhs << '\n';
    }
    out << "Bounds\n";
    for (std::size_t j = 0; j < vars.size(); ++j) {
        out << ' ' << bound(vars[j].lower) << " <= " << names[j] << " <= " << bound(vars[j].upper) << '\n';
    }
    out << "End\n";
    out.precision(precision);
}

}  // namespace ecommit::lp
