#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ecommit::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kPivotTolerance = 1e-9;
inline constexpr double kFeasibilityTolerance = 1e-6;

enum class Relation { LessEqual, Equal, GreaterEqual };

struct Term {
    std::size_t var = 0;
    double coef = 0.0;
};

struct Variable {
    std::string name;
    double lower = 0.0;
    double upper = kInfinity;
    double cost = 0.0;
};

struct Constraint {
    std::string name;
    std::vector<Term> terms;
    Relation relation = Relation::LessEqual;
    double rhs = 0.0;
};

/// A minimization LP over bounded variables:
///   min  c'x + offset  s.t.  rows (<=, =, >=),  lower <= x <= upper.
class LinearProgram {
public:
    std::size_t addVariable(std::string name, double lower, double upper, double cost);
    std::size_t addConstraint(std::string name, std::vector<Term> terms, Relation relation, double rhs);

    void setCost(std::size_t var, double cost) { variables_.at(var).cost = cost; }
    void setBounds(std::size_t var, double lower, double upper);

    const std::vector<Variable>& variables() const { return variables_; }
    const std::vector<Constraint>& constraints() const { return constraints_; }

    double objectiveOffset = 0.0;

    /// Objective c'x + offset at the given point.
    double evaluate(const std::vector<double>& values) const;

private:
    std::vector<Variable> variables_;
    std::vector<Constraint> constraints_;
};

/// Raised for programs that are not well formed; the message names the
/// offending row or variable.
class MalformedProgram : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Status { Optimal, Infeasible, Unbounded };

std::string statusName(Status status);

struct LpSolution {
    Status status = Status::Infeasible;
    std::vector<double> values;
    double objective = 0.0;
    std::size_t pivots = 0;
};

/// Throws MalformedProgram when a row references an undeclared variable, a
/// coefficient is not finite, or a variable has lower > upper.
void checkWellFormed(const LinearProgram& program);

/// Bounded-variable primal simplex, two phases. Dantzig pricing, falling
/// back to Bland's smallest-index rule after a run of degenerate pivots;
/// ratio-test ties go to the smallest index. Identical input yields a
/// bit-identical result.
LpSolution solveLp(const LinearProgram& program);

/// Largest violation of any row or variable bound at `values`, computed
/// directly from the program data.
double maxViolation(const LinearProgram& program, const std::vector<double>& values);

class GridTooLarge : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kMaxGridPoints = 1e6;

/// Exhaustive search over the grid lower + k*step of every variable. Every
/// bound must be finite. Returns the best objective among grid points that
/// satisfy all rows within kFeasibilityTolerance, or nullopt when none does.
std::optional<double> bruteForceVerify(const LinearProgram& program, double gridStep);

/// Human-readable dump in the common "LP file" layout (Minimize / Subject To
/// / Bounds / End) for cross-checking with external solvers.
void writeLpText(const LinearProgram& program, std::ostream& out);

}  // namespace ecommit::lp
