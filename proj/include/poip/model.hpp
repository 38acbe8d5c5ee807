#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "poip/common.hpp"

namespace poip {

/// Absolute feasibility tolerance used across all modules.
constexpr double kFeasTol = 1e-6;

enum class VarType { Continuous, Binary, Integer };
enum class Sense { LE, GE, EQ };

struct VariableDef {
  int id = 0;
  std::string name;
  VarType type = VarType::Binary;
  double lb = 0.0;
  double ub = 1.0;
};

/// coef * prod_i x_{v_i}^{e_i}; powers sorted by var id, ids distinct,
/// exponents >= 1 after canonicalization.
struct PolyTerm {
  double coef = 0.0;
  std::vector<std::pair<int, int>> powers;

  /// Sum of exponents.
  int degree() const {
    int d = 0;
    for (auto& [v, e] : powers) d += e;
    return d;
  }
};

struct Polynomial {
  double constant = 0.0;
  std::vector<PolyTerm> terms;

  /// Sorts powers within terms (merging repeated ids by exponent addition),
  /// folds empty-power terms into the constant, merges terms sharing a powers
  /// multiset, drops exact-zero coefficients, and sorts terms
  /// lexicographically on their powers.
  void canonicalize();
};

struct Constraint {
  int id = 0;
  Sense sense = Sense::LE;
  Polynomial lhs;  // lhs.constant == 0 after Instance::canonicalize
  double rhs = 0.0;
};

struct Instance {
  std::string name;
  /// Original sense was minimize; the stored objective is always the
  /// maximize form (negated when minimize=true).
  bool minimize = false;
  std::vector<VariableDef> variables;
  Polynomial objective;
  std::vector<Constraint> constraints;
  /// Best-known objective value in the original sense.
  std::optional<double> bks;

  int n_vars() const { return static_cast<int>(variables.size()); }
  void canonicalize();
  /// Throws ValidationError on structural violations (ids, bounds, exponents).
  void validate() const;
};

using Assignment = std::vector<double>;

/// x^e for integer e >= 0 by left-to-right multiplication; the interval code
/// uses the same evaluation order so endpoint attainment is exact.
double powi(double x, int e);

double evaluate_polynomial(const Polynomial& p, std::span<const double> x);
/// Maximize-form objective value.
double objective_value(const Instance& inst, std::span<const double> x);
/// Objective value in the instance's original sense.
double original_objective_value(const Instance& inst, std::span<const double> x);

struct ConstraintStatus {
  bool satisfied = true;
  double violation = 0.0;
};

struct FeasReport {
  bool feasible = true;
  double max_violation = 0.0;
  std::vector<ConstraintStatus> constraints;  // per constraint id
  std::vector<ConstraintStatus> bounds;       // per variable id
};

/// Checks every constraint and every variable bound at absolute tolerance
/// tol. The assignment must be complete; integrality is the caller's
/// obligation and is not checked here.
FeasReport check_feasible(const Instance& inst, std::span<const double> x, double tol = kFeasTol);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct PartialAssignment {
  std::vector<char> is_fixed;  // size n
  std::vector<double> value;   // size n; meaningful where is_fixed != 0

  static PartialAssignment none(int n) {
    return PartialAssignment{std::vector<char>(n, 0), std::vector<double>(n, 0.0)};
  }
};

/// Tight range of a term over the box: fixed variables contribute point
/// factors, free ones their bound interval raised to the exponent. Throws
/// UnboundedError if a free variable of the term has an infinite bound.
Interval term_interval(const PolyTerm& t, const PartialAssignment& fixed,
                       std::span<const Interval> bounds);

/// Sum of term intervals plus the constant.
Interval polynomial_interval(const Polynomial& p, const PartialAssignment& fixed,
                             std::span<const Interval> bounds);

/// True only when no completion of the fixing can satisfy the constraint at
/// tolerance tol (sufficient, never falsely positive).
bool constraint_provably_unsat(const Constraint& c, const PartialAssignment& fixed,
                               std::span<const Interval> bounds, double tol = kFeasTol);

std::vector<Interval> variable_bounds(const Instance& inst);

struct BitRef {
  int bin_id = -1;
  double weight = 1.0;  // power of two
};

struct VarMap {
  enum class Kind { Passthrough, Constant, Bits };
  Kind kind = Kind::Passthrough;
  int bin_id = -1;      // Passthrough: id in the binarized instance
  double constant = 0;  // Constant: pinned value (lb == ub)
  double offset = 0;    // Bits: x = offset + sum_k weight_k * bit_k
  std::vector<BitRef> bits;
};

struct Binarization {
  Instance instance;
  std::vector<VarMap> map;  // indexed by original var id

  /// Recovers an original-space assignment from a binarized one.
  Assignment decode(std::span<const double> bin) const;
};

/// Rewrites every finite-bound integer variable as a binary expansion
/// x = lb + sum_k 2^k b_k with ceil(log2(ub-lb+1)) bits, adding a range
/// constraint when the span is not a power of two; binary and continuous
/// variables pass through; lb == ub integers fold to constants. Bit
/// variables are simplified with b^2 = b during expansion.
Binarization binarize(const Instance& inst);

}  // namespace poip
