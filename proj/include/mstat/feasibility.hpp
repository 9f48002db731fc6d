#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mstat/numeric.hpp"

namespace mstat {

enum class ArithmeticMode { Float, Rational };

const char* to_string(ArithmeticMode mode);

/// { v : E v = g, M v <= h, v_i >= 0 for i in nonneg } over T = double or
/// Rational. Variables not marked nonneg are free.
template <class T>
class LinearSystem {
 public:
  LinearSystem() = default;
  explicit LinearSystem(std::size_t vars) : vars_(vars), nonneg_(vars, false) {}

  std::size_t vars() const { return vars_; }

  void add_equality(std::span<const T> coeffs, T rhs);
  void add_inequality(std::span<const T> coeffs, T rhs);
  void set_nonneg(std::size_t var, bool value = true) { nonneg_.at(var) = value; }

  const Matrix<T>& eq() const { return eq_; }
  const std::vector<T>& eq_rhs() const { return eq_rhs_; }
  const Matrix<T>& ineq() const { return ineq_; }
  const std::vector<T>& ineq_rhs() const { return ineq_rhs_; }
  bool nonneg(std::size_t var) const { return nonneg_[var]; }

  bool homogeneous() const;

  /// Largest violation of any row or sign constraint at `v`.
  double max_violation(std::span<const T> v) const;

 private:
  std::size_t vars_ = 0;
  Matrix<T> eq_;
  std::vector<T> eq_rhs_;
  Matrix<T> ineq_;
  std::vector<T> ineq_rhs_;
  std::vector<bool> nonneg_;
};

LinearSystem<double> to_float(const LinearSystem<Rational>& sys);

struct SolverOptions {
  /// Phase-1 optimum above this certifies infeasibility (float mode only).
  double infeasibility_tol = 1e-9;
  /// Entries smaller than this are treated as zero when pivoting (float mode).
  double pivot_tol = 1e-11;
};

enum class LpStatus { Feasible, Infeasible, Unbounded };

template <class T>
struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  std::vector<T> point;  // empty unless Feasible
  T objective{};
};

/// Phase-1 simplex with Bland's rule. Returns a basic feasible point or
/// Infeasible. Throws InternalError if the pivot count exceeds
/// 10 * (rows + columns) in a phase.
template <class T>
LpResult<T> find_feasible_point(const LinearSystem<T>& sys, const SolverOptions& opts = {});

/// Phase 1 followed by minimizing `objective . v` with Bland's rule.
template <class T>
LpResult<T> minimize(const LinearSystem<T>& sys, std::span<const T> objective,
                     const SolverOptions& opts = {});

/// Mode-dispatching feasibility check on exact data: Rational solves as is,
/// Float converts every coefficient to the nearest double first. The point
/// is reported in doubles either way.
struct FeasibilityReport {
  bool feasible = false;
  Vec point;
  std::optional<QVec> exact_point;  // Rational mode only
};

FeasibilityReport feasible(const LinearSystem<Rational>& sys, ArithmeticMode mode,
                           const SolverOptions& opts = {});

/// Decides whether the homogeneous system admits a nonzero solution.
///
/// Probes each listed variable with each sign by appending s * v_i = 1 and
/// solving for feasibility; the first success wins. The witness is the full
/// solution vector scaled so that the probed components have unit Euclidean
/// norm. Variables default to all of them.
struct ConeProbeResult {
  bool nonzero = false;
  Vec witness;
  std::size_t probe_var = 0;
  int probe_sign = 0;
};

template <class T>
ConeProbeResult cone_nonzero(const LinearSystem<T>& sys, std::span<const std::size_t> probe_vars = {},
                             const SolverOptions& opts = {});

}  // namespace mstat
