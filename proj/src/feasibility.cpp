#include "mstat/feasibility.hpp"

#include <algorithm>
#include <cmath>

#include "mstat/errors.hpp"

namespace mstat {

const char* to_string(ArithmeticMode mode) { return mode == ArithmeticMode::Rational ? "rational" : "float"; }

template <class T>
void LinearSystem<T>::add_equality(std::span<const T> coeffs, T rhs) {
  if (coeffs.size() != vars_) throw InternalError("equality row has wrong width");
  if (eq_.rows() == 0) eq_ = Matrix<T>(0, vars_);
  eq_.append_row(coeffs);
  eq_rhs_.push_back(std::move(rhs));
}

template <class T>
void LinearSystem<T>::add_inequality(std::span<const T> coeffs, T rhs) {
  if (coeffs.size() != vars_) throw InternalError("inequality row has wrong width");
  if (ineq_.rows() == 0) ineq_ = Matrix<T>(0, vars_);
  ineq_.append_row(coeffs);
  ineq_rhs_.push_back(std::move(rhs));
}

template <class T>
bool LinearSystem<T>::homogeneous() const {
  auto zero = [](const T& v) { return v == T(0); };
  return std::all_of(eq_rhs_.begin(), eq_rhs_.end(), zero) &&
         std::all_of(ineq_rhs_.begin(), ineq_rhs_.end(), zero);
}

template <class T>
double LinearSystem<T>::max_violation(std::span<const T> v) const {
  double worst = 0.0;
  for (std::size_t r = 0; r < eq_.rows(); ++r) {
    T s = -eq_rhs_[r];
    for (std::size_t c = 0; c < vars_; ++c) s += eq_(r, c) * v[c];
    worst = std::max(worst, std::fabs(to_double(s)));
  }
  for (std::size_t r = 0; r < ineq_.rows(); ++r) {
    T s = -ineq_rhs_[r];
    for (std::size_t c = 0; c < vars_; ++c) s += ineq_(r, c) * v[c];
    worst = std::max(worst, to_double(s));
  }
  for (std::size_t c = 0; c < vars_; ++c)
    if (nonneg_[c]) worst = std::max(worst, -to_double(v[c]));
  return worst;
}

LinearSystem<double> to_float(const LinearSystem<Rational>& sys) {
  LinearSystem<double> out(sys.vars());
  for (std::size_t i = 0; i < sys.vars(); ++i) out.set_nonneg(i, sys.nonneg(i));
  Vec row(sys.vars());
  for (std::size_t r = 0; r < sys.eq().rows(); ++r) {
    for (std::size_t c = 0; c < sys.vars(); ++c) row[c] = to_double(sys.eq()(r, c));
    out.add_equality(row, to_double(sys.eq_rhs()[r]));
  }
  for (std::size_t r = 0; r < sys.ineq().rows(); ++r) {
    for (std::size_t c = 0; c < sys.vars(); ++c) row[c] = to_double(sys.ineq()(r, c));
    out.add_inequality(row, to_double(sys.ineq_rhs()[r]));
  }
  return out;
}

namespace {

// Dense tableau over standard form { w : A w = r, w >= 0 }.
template <class T>
class Tableau {
 public:
  Tableau(const LinearSystem<T>& sys, const SolverOptions& opts) : sys_(sys), opts_(opts) { build(); }

  LpResult<T> solve(std::span<const T> objective) {
    LpResult<T> result;
    if (!phase_one()) return result;
    drop_artificials();
    if (!objective.empty()) {
      if (!phase_two(objective)) {
        result.status = LpStatus::Unbounded;
        return result;
      }
    }
    result.status = LpStatus::Feasible;
    result.point = extract();
    if (!objective.empty()) {
      T value(0);
      for (std::size_t i = 0; i < sys_.vars(); ++i) value += objective[i] * result.point[i];
      result.objective = value;
    }
    return result;
  }

 private:
  bool is_zero(const T& v) const { return ScalarTraits<T>::is_zero(v, opts_.pivot_tol); }
  bool is_negative(const T& v) const {
    if constexpr (ScalarTraits<T>::exact)
      return sgn(v) < 0;
    else
      return v < -opts_.pivot_tol;
  }
  bool is_positive(const T& v) const {
    if constexpr (ScalarTraits<T>::exact)
      return sgn(v) > 0;
    else
      return v > opts_.pivot_tol;
  }

  void build() {
    const std::size_t n = sys_.vars();
    // structural columns: v_i = pos_i - neg_i (neg only for free variables)
    pos_col_.resize(n);
    neg_col_.assign(n, npos);
    std::size_t cols = 0;
    for (std::size_t i = 0; i < n; ++i) {
      pos_col_[i] = cols++;
      if (!sys_.nonneg(i)) neg_col_[i] = cols++;
    }
    const std::size_t n_eq = sys_.eq().rows();
    const std::size_t n_ineq = sys_.ineq().rows();
    const std::size_t first_slack = cols;
    cols += n_ineq;
    first_artificial_ = cols;
    rows_ = n_eq + n_ineq;
    cols += rows_;
    cols_ = cols;

    a_ = Matrix<T>(rows_, cols_);
    b_.assign(rows_, T(0));
    basis_.assign(rows_, 0);
    live_.assign(rows_, true);

    auto fill = [&](std::size_t r, std::span<const T> coeffs, const T& rhs, std::size_t slack) {
      for (std::size_t i = 0; i < n; ++i) {
        a_(r, pos_col_[i]) = coeffs[i];
        if (neg_col_[i] != npos) a_(r, neg_col_[i]) = -coeffs[i];
      }
      if (slack != npos) a_(r, slack) = T(1);
      b_[r] = rhs;
      if (is_negative_strict(rhs)) {
        for (std::size_t c = 0; c < first_artificial_; ++c) a_(r, c) = -a_(r, c);
        b_[r] = -b_[r];
      }
      a_(r, first_artificial_ + r) = T(1);
      basis_[r] = first_artificial_ + r;
    };
    for (std::size_t r = 0; r < n_eq; ++r) fill(r, sys_.eq().row(r), sys_.eq_rhs()[r], npos);
    for (std::size_t r = 0; r < n_ineq; ++r)
      fill(n_eq + r, sys_.ineq().row(r), sys_.ineq_rhs()[r], first_slack + r);
  }

  static bool is_negative_strict(const T& v) {
    if constexpr (ScalarTraits<T>::exact)
      return sgn(v) < 0;
    else
      return v < 0.0;
  }

  void set_costs(const std::vector<T>& cost) {
    cost_ = cost;
    d_.assign(cols_, T(0));
    value_ = T(0);
    for (std::size_t c = 0; c < cols_; ++c) d_[c] = cost_[c];
    for (std::size_t r = 0; r < rows_; ++r) {
      if (!live_[r]) continue;
      const T& cb = cost_[basis_[r]];
      if (cb == T(0)) continue;
      for (std::size_t c = 0; c < cols_; ++c) d_[c] -= cb * a_(r, c);
      value_ += cb * b_[r];
    }
  }

  // Bland's rule: lowest-index improving column, lowest-index leaving
  // basic variable among ratio ties. Returns false if unbounded.
  bool run(std::size_t allowed_cols) {
    const std::size_t cap = 10 * (rows_ + cols_);
    for (std::size_t pivots = 0;; ++pivots) {
      if (pivots > cap) throw InternalError("simplex cycling guard tripped");
      std::size_t enter = npos;
      for (std::size_t c = 0; c < allowed_cols; ++c)
        if (is_negative(d_[c])) {
          enter = c;
          break;
        }
      if (enter == npos) return true;

      std::size_t leave = npos;
      T best_ratio{};
      for (std::size_t r = 0; r < rows_; ++r) {
        if (!live_[r] || !is_positive(a_(r, enter))) continue;
        T ratio = b_[r] / a_(r, enter);
        if (leave == npos || ratio < best_ratio || (ratio == best_ratio && basis_[r] < basis_[leave])) {
          leave = r;
          best_ratio = ratio;
        }
      }
      if (leave == npos) return false;
      pivot(leave, enter);
    }
  }

  void pivot(std::size_t r, std::size_t s) {
    const T inv = T(1) / a_(r, s);
    for (std::size_t c = 0; c < cols_; ++c) a_(r, c) *= inv;
    b_[r] *= inv;
    a_(r, s) = T(1);
    for (std::size_t i = 0; i < rows_; ++i) {
      if (i == r || !live_[i]) continue;
      const T f = a_(i, s);
      if (f == T(0)) continue;
      for (std::size_t c = 0; c < cols_; ++c) a_(i, c) -= f * a_(r, c);
      b_[i] -= f * b_[r];
      a_(i, s) = T(0);
      if constexpr (!ScalarTraits<T>::exact) {
        if (std::fabs(b_[i]) < 1e-15) b_[i] = 0.0;
      }
    }
    const T f = d_[s];
    if (f != T(0)) {
      for (std::size_t c = 0; c < cols_; ++c) d_[c] -= f * a_(r, c);
      value_ += f * b_[r];
      d_[s] = T(0);
    }
    basis_[r] = s;
  }

  bool phase_one() {
    std::vector<T> cost(cols_, T(0));
    for (std::size_t c = first_artificial_; c < cols_; ++c) cost[c] = T(1);
    set_costs(cost);
    run(cols_);
    if constexpr (ScalarTraits<T>::exact)
      return sgn(value_) == 0;
    else
      return value_ <= opts_.infeasibility_tol;
  }

  void drop_artificials() {
    for (std::size_t r = 0; r < rows_; ++r) {
      if (!live_[r] || basis_[r] < first_artificial_) continue;
      std::size_t col = npos;
      for (std::size_t c = 0; c < first_artificial_; ++c)
        if (!is_zero(a_(r, c))) {
          col = c;
          break;
        }
      if (col == npos) {
        live_[r] = false;  // redundant row
        continue;
      }
      pivot(r, col);
    }
  }

  bool phase_two(std::span<const T> objective) {
    std::vector<T> cost(cols_, T(0));
    for (std::size_t i = 0; i < sys_.vars(); ++i) {
      cost[pos_col_[i]] = objective[i];
      if (neg_col_[i] != npos) cost[neg_col_[i]] = -objective[i];
    }
    set_costs(cost);
    return run(first_artificial_);
  }

  std::vector<T> extract() const {
    std::vector<T> col_value(cols_, T(0));
    for (std::size_t r = 0; r < rows_; ++r)
      if (live_[r]) col_value[basis_[r]] = b_[r];
    std::vector<T> v(sys_.vars(), T(0));
    for (std::size_t i = 0; i < sys_.vars(); ++i) {
      v[i] = col_value[pos_col_[i]];
      if (neg_col_[i] != npos) v[i] -= col_value[neg_col_[i]];
    }
    return v;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  const LinearSystem<T>& sys_;
  SolverOptions opts_;
  std::vector<std::size_t> pos_col_, neg_col_;
  std::size_t rows_ = 0, cols_ = 0, first_artificial_ = 0;
  Matrix<T> a_;
  std::vector<T> b_;
  std::vector<std::size_t> basis_;
  std::vector<bool> live_;
  std::vector<T> cost_, d_;
  T value_{};
};

}  // namespace

template <class T>
LpResult<T> find_feasible_point(const LinearSystem<T>& sys, const SolverOptions& opts) {
  Tableau<T> t(sys, opts);
  return t.solve({});
}

template <class T>
LpResult<T> minimize(const LinearSystem<T>& sys, std::span<const T> objective, const SolverOptions& opts) {
  if (objective.size() != sys.vars()) throw InternalError("objective has wrong width");
  Tableau<T> t(sys, opts);
  return t.solve(objective);
}

FeasibilityReport feasible(const LinearSystem<Rational>& sys, ArithmeticMode mode, const SolverOptions& opts) {
  FeasibilityReport report;
  if (mode == ArithmeticMode::Rational) {
    auto r = find_feasible_point(sys, opts);
    report.feasible = r.status == LpStatus::Feasible;
    if (report.feasible) {
      report.point = to_double(r.point);
      report.exact_point = std::move(r.point);
    }
  } else {
    auto r = find_feasible_point(to_float(sys), opts);
    report.feasible = r.status == LpStatus::Feasible;
    if (report.feasible) report.point = std::move(r.point);
  }
  return report;
}

template <class T>
ConeProbeResult cone_nonzero(const LinearSystem<T>& sys, std::span<const std::size_t> probe_vars,
                             const SolverOptions& opts) {
  if (!sys.homogeneous()) throw InternalError("cone_nonzero needs a homogeneous system");
  std::vector<std::size_t> vars(probe_vars.begin(), probe_vars.end());
  if (vars.empty())
    for (std::size_t i = 0; i < sys.vars(); ++i) vars.push_back(i);

  ConeProbeResult result;
  std::vector<T> unit(sys.vars(), T(0));
  for (std::size_t var : vars) {
    for (int sign : {1, -1}) {
      LinearSystem<T> probe = sys;
      std::fill(unit.begin(), unit.end(), T(0));
      unit[var] = T(sign);
      probe.add_equality(unit, T(1));
      auto r = find_feasible_point(probe, opts);
      if (r.status != LpStatus::Feasible) continue;
      Vec w = [&] {
        if constexpr (ScalarTraits<T>::exact)
          return to_double(std::span<const T>(r.point));
        else
          return r.point;
      }();
      double norm = 0.0;
      for (std::size_t v : vars) norm += w[v] * w[v];
      norm = std::sqrt(norm);
      for (auto& x : w) x /= norm;
      result.nonzero = true;
      result.witness = std::move(w);
      result.probe_var = var;
      result.probe_sign = sign;
      return result;
    }
  }
  return result;
}

template class LinearSystem<double>;
template class LinearSystem<Rational>;
template LpResult<double> find_feasible_point(const LinearSystem<double>&, const SolverOptions&);
template LpResult<Rational> find_feasible_point(const LinearSystem<Rational>&, const SolverOptions&);
template LpResult<double> minimize(const LinearSystem<double>&, std::span<const double>, const SolverOptions&);
template LpResult<Rational> minimize(const LinearSystem<Rational>&, std::span<const Rational>,
                                     const SolverOptions&);
template ConeProbeResult cone_nonzero(const LinearSystem<double>&, std::span<const std::size_t>,
                                      const SolverOptions&);
template ConeProbeResult cone_nonzero(const LinearSystem<Rational>&, std::span<const std::size_t>,
                                      const SolverOptions&);

}  // namespace mstat
