#include "mstat/calculus.hpp"

#include <algorithm>
#include <cmath>

#include "mstat/errors.hpp"

namespace mstat {

namespace {

class PointEvaluator {
 public:
  PointEvaluator(std::span<const double> p, bool want_exact) : p_(p) {
    if (want_exact) pq_ = to_rational(p);
  }

  bool exact() const { return pq_.has_value(); }

  double value(const Expr& e, const std::string& block) const {
    try {
      return evaluate(e, p_);
    } catch (const DomainError& err) {
      throw DomainError("in " + block + ": " + err.what());
    }
  }

  Rational exact_value(const Expr& e, const std::string& block) const {
    try {
      auto v = evaluate_exact(e, *pq_);
      if (!v) throw InternalError("non-rational tree in exact evaluation of " + block);
      return *v;
    } catch (const DomainError& err) {
      throw DomainError("in " + block + ": " + err.what());
    }
  }

 private:
  std::span<const double> p_;
  std::optional<QVec> pq_;
};

std::string entry(const std::string& block, std::size_t i) { return block + "[" + std::to_string(i + 1) + "]"; }
std::string entry(const std::string& block, std::size_t i, std::size_t j) {
  return block + "[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) + "]";
}

// Shared assembly: scalar objective `obj`, vector field `g` over n + m variables.
DerivativeBundle assemble(const Expr& obj, const std::vector<Expr>& g, std::size_t n, std::size_t m,
                          const Candidate& c, const DerivativeOptions& opts, const Expr* f) {
  Vec p = c.joint();
  bool rational = obj.is_rational() && std::all_of(g.begin(), g.end(), [](const Expr& e) { return e.is_rational(); });
  PointEvaluator ev(p, rational);

  std::vector<Expr> dobj(n + m);
  for (std::size_t v = 0; v < n + m; ++v) dobj[v] = differentiate(obj, v);
  std::vector<std::vector<Expr>> dg(m, std::vector<Expr>(n + m));
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t v = 0; v < n + m; ++v) dg[j][v] = differentiate(g[j], v);

  DerivativeBundle b;
  b.xi1.resize(n);
  b.xi2.resize(m);
  b.grad_y_f.resize(m);
  b.hess_yx = Mat(m, n);
  b.hess_yy = Mat(m, m);
  for (std::size_t i = 0; i < n; ++i) b.xi1[i] = ev.value(dobj[i], entry("xi1", i));
  for (std::size_t j = 0; j < m; ++j) b.xi2[j] = ev.value(dobj[n + j], entry("xi2", j));
  for (std::size_t j = 0; j < m; ++j) {
    b.grad_y_f[j] = ev.value(g[j], entry("grad_y f", j));
    for (std::size_t i = 0; i < n; ++i) b.hess_yx(j, i) = ev.value(dg[j][i], entry("hess_yx f", j, i));
    for (std::size_t k = 0; k < m; ++k) b.hess_yy(j, k) = ev.value(dg[j][n + k], entry("hess_yy f", j, k));
  }

  if (ev.exact()) {
    QVec xi1(n), xi2(m), gy(m);
    QMat hyx(m, n), hyy(m, m);
    for (std::size_t i = 0; i < n; ++i) xi1[i] = ev.exact_value(dobj[i], entry("xi1", i));
    for (std::size_t j = 0; j < m; ++j) xi2[j] = ev.exact_value(dobj[n + j], entry("xi2", j));
    for (std::size_t j = 0; j < m; ++j) {
      gy[j] = ev.exact_value(g[j], entry("grad_y f", j));
      for (std::size_t i = 0; i < n; ++i) hyx(j, i) = ev.exact_value(dg[j][i], entry("hess_yx f", j, i));
      for (std::size_t k = 0; k < m; ++k) hyy(j, k) = ev.exact_value(dg[j][n + k], entry("hess_yy f", j, k));
    }
    b.xi1_exact = std::move(xi1);
    b.xi2_exact = std::move(xi2);
    b.grad_y_f_exact = std::move(gy);
    b.hess_yx_exact = std::move(hyx);
    b.hess_yy_exact = std::move(hyy);
  }

  if (opts.verify) {
    double worst = 0.0;
    std::string worst_block;
    auto check = [&](double symbolic, const Expr& e, std::size_t var, const std::string& block) {
      double fd;
      try {
        fd = central_difference(e, p, var);
      } catch (const DomainError& err) {
        throw DomainError("in finite difference of " + block + ": " + err.what());
      }
      double err = std::fabs(symbolic - fd) / std::max(1.0, std::fabs(fd));
      if (err > worst) {
        worst = err;
        worst_block = block;
      }
    };
    for (std::size_t i = 0; i < n; ++i) check(b.xi1[i], obj, i, entry("xi1", i));
    for (std::size_t j = 0; j < m; ++j) check(b.xi2[j], obj, n + j, entry("xi2", j));
    for (std::size_t j = 0; j < m; ++j) {
      if (f) check(b.grad_y_f[j], *f, n + j, entry("grad_y f", j));
      for (std::size_t i = 0; i < n; ++i) check(b.hess_yx(j, i), g[j], i, entry("hess_yx f", j, i));
      for (std::size_t k = 0; k < m; ++k) check(b.hess_yy(j, k), g[j], n + k, entry("hess_yy f", j, k));
    }
    b.fd_max_error = worst;
    if (worst > FiniteDifferenceConfig{}.relative_tolerance)
      throw InternalError("derivative check failed in " + worst_block + " (relative error " + std::to_string(worst) +
                          ")");
  }
  return b;
}

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw InputError(std::string(what) + " has length " + std::to_string(got) + ", expected " + std::to_string(want));
}

}  // namespace

DerivativeBundle derivative_bundle(const BilevelProblem& problem, const Candidate& c, const DerivativeOptions& opts) {
  require_size(c.x.size(), problem.n, "candidate x");
  require_size(c.y.size(), problem.m, "candidate y");
  std::vector<Expr> g;
  for (std::size_t j = 0; j < problem.m; ++j) g.push_back(differentiate(problem.f[0], problem.n + j));
  return assemble(problem.F[0], g, problem.n, problem.m, c, opts, &problem.f[0]);
}

DerivativeBundle derivative_bundle(const MpecProblem& problem, const Candidate& c, const DerivativeOptions& opts) {
  require_size(c.x.size(), problem.n, "candidate x");
  require_size(c.y.size(), problem.m, "candidate y");
  DerivativeBundle b = assemble(problem.objective[0], problem.G.components(), problem.n, problem.m, c, opts, nullptr);
  // Float Jacobian rows of G through the scalarization <e_j, G>.
  Vec p = c.joint();
  for (std::size_t j = 0; j < problem.m; ++j) {
    Vec e(problem.m, 0.0);
    e[j] = 1.0;
    Vec row = scalarized_subdifferential(problem.G, e, p);
    for (std::size_t i = 0; i < problem.n; ++i) b.hess_yx(j, i) = row[i];
    for (std::size_t k = 0; k < problem.m; ++k) b.hess_yy(j, k) = row[problem.n + k];
  }
  return b;
}

Vec coderivative_smooth(const SmoothFunction& h, std::span<const double> point, std::span<const double> y_star) {
  require_size(point.size(), h.vars(), "point");
  require_size(y_star.size(), h.size(), "dual vector");
  Mat J = h.jacobian(point);
  Vec out(h.vars(), 0.0);
  for (std::size_t i = 0; i < h.size(); ++i)
    for (std::size_t v = 0; v < h.vars(); ++v) out[v] += J(i, v) * y_star[i];
  return out;
}

Vec scalarized_subdifferential(const SmoothFunction& h, std::span<const double> z_star,
                               std::span<const double> point) {
  require_size(point.size(), h.vars(), "point");
  require_size(z_star.size(), h.size(), "dual vector");
  Expr s = Expr::constant(0);
  for (std::size_t i = 0; i < h.size(); ++i) s = s + Expr::constant(to_rational(z_star[i])) * h[i];
  Vec out(h.vars());
  for (std::size_t v = 0; v < h.vars(); ++v) out[v] = evaluate(differentiate(s, v), point);
  return out;
}

PolyhedralCone singular_subdifferential_smooth(std::span<const double> point) {
  return PolyhedralCone::zero(point.size());
}

}  // namespace mstat
