#include "mstat/stationarity.hpp"

#include <algorithm>
#include <cmath>

#include "mstat/errors.hpp"

namespace mstat {

namespace {

// Problem data for the branch systems, exact or rounded to rationals.
struct BranchData {
  std::size_t n = 0, m = 0;
  QVec xi1, xi2;
  QMat hyx, hyy;     // m x n, m x m
  QMat A_act;        // |active| x n
  std::vector<std::size_t> active;
  ArithmeticMode mode = ArithmeticMode::Rational;
};

BranchData branch_data(const DerivativeBundle& b, const Polyhedron& omega, const std::vector<std::size_t>& active,
                       ArithmeticMode requested) {
  BranchData d;
  d.n = b.xi1.size();
  d.m = b.xi2.size();
  d.mode = requested == ArithmeticMode::Rational && b.exact() ? ArithmeticMode::Rational : ArithmeticMode::Float;
  if (b.exact()) {
    d.xi1 = *b.xi1_exact;
    d.xi2 = *b.xi2_exact;
    d.hyx = *b.hess_yx_exact;
    d.hyy = *b.hess_yy_exact;
  } else {
    d.xi1 = to_rational(b.xi1);
    d.xi2 = to_rational(b.xi2);
    d.hyx = to_rational(b.hess_yx);
    d.hyy = to_rational(b.hess_yy);
  }
  d.active = active;
  d.A_act = QMat(0, d.n);
  for (std::size_t r : active) d.A_act.append_row(to_rational(omega.A.row(r)));
  return d;
}

Vec candidate_z(const DerivativeBundle& b, const Candidate& c) {
  Vec z(b.grad_y_f.size());
  for (std::size_t j = 0; j < z.size(); ++j)
    z[j] = b.grad_y_f_exact ? -to_double((*b.grad_y_f_exact)[j]) : -b.grad_y_f[j];
  if (!c.z.empty()) {
    if (c.z.size() != z.size()) throw InputError("candidate z has the wrong length");
    for (std::size_t j = 0; j < z.size(); ++j)
      if (std::fabs(c.z[j] - z[j]) > 1e-12 * std::max(1.0, std::fabs(z[j])))
        throw InputError("candidate z differs from -grad_y f(x, y)");
  }
  return z;
}

// Appends (-u) in cone, where u occupies columns [offset, offset + dim).
void add_cone_block(LinearSystem<Rational>& sys, const PolyhedralCone& cone, std::size_t offset) {
  QVec row(sys.vars(), Rational(0));
  for (const auto& a : cone.ineq()) {
    std::fill(row.begin(), row.end(), Rational(0));
    for (std::size_t k = 0; k < a.size(); ++k) row[offset + k] = -a[k];
    sys.add_inequality(row, Rational(0));
  }
  for (const auto& a : cone.eq()) {
    std::fill(row.begin(), row.end(), Rational(0));
    for (std::size_t k = 0; k < a.size(); ++k) row[offset + k] = a[k];
    sys.add_equality(row, Rational(0));
  }
}

// Unknowns: beta (m), gamma (m), mu (|active|, nonneg).
LinearSystem<Rational> stationarity_system(const BranchData& d, const PolyhedralCone& cone) {
  const std::size_t n = d.n, m = d.m, p = d.active.size();
  const std::size_t nv = 2 * m + p;
  LinearSystem<Rational> sys(nv);
  for (std::size_t r = 0; r < p; ++r) sys.set_nonneg(2 * m + r);
  QVec row(nv);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(row.begin(), row.end(), Rational(0));
    for (std::size_t j = 0; j < m; ++j) row[m + j] = d.hyx(j, i);
    for (std::size_t r = 0; r < p; ++r) row[2 * m + r] = d.A_act(r, i);
    sys.add_equality(row, -d.xi1[i]);
  }
  for (std::size_t j = 0; j < m; ++j) {
    std::fill(row.begin(), row.end(), Rational(0));
    row[j] = -1;
    for (std::size_t k = 0; k < m; ++k) row[m + k] = d.hyy(k, j);
    sys.add_equality(row, -d.xi2[j]);
  }
  add_cone_block(sys, cone, 0);
  return sys;
}

// Float selection: least L1 norm via bounds t_v >= |v| on every unknown.
std::optional<Vec> least_l1_point(const LinearSystem<Rational>& sys) {
  const std::size_t nv = sys.vars();
  LinearSystem<Rational> ext(2 * nv);
  for (std::size_t v = 0; v < nv; ++v) {
    if (sys.nonneg(v)) ext.set_nonneg(v);
    ext.set_nonneg(nv + v);
  }
  QVec row(2 * nv);
  auto lift = [&](std::span<const Rational> r) {
    std::fill(row.begin(), row.end(), Rational(0));
    std::copy(r.begin(), r.end(), row.begin());
  };
  for (std::size_t r = 0; r < sys.eq().rows(); ++r) {
    lift(sys.eq().row(r));
    ext.add_equality(row, sys.eq_rhs()[r]);
  }
  for (std::size_t r = 0; r < sys.ineq().rows(); ++r) {
    lift(sys.ineq().row(r));
    ext.add_inequality(row, sys.ineq_rhs()[r]);
  }
  for (std::size_t v = 0; v < nv; ++v) {
    std::fill(row.begin(), row.end(), Rational(0));
    row[v] = 1;
    row[nv + v] = -1;
    ext.add_inequality(row, Rational(0));  // v <= t
    row[v] = -1;
    ext.add_inequality(row, Rational(0));  // -v <= t
  }
  Vec obj(2 * nv, 0.0);
  for (std::size_t v = nv; v < 2 * nv; ++v) obj[v] = 1.0;
  auto r = minimize(to_float(ext), std::span<const double>(obj));
  if (r.status != LpStatus::Feasible) return std::nullopt;
  r.point.resize(nv);
  return r.point;
}

MStationarityCertificate make_certificate(const BranchData& d, const LabeledCone& branch, const Vec& sol,
                                          const std::optional<QVec>& exact) {
  const std::size_t n = d.n, m = d.m, p = d.active.size();
  MStationarityCertificate cert;
  cert.branch = branch.label;
  cert.mode = d.mode;
  cert.alpha.assign(n, 0.0);
  cert.beta.assign(sol.begin(), sol.begin() + static_cast<std::ptrdiff_t>(m));
  cert.gamma.assign(sol.begin() + static_cast<std::ptrdiff_t>(m), sol.begin() + static_cast<std::ptrdiff_t>(2 * m));
  cert.mu.assign(sol.begin() + static_cast<std::ptrdiff_t>(2 * m), sol.end());
  cert.omega_active = d.active;
  cert.eta.assign(n, 0.0);
  if (exact) {
    cert.beta_exact = QVec(exact->begin(), exact->begin() + static_cast<std::ptrdiff_t>(m));
    cert.gamma_exact =
        QVec(exact->begin() + static_cast<std::ptrdiff_t>(m), exact->begin() + static_cast<std::ptrdiff_t>(2 * m));
    cert.mu_exact = QVec(exact->begin() + static_cast<std::ptrdiff_t>(2 * m), exact->end());
    for (std::size_t i = 0; i < n; ++i) {
      Rational e = 0;
      for (std::size_t r = 0; r < p; ++r) e += d.A_act(r, i) * (*cert.mu_exact)[r];
      cert.eta[i] = to_double(e);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t r = 0; r < p; ++r) cert.eta[i] += to_double(d.A_act(r, i)) * cert.mu[r];
  }

  // Residuals in doubles.
  double res = 0.0;
  if (!exact) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = to_double(d.xi1[i]) + cert.eta[i];
      for (std::size_t j = 0; j < m; ++j) s += to_double(d.hyx(j, i)) * cert.gamma[j];
      res = std::max(res, std::fabs(s));
    }
    for (std::size_t j = 0; j < m; ++j) {
      double s = to_double(d.xi2[j]) - cert.beta[j];
      for (std::size_t k = 0; k < m; ++k) s += to_double(d.hyy(k, j)) * cert.gamma[k];
      res = std::max(res, std::fabs(s));
    }
  }
  cert.equation_residual = res;  // exact solutions satisfy the system identically
  Vec neg(2 * m);
  for (std::size_t j = 0; j < m; ++j) {
    neg[j] = -cert.beta[j];
    neg[m + j] = -cert.gamma[j];
  }
  cert.cone_margin = exact ? 0.0 : branch.cone.contains(neg).margin;
  return cert;
}

GraphConeOptions graph_options(const StationarityOptions& opts) {
  GraphConeOptions g;
  g.tol = opts.tol.active;
  g.max_branches = opts.max_branches;
  g.max_active_rows = opts.max_active_rows;
  return g;
}

}  // namespace

std::vector<std::size_t> omega_active_rows(const Polyhedron& omega, std::span<const double> x, double tol) {
  if (x.size() != omega.dim) throw InputError("candidate x does not match the dimension of Omega");
  std::vector<std::size_t> act;
  for (std::size_t r = 0; r < omega.rows(); ++r) {
    double lhs = dot(omega.A.row(r), x);
    if (lhs > omega.b[r] + tol) throw PointNotInSetError("candidate x violates row " + std::to_string(r + 1) + " of Omega");
    if (lhs >= omega.b[r] - tol) act.push_back(r);
  }
  return act;
}

StationarityResult check_m_stationarity(const DerivativeBundle& bundle, const Candidate& c, const Polyhedron& omega,
                                        const LowerSet& K, const StationarityOptions& opts) {
  Vec z = candidate_z(bundle, c);
  auto active = omega_active_rows(omega, c.x, opts.tol.active);
  auto branches = graph_cone(K, c.y, z, graph_options(opts));
  BranchData d = branch_data(bundle, omega, active, opts.mode);

  StationarityResult result;
  result.mode = d.mode;
  for (std::size_t k = 0; k < branches.size(); ++k) {
    LabeledCone branch = branches.branch(k);
    auto sys = stationarity_system(d, branch.cone);
    ++result.branches_checked;
    if (d.mode == ArithmeticMode::Rational) {
      auto r = feasible(sys, ArithmeticMode::Rational);
      if (!r.feasible) continue;
      result.certificate = make_certificate(d, branch, r.point, r.exact_point);
    } else {
      auto point = least_l1_point(sys);
      if (!point) continue;
      result.certificate = make_certificate(d, branch, *point, std::nullopt);
    }
    result.stationary = true;
    break;
  }
  return result;
}

StationarityResult check_m_stationarity(const BilevelProblem& problem, const Candidate& c,
                                        const StationarityOptions& opts) {
  auto bundle = derivative_bundle(problem, c, {opts.verify_derivatives});
  return check_m_stationarity(bundle, c, problem.omega, problem.K, opts);
}

StationarityResult check_mpec_stationarity(const MpecProblem& mpec, const Candidate& c,
                                           const StationarityOptions& opts) {
  auto bundle = derivative_bundle(mpec, c, {opts.verify_derivatives});
  return check_m_stationarity(bundle, c, mpec.omega, mpec.K, opts);
}

QualificationReport check_qualification(const DerivativeBundle& bundle, const Candidate& c, const Polyhedron& omega,
                                        const LowerSet& K, const StationarityOptions& opts) {
  Vec z = candidate_z(bundle, c);
  auto active = omega_active_rows(omega, c.x, opts.tol.active);
  auto branches = graph_cone(K, c.y, z, graph_options(opts));
  BranchData d = branch_data(bundle, omega, active, opts.mode);
  const std::size_t n = d.n, m = d.m, p = active.size();

  // Unknowns: x* (n), y* (m), z* (m), mu (p, nonneg).
  const std::size_t nv = n + 2 * m + p;
  std::vector<std::size_t> probe(n + 2 * m);
  for (std::size_t i = 0; i < probe.size(); ++i) probe[i] = i;

  QualificationReport report;
  for (std::size_t k = 0; k < branches.size(); ++k) {
    LabeledCone branch = branches.branch(k);
    LinearSystem<Rational> sys(nv);
    for (std::size_t r = 0; r < p; ++r) sys.set_nonneg(n + 2 * m + r);
    QVec row(nv);
    for (std::size_t i = 0; i < n; ++i) {
      // x*_i - sum_j hess_yx(j,i) z*_j - sum_r A(r,i) mu_r = 0
      std::fill(row.begin(), row.end(), Rational(0));
      row[i] = 1;
      for (std::size_t j = 0; j < m; ++j) row[n + m + j] = -d.hyx(j, i);
      for (std::size_t r = 0; r < p; ++r) row[n + 2 * m + r] = -d.A_act(r, i);
      sys.add_equality(row, Rational(0));
      // x*_i = 0: the x-block of the graph cone is {0}
      std::fill(row.begin(), row.end(), Rational(0));
      row[i] = 1;
      sys.add_equality(row, Rational(0));
    }
    for (std::size_t j = 0; j < m; ++j) {
      std::fill(row.begin(), row.end(), Rational(0));
      row[n + j] = 1;
      for (std::size_t l = 0; l < m; ++l) row[n + m + l] = -d.hyy(l, j);
      sys.add_equality(row, Rational(0));
    }
    add_cone_block(sys, branch.cone, n);

    ConeProbeResult r = d.mode == ArithmeticMode::Rational ? cone_nonzero(sys, probe) : cone_nonzero(to_float(sys), probe);
    if (!r.nonzero) continue;
    QualificationWitness w;
    w.x_star.assign(r.witness.begin(), r.witness.begin() + static_cast<std::ptrdiff_t>(n));
    w.y_star.assign(r.witness.begin() + static_cast<std::ptrdiff_t>(n),
                    r.witness.begin() + static_cast<std::ptrdiff_t>(n + m));
    w.z_star.assign(r.witness.begin() + static_cast<std::ptrdiff_t>(n + m),
                    r.witness.begin() + static_cast<std::ptrdiff_t>(n + 2 * m));
    w.branch = branch.label;
    report.holds = false;
    report.witness = std::move(w);
    break;
  }
  return report;
}

QualificationReport check_qualification(const BilevelProblem& problem, const Candidate& c,
                                        const StationarityOptions& opts) {
  auto bundle = derivative_bundle(problem, c, {opts.verify_derivatives});
  return check_qualification(bundle, c, problem.omega, problem.K, opts);
}

CertificateReport explain_certificate(const MStationarityCertificate& cert, const DerivativeBundle& bundle,
                                      const Polyhedron& omega, const LabeledCone& branch, const Tolerances& tol) {
  const std::size_t n = bundle.xi1.size(), m = bundle.xi2.size();
  if (cert.beta.size() != m || cert.gamma.size() != m || cert.eta.size() != n || cert.alpha.size() != n ||
      cert.mu.size() != cert.omega_active.size())
    throw StaleCertificateError("certificate dimensions do not match the problem");
  if (branch.label != cert.branch) throw StaleCertificateError("certificate branch " + cert.branch + " not found");

  CertificateReport rep;
  rep.branch = cert.branch;
  rep.description = branch.description;

  for (double a : cert.alpha) rep.max_abs_alpha = std::max(rep.max_abs_alpha, std::fabs(a));
  rep.min_mu = cert.mu.empty() ? 0.0 : *std::min_element(cert.mu.begin(), cert.mu.end());

  // eta against A_active^T mu
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t r = 0; r < cert.mu.size(); ++r) {
      std::size_t row = cert.omega_active[r];
      if (row >= omega.rows()) throw StaleCertificateError("certificate names a missing row of Omega");
      s += omega.A(row, i) * cert.mu[r];
    }
    rep.eta_residual = std::max(rep.eta_residual, std::fabs(cert.eta[i] - s));
  }

  // xi1 - alpha + hess_yx^T gamma + eta = 0 and xi2 + hess_yy^T gamma - beta = 0
  for (std::size_t i = 0; i < n; ++i) {
    double s = bundle.xi1[i] - cert.alpha[i] + cert.eta[i];
    for (std::size_t j = 0; j < m; ++j) s += bundle.hess_yx(j, i) * cert.gamma[j];
    rep.equation_residual = std::max(rep.equation_residual, std::fabs(s));
  }
  for (std::size_t j = 0; j < m; ++j) {
    double s = bundle.xi2[j] - cert.beta[j];
    for (std::size_t k = 0; k < m; ++k) s += bundle.hess_yy(k, j) * cert.gamma[k];
    rep.equation_residual = std::max(rep.equation_residual, std::fabs(s));
  }

  // Cone margin by hand against the unit-scaled halfspace rows.
  Vec neg(2 * m);
  for (std::size_t j = 0; j < m; ++j) {
    neg[j] = -cert.beta[j];
    neg[m + j] = -cert.gamma[j];
  }
  for (const auto& a : branch.cone.ineq()) {
    double s = 0.0, nn = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      double ak = to_double(a[k]);
      s += ak * neg[k];
      nn += ak * ak;
    }
    rep.cone_margin = std::max(rep.cone_margin, s / std::sqrt(nn));
  }
  for (const auto& a : branch.cone.eq()) {
    double s = 0.0, nn = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      double ak = to_double(a[k]);
      s += ak * neg[k];
      nn += ak * ak;
    }
    rep.cone_margin = std::max(rep.cone_margin, std::fabs(s) / std::sqrt(nn));
  }

  std::vector<std::string> problems;
  if (rep.equation_residual > tol.residual)
    problems.push_back("equation residual " + std::to_string(rep.equation_residual));
  if (rep.eta_residual > tol.residual) problems.push_back("eta residual " + std::to_string(rep.eta_residual));
  if (rep.cone_margin > tol.cone_margin) problems.push_back("cone margin " + std::to_string(rep.cone_margin));
  if (rep.min_mu < -tol.residual) problems.push_back("negative mu " + std::to_string(rep.min_mu));
  if (rep.max_abs_alpha > tol.residual) problems.push_back("nonzero alpha");
  if (!problems.empty()) {
    std::string msg = "stale certificate:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw StaleCertificateError(msg);
  }
  return rep;
}

CertificateReport explain_certificate(const MStationarityCertificate& cert, const BilevelProblem& problem,
                                      const Candidate& c, const Tolerances& tol) {
  auto bundle = derivative_bundle(problem, c);
  Vec z(problem.m);
  for (std::size_t j = 0; j < problem.m; ++j) z[j] = -bundle.grad_y_f[j];
  GraphConeOptions g;
  g.tol = tol.active;
  auto branches = graph_cone(problem.K, c.y, z, g);
  for (std::size_t k = 0; k < branches.size(); ++k) {
    LabeledCone b = branches.branch(k);
    if (b.label == cert.branch) return explain_certificate(cert, bundle, problem.omega, b, tol);
  }
  throw StaleCertificateError("certificate branch " + cert.branch + " does not occur at this candidate");
}

}  // namespace mstat
