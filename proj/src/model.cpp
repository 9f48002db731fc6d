#include "mstat/model.hpp"

#include <cmath>

#include "mstat/errors.hpp"

namespace mstat {

Polyhedron Polyhedron::whole_space(std::size_t dim) {
  Polyhedron p;
  p.A = Mat(0, dim);
  p.dim = dim;
  return p;
}

bool Polyhedron::contains(std::span<const double> v, double tol) const {
  for (std::size_t r = 0; r < A.rows(); ++r)
    if (dot(A.row(r), v) > b[r] + tol) return false;
  return true;
}

bool BoxSet::contains(std::span<const double> v, double tol) const {
  for (std::size_t i = 0; i < dim(); ++i)
    if (v[i] < lower[i] - tol || v[i] > upper[i] + tol) return false;
  return true;
}

Polyhedron BoxSet::to_polyhedron() const {
  Polyhedron p;
  p.dim = dim();
  p.A = Mat(0, dim());
  Vec row(dim(), 0.0);
  for (std::size_t i = 0; i < dim(); ++i) {
    if (std::isfinite(upper[i])) {
      row[i] = 1.0;
      p.A.append_row(row);
      p.b.push_back(upper[i]);
    }
    if (std::isfinite(lower[i])) {
      row[i] = -1.0;
      p.A.append_row(row);
      p.b.push_back(-lower[i]);
    }
    row[i] = 0.0;
  }
  return p;
}

std::size_t dim(const LowerSet& set) {
  return std::visit(
      [](const auto& s) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, BoxSet>)
          return s.dim();
        else
          return s.dim;
      },
      set);
}

bool contains(const LowerSet& set, std::span<const double> v, double tol) {
  return std::visit([&](const auto& s) { return s.contains(v, tol); }, set);
}

bool SmoothFunction::is_rational() const {
  for (const auto& c : components_)
    if (!c.is_rational()) return false;
  return true;
}

Vec SmoothFunction::evaluate(std::span<const double> point) const {
  Vec out;
  out.reserve(components_.size());
  for (const auto& c : components_) out.push_back(mstat::evaluate(c, point));
  return out;
}

Mat SmoothFunction::jacobian(std::span<const double> point) const {
  Mat J(components_.size(), vars_);
  for (std::size_t i = 0; i < components_.size(); ++i)
    for (std::size_t v = 0; v < vars_; ++v) J(i, v) = mstat::evaluate(differentiate(components_[i], v), point);
  return J;
}

namespace {

bool polyhedron_nonempty(const Polyhedron& p) {
  LinearSystem<Rational> sys(p.dim);
  for (std::size_t r = 0; r < p.rows(); ++r) sys.add_inequality(to_rational(p.A.row(r)), to_rational(p.b[r]));
  return feasible(sys, ArithmeticMode::Rational).feasible;
}

void check_polyhedron(const Polyhedron& p, std::size_t dim, const std::string& name,
                      std::vector<std::string>& issues) {
  if (p.dim != dim) {
    issues.push_back(name + " has dimension " + std::to_string(p.dim) + ", expected " + std::to_string(dim));
    return;
  }
  if (p.A.rows() > 0 && p.A.cols() != dim) issues.push_back(name + ".A has the wrong number of columns");
  if (p.A.rows() != p.b.size()) {
    issues.push_back(name + ".A and " + name + ".b have different row counts");
    return;
  }
  for (std::size_t r = 0; r < p.rows(); ++r) {
    for (double v : p.A.row(r))
      if (!std::isfinite(v)) issues.push_back(name + ".A has a non-finite entry");
    if (!std::isfinite(p.b[r])) issues.push_back(name + ".b has a non-finite entry");
  }
  if (issues.empty() && !polyhedron_nonempty(p)) issues.push_back("empty " + name);
}

void check_lower_set(const LowerSet& K, std::size_t m, std::vector<std::string>& issues) {
  if (const auto* box = std::get_if<BoxSet>(&K)) {
    if (box->lower.size() != m || box->upper.size() != m) {
      issues.push_back("K box bounds must have length " + std::to_string(m));
      return;
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (std::isnan(box->lower[i]) || std::isnan(box->upper[i]) || box->lower[i] == INFINITY ||
          box->upper[i] == -INFINITY)
        issues.push_back("K box bound " + std::to_string(i + 1) + " is invalid");
      else if (box->lower[i] > box->upper[i])
        issues.push_back("empty K (lower bound exceeds upper bound in coordinate " + std::to_string(i + 1) + ")");
    }
  } else {
    std::vector<std::string> local;
    check_polyhedron(std::get<Polyhedron>(K), m, "K", local);
    issues.insert(issues.end(), local.begin(), local.end());
  }
}

void check_function(const SmoothFunction& fn, std::size_t vars, std::size_t components, const std::string& name,
                    std::vector<std::string>& issues) {
  if (fn.size() != components)
    issues.push_back(name + " must have " + std::to_string(components) + " component(s)");
  if (fn.vars() != vars) issues.push_back(name + " is declared over the wrong number of variables");
  for (const auto& c : fn.components())
    if (c.arity() > vars) issues.push_back(name + " references an undeclared variable");
}

}  // namespace

void validate(const BilevelProblem& problem) {
  std::vector<std::string> issues;
  if (problem.m == 0) issues.push_back("lower-level dimension m must be positive");
  check_function(problem.F, problem.n + problem.m, 1, "F", issues);
  check_function(problem.f, problem.n + problem.m, 1, "f", issues);
  std::vector<std::string> omega_issues;
  check_polyhedron(problem.omega, problem.n, "Omega", omega_issues);
  issues.insert(issues.end(), omega_issues.begin(), omega_issues.end());
  check_lower_set(problem.K, problem.m, issues);
  if (!issues.empty()) throw InputError(std::move(issues));
}

void validate(const MpecProblem& problem) {
  std::vector<std::string> issues;
  if (problem.m == 0) issues.push_back("lower-level dimension m must be positive");
  check_function(problem.objective, problem.n + problem.m, 1, "objective", issues);
  check_function(problem.G, problem.n + problem.m, problem.m, "G", issues);
  std::vector<std::string> omega_issues;
  check_polyhedron(problem.omega, problem.n, "Omega", omega_issues);
  issues.insert(issues.end(), omega_issues.begin(), omega_issues.end());
  check_lower_set(problem.K, problem.m, issues);
  if (!issues.empty()) throw InputError(std::move(issues));
}

MpecProblem to_mpec(const BilevelProblem& problem) {
  MpecProblem mpec;
  mpec.n = problem.n;
  mpec.m = problem.m;
  mpec.objective = problem.F;
  std::vector<Expr> g;
  g.reserve(problem.m);
  for (std::size_t j = 0; j < problem.m; ++j) g.push_back(differentiate(problem.f[0], problem.n + j));
  mpec.G = SmoothFunction(std::move(g), problem.n + problem.m);
  mpec.K = problem.K;
  mpec.omega = problem.omega;
  return mpec;
}

Vec Candidate::joint() const {
  Vec p = x;
  p.insert(p.end(), y.begin(), y.end());
  return p;
}

namespace {

void check_candidate_dims(std::size_t n, std::size_t m, const Vec& x, const Vec& y) {
  std::vector<std::string> issues;
  if (x.size() != n) issues.push_back("candidate x must have length " + std::to_string(n));
  if (y.size() != m) issues.push_back("candidate y must have length " + std::to_string(m));
  if (!issues.empty()) throw InputError(std::move(issues));
}

}  // namespace

Candidate make_candidate(const BilevelProblem& problem, Vec x, Vec y) {
  return make_candidate(to_mpec(problem), std::move(x), std::move(y));
}

Candidate make_candidate(const MpecProblem& problem, Vec x, Vec y) {
  check_candidate_dims(problem.n, problem.m, x, y);
  Candidate c{std::move(x), std::move(y), {}};
  Vec g = problem.G.evaluate(c.joint());
  c.z.resize(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) c.z[i] = -g[i];
  return c;
}

}  // namespace mstat
