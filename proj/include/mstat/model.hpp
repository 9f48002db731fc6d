#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mstat/expr.hpp"
#include "mstat/feasibility.hpp"
#include "mstat/numeric.hpp"

namespace mstat {

/// { v : A v <= b }. Zero rows denotes the whole space.
struct Polyhedron {
  Mat A;
  Vec b;
  std::size_t dim = 0;

  static Polyhedron whole_space(std::size_t dim);

  std::size_t rows() const { return A.rows(); }
  bool contains(std::span<const double> v, double tol) const;
};

/// Componentwise interval product; bounds may be infinite.
struct BoxSet {
  Vec lower;
  Vec upper;

  std::size_t dim() const { return lower.size(); }
  bool contains(std::span<const double> v, double tol) const;

  /// Inequality form, one row per finite bound: for each coordinate the
  /// upper row (e_i . v <= u_i) precedes the lower row (-e_i . v <= -l_i).
  Polyhedron to_polyhedron() const;
};

using LowerSet = std::variant<BoxSet, Polyhedron>;

std::size_t dim(const LowerSet& set);
bool contains(const LowerSet& set, std::span<const double> v, double tol);

/// Vector field R^(n+m) -> R^k backed by expression trees (k = 1 for a
/// scalar function).
class SmoothFunction {
 public:
  SmoothFunction() = default;
  SmoothFunction(std::vector<Expr> components, std::size_t vars)
      : components_(std::move(components)), vars_(vars) {}
  SmoothFunction(Expr scalar, std::size_t vars) : components_{std::move(scalar)}, vars_(vars) {}

  std::size_t size() const { return components_.size(); }
  std::size_t vars() const { return vars_; }
  const Expr& operator[](std::size_t i) const { return components_[i]; }
  const std::vector<Expr>& components() const { return components_; }

  bool is_rational() const;
  Vec evaluate(std::span<const double> point) const;
  /// Jacobian (size() x vars()) by symbolic differentiation.
  Mat jacobian(std::span<const double> point) const;

 private:
  std::vector<Expr> components_;
  std::size_t vars_ = 0;
};

struct Tolerances {
  double active = 1e-8;      // active-set detection
  double residual = 1e-9;    // equation residual
  double cone_margin = 1e-9; // cone membership
};

struct BilevelProblem {
  std::size_t n = 0;  // upper-level dimension
  std::size_t m = 0;  // lower-level dimension
  SmoothFunction F;   // upper-level objective
  SmoothFunction f;   // lower-level objective
  Polyhedron omega;   // upper-level feasible set, dim n
  LowerSet K;         // lower-level feasible set, dim m, independent of x
};

/// min objective(x,y) s.t. 0 in G(x,y) + N_K(y), x in Omega.
struct MpecProblem {
  std::size_t n = 0;
  std::size_t m = 0;
  SmoothFunction objective;
  SmoothFunction G;  // m components
  LowerSet K;
  Polyhedron omega;
};

/// Throws InputError listing every violation: dimension mismatches,
/// undeclared variables, inverted box bounds, empty K or Omega.
void validate(const BilevelProblem& problem);
void validate(const MpecProblem& problem);

/// objective = F, G = grad_y f (symbolic), K and Omega carried over.
MpecProblem to_mpec(const BilevelProblem& problem);

/// Candidate point with z = -grad_y f(x, y) (or -G(x, y) for an MPEC).
struct Candidate {
  Vec x;
  Vec y;
  Vec z;

  Vec joint() const;
};

Candidate make_candidate(const BilevelProblem& problem, Vec x, Vec y);
Candidate make_candidate(const MpecProblem& problem, Vec x, Vec y);

struct MStationarityCertificate {
  std::string branch;
  Vec alpha;  // identically zero: K does not depend on x
  Vec beta;
  Vec gamma;
  Vec eta;    // A_active^T mu, an element of N(x, Omega)
  Vec mu;     // one entry per active row of Omega
  std::vector<std::size_t> omega_active;
  double equation_residual = 0.0;
  double cone_margin = 0.0;
  ArithmeticMode mode = ArithmeticMode::Rational;
  // Exact multipliers in rational mode.
  std::optional<QVec> beta_exact, gamma_exact, mu_exact;
};

struct QualificationWitness {
  Vec x_star;
  Vec y_star;
  Vec z_star;
  std::string branch;
};

struct QualificationReport {
  bool holds = true;
  std::optional<QualificationWitness> witness;
};

}  // namespace mstat
