#pragma once

#include <cstdint>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mstat/model.hpp"

namespace mstat {

// ---------------------------------------------------------------------------
// Grid solving of the lower level.

/// Box grid over y: `resolution[i]` points per coordinate (>= 2), then one
/// refinement pass of step h / refinement around every coarse minimizer.
struct GridSpec {
  Vec lower, upper;
  std::vector<std::size_t> resolution;
  std::size_t refinement = 4;

  static GridSpec uniform(Vec lower, Vec upper, std::size_t points, std::size_t refinement = 4);
  void validate(std::size_t m) const;
};

/// Approximate S(x): grid points of K whose f value is within value_tol of
/// the grid minimum, in lexicographic order.
struct LowerSolution {
  std::vector<Vec> points;
  double value = 0.0;
};

LowerSolution solve_lower_grid(const BilevelProblem& problem, std::span<const double> x, const GridSpec& grid,
                               double value_tol = 1e-9);

struct Phi0Result {
  double value = 0.0;
  Vec y;  // argmin of F(x, .) over the approximate S(x), first in lexicographic order
  LowerSolution solutions;
};

Phi0Result phi0(const BilevelProblem& problem, std::span<const double> x, const GridSpec& grid);

struct LocalVerdict {
  bool optimal = false;
  bool value_matches = false;  // phi0(x̄) = F(x̄, ȳ) within tol
  double phi0_at_candidate = 0.0;
  double F_at_candidate = 0.0;
  std::optional<Vec> worst_x;  // grid point with the smallest phi0
  double worst_phi0 = 0.0;
  std::size_t points_checked = 0;
};

struct LocalOptions {
  double radius = 0.5;
  std::size_t x_points = 11;  // grid points per x coordinate across [x̄ - r, x̄ + r]
  double tol = 1e-6;
};

/// phi0(x̄) = F(x̄, ȳ) and phi0(x) >= phi0(x̄) - tol on grid points of
/// Omega within the ball of the given radius.
LocalVerdict verify_optimistic_local(const BilevelProblem& problem, const Candidate& c, const GridSpec& grid,
                                     const LocalOptions& opts = {});

// ---------------------------------------------------------------------------
// Sampled normal cones.

/// A closed set known through membership and a local sampler.
class LocalSet {
 public:
  virtual ~LocalSet() = default;
  virtual std::size_t dim() const = 0;
  virtual bool contains(std::span<const double> v) const = 0;
  /// Points of the set in the ball of radius r around p (p excluded).
  virtual std::vector<Vec> sample_near(std::span<const double> p, double r, std::size_t count,
                                       std::mt19937_64& rng) const = 0;
};

/// Convex polyhedron; samples every face through the point, so edges and
/// other lower-dimensional faces are represented.
class PolyhedronSet : public LocalSet {
 public:
  explicit PolyhedronSet(Polyhedron P) : P_(std::move(P)) {}
  std::size_t dim() const override { return P_.dim; }
  bool contains(std::span<const double> v) const override;
  std::vector<Vec> sample_near(std::span<const double> p, double r, std::size_t count,
                               std::mt19937_64& rng) const override;

 private:
  Polyhedron P_;
};

/// Finite union of polyhedral pieces { v : A v <= b, E v = e }.
class PieceUnionSet : public LocalSet {
 public:
  struct Piece {
    Mat A;
    Vec b;
    Mat E;
    Vec e;
  };
  PieceUnionSet(std::size_t dim, std::vector<Piece> pieces) : dim_(dim), pieces_(std::move(pieces)) {}
  std::size_t dim() const override { return dim_; }
  bool contains(std::span<const double> v) const override;
  std::vector<Vec> sample_near(std::span<const double> p, double r, std::size_t count,
                               std::mt19937_64& rng) const override;

 private:
  std::size_t dim_;
  std::vector<Piece> pieces_;
};

/// gph N_B in (y, z) coordinates as a union of 3^m product pieces.
PieceUnionSet graph_of_box_normal_cone(const BoxSet& B);

struct FrechetOptions {
  std::vector<double> radii{1e-2, 1e-3, 1e-4};
  double threshold = 1e-4;          // IN iff every ratio estimate is at most this
  std::size_t points_per_radius = 400;
  std::size_t min_points = 10;      // fewer set samples is an error
  std::uint64_t seed = 1;
};

struct ClassifiedDirection {
  Vec direction;
  bool in = false;
  double ratio = 0.0;  // largest ratio estimate over the radii
};

/// `count` uniform random unit directions.
std::vector<Vec> sample_directions(std::size_t dim, std::size_t count, std::mt19937_64& rng);
/// Unit circle at a fixed angular step; the axes are included exactly.
std::vector<Vec> circle_grid(double step_degrees = 0.5);

/// Classifies each direction by the limsup quotient of the Fréchet normal
/// cone, estimated over set points sampled in balls of shrinking radius.
std::vector<ClassifiedDirection> sample_frechet_normal_cone(const LocalSet& set, std::span<const double> point,
                                                            const std::vector<Vec>& directions,
                                                            const FrechetOptions& opts = {});
std::vector<ClassifiedDirection> sample_frechet_normal_cone(const LocalSet& set, std::span<const double> point,
                                                            std::size_t count, const FrechetOptions& opts = {});

struct LimitingOptions {
  FrechetOptions frechet;
  std::vector<double> neighbor_radii{0.1, 0.05};
  std::size_t neighbors_per_radius = 16;
};

/// Union of Fréchet classifications at the point and at set points sampled
/// in shrinking neighborhoods of it.
std::vector<ClassifiedDirection> sample_limiting_normal_cone(const LocalSet& set, std::span<const double> point,
                                                             const std::vector<Vec>& directions,
                                                             const LimitingOptions& opts = {});

/// Angle (degrees) from a direction to the nearest one in `to`.
double angular_gap(std::span<const double> d, const std::vector<Vec>& to);

// ---------------------------------------------------------------------------
// Coderivatives and stability moduli.

struct SampledCoderivative {
  Vec x_star;             // least-squares estimate of the single element
  double max_ratio = 0.0; // Fréchet quotient of (x*, -y*) over graph points at `radius`
};

/// Sampled Fréchet coderivative of a smooth map at `point` applied to y*:
/// fits x* to symmetric difference quotients of <y*, h> over random
/// displacements of radius `radius`, then evaluates the Fréchet quotient of
/// (x*, -y*) against graph points.
SampledCoderivative sampled_frechet_coderivative(const SmoothFunction& h, std::span<const double> point,
                                                 std::span<const double> y_star, double radius = 1e-4,
                                                 std::size_t samples = 64, std::uint64_t seed = 1);

using SetMap = std::function<std::vector<Vec>(std::span<const double>)>;

/// S(x) through the grid solver.
SetMap lower_level_map(const BilevelProblem& problem, const GridSpec& grid);

struct ModulusOptions {
  std::vector<double> radii{0.2, 0.1, 0.05};
  double window = INFINITY;  // radius of the neighborhood V of ȳ
  std::size_t directions = 4; // extra random x-directions per radius (beyond ±e_i)
  std::uint64_t seed = 1;
};

struct ModulusEstimate {
  double modulus = 0.0;
  std::vector<double> radii;
  std::size_t samples = 0;
};

/// sup over sampled x near x̄ of excess(S(x) ∩ V, S(x̄)) / |x - x̄|.
ModulusEstimate estimate_calmness(const SetMap& S, std::span<const double> x_bar, std::span<const double> y_bar,
                                  const ModulusOptions& opts = {});
/// Same samples plus x̄; sup over ordered pairs of
/// excess(S(x) ∩ V, S(x')) / |x - x'|.
ModulusEstimate estimate_lipschitz_like(const SetMap& S, std::span<const double> x_bar,
                                        std::span<const double> y_bar, const ModulusOptions& opts = {});

}  // namespace mstat
