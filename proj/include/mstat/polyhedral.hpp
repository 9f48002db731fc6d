#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mstat/model.hpp"
#include "mstat/numeric.hpp"

namespace mstat {

/// Sorted indices of rows with A_i v >= b_i - tol.
struct ActiveSet {
  std::vector<std::size_t> rows;
};

/// Throws PointNotInSetError if some row is violated by more than tol.
ActiveSet active_set(const Polyhedron& P, std::span<const double> v, double tol);

struct ConeMembership {
  bool member = false;
  /// Largest violation of a normalized halfspace row (0 when inside).
  double margin = 0.0;
};

/// Closed convex polyhedral cone held exactly in both forms:
///   generators: cone(rays) + span(lines)
///   halfspaces: { v : M v <= 0, E v = 0 }
/// Whichever form is supplied, the other is derived by double description.
class PolyhedralCone {
 public:
  PolyhedralCone() = default;

  static PolyhedralCone from_generators(std::size_t dim, std::vector<QVec> rays, std::vector<QVec> lines = {});
  static PolyhedralCone from_halfspaces(std::size_t dim, std::vector<QVec> ineq, std::vector<QVec> eq = {});
  /// Both forms supplied by the caller, who vouches that they agree.
  static PolyhedralCone from_forms(std::size_t dim, std::vector<QVec> rays, std::vector<QVec> lines,
                                   std::vector<QVec> ineq, std::vector<QVec> eq);
  static PolyhedralCone zero(std::size_t dim);
  static PolyhedralCone whole(std::size_t dim);
  /// a x b, with a in the leading coordinates.
  static PolyhedralCone product(const PolyhedralCone& a, const PolyhedralCone& b);

  std::size_t dim() const { return dim_; }
  const std::vector<QVec>& rays() const { return rays_; }
  const std::vector<QVec>& lines() const { return lines_; }
  const std::vector<QVec>& ineq() const { return ineq_; }
  const std::vector<QVec>& eq() const { return eq_; }

  /// Rays followed by each line and its negative.
  std::vector<QVec> generators() const;
  bool is_zero() const;

  /// { u : u.v <= 0 for all v in this cone } (the two forms swap roles).
  PolyhedralCone polar() const;

  /// Float test against the halfspace form, rows scaled to unit length.
  ConeMembership contains(std::span<const double> v, double margin = 1e-9) const;
  /// Exact test against the halfspace form.
  bool contains_exact(std::span<const Rational> v) const;
  /// Exact LP test: v = sum lambda_i r_i + sum mu_j l_j with lambda >= 0.
  bool contains_lp(std::span<const Rational> v) const;

 private:
  void finalize();

  std::size_t dim_ = 0;
  std::vector<QVec> rays_, lines_, ineq_, eq_;
  Mat ineq_unit_, eq_unit_;
};

ConeMembership cone_contains(const PolyhedralCone& c, std::span<const double> v, double margin = 1e-9);

/// a is a subset of b: every generator of a passes b's LP membership test.
bool subset_of(const PolyhedralCone& a, const PolyhedralCone& b);
bool same_cone(const PolyhedralCone& a, const PolyhedralCone& b);
/// The generator and halfspace forms describe the same set.
bool forms_consistent(const PolyhedralCone& c);

PolyhedralCone normal_cone_polyhedron(const Polyhedron& P, std::span<const double> v, double tol = 1e-8);
PolyhedralCone normal_cone_box(const BoxSet& B, std::span<const double> y, double tol = 1e-8);
PolyhedralCone normal_cone(const LowerSet& K, std::span<const double> y, double tol = 1e-8);

struct LabeledCone {
  std::string label;
  std::string description;  // human-readable pattern
  PolyhedralCone cone;
};

struct UnionMembership {
  bool member = false;
  double margin = 0.0;      // smallest margin over branches
  std::size_t branch = 0;   // branch attaining it
};

/// Finite union of polyhedral cones with unique labels.
class ConeUnion {
 public:
  ConeUnion() = default;
  explicit ConeUnion(std::vector<LabeledCone> branches);

  const std::vector<LabeledCone>& branches() const { return branches_; }
  std::size_t size() const { return branches_.size(); }
  const LabeledCone& operator[](std::size_t i) const { return branches_[i]; }

  UnionMembership contains(std::span<const double> v, double margin = 1e-9) const;

 private:
  std::vector<LabeledCone> branches_;
};

/// Every branch of a lies inside some branch of b (sufficient for a being
/// contained in the union b).
bool union_subset(const ConeUnion& a, const ConeUnion& b);
bool same_union(const ConeUnion& a, const ConeUnion& b);

// ---------------------------------------------------------------------------
// Limiting normal cone to gph N_K.

/// Qualitative position of (y_i, z_i) for a box coordinate.
enum class PointClass { Interior, LowerStrict, LowerCorner, UpperStrict, UpperCorner, Fixed };

/// Per-coordinate branch of the graph cone. Corner points carry three
/// branches: the limits of the two regular pieces and the mixed one.
enum class BranchTag {
  Interior,                    // {0} x R
  LowerStrict,                 // R x {0}
  UpperStrict,                 // R x {0}
  Fixed,                       // R x {0}
  LowerCornerRegularInterior,  // {0} x R
  LowerCornerRegularStrict,    // R x {0}
  CornerMixedLower,            // R_- x R_+
  UpperCornerRegularInterior,  // {0} x R
  UpperCornerRegularStrict,    // R x {0}
  CornerMixedUpper,            // R_+ x R_-
};

const char* to_string(PointClass c);
const char* to_string(BranchTag t);
std::string describe(BranchTag t);

/// Throws GraphMembershipError when (y, z) is off the graph.
PointClass classify_box_coordinate(double lower, double upper, double y, double z, double tol);
/// Branches available at a point class, in enumeration order.
std::vector<BranchTag> branch_options(PointClass c);

struct GraphConeOptions {
  double tol = 1e-8;
  std::size_t max_branches = 531441;  // 3^12
  std::size_t max_active_rows = 10;   // general polyhedra only
};

/// Lazily enumerated branches of N_{gph N_K}(y, z) in R^{2m}, ordered
/// (y*, z*). Box branches are generated on demand from a mixed-radix
/// counter over the per-coordinate options, first coordinate most
/// significant; general polyhedra are expanded up front.
class GraphConeBranches {
 public:
  std::size_t size() const { return count_; }
  std::size_t dim() const { return 2 * m_; }
  LabeledCone branch(std::size_t k) const;
  ConeUnion materialize() const;

  bool is_box() const { return box_; }
  /// Box only: the per-coordinate tags of branch k.
  std::vector<BranchTag> pattern(std::size_t k) const;

  friend GraphConeBranches graph_cone_box(const BoxSet&, std::span<const double>, std::span<const double>,
                                          const GraphConeOptions&);
  friend GraphConeBranches graph_cone_polyhedron(const Polyhedron&, std::span<const double>,
                                                 std::span<const double>, const GraphConeOptions&);

 private:
  bool box_ = false;
  std::size_t m_ = 0;
  std::size_t count_ = 0;
  std::vector<std::vector<BranchTag>> box_options_;
  std::vector<LabeledCone> list_;
};

GraphConeBranches graph_cone_box(const BoxSet& B, std::span<const double> y, std::span<const double> z,
                                 const GraphConeOptions& opts = {});
GraphConeBranches graph_cone_polyhedron(const Polyhedron& K, std::span<const double> y, std::span<const double> z,
                                        const GraphConeOptions& opts = {});
GraphConeBranches graph_cone(const LowerSet& K, std::span<const double> y, std::span<const double> z,
                             const GraphConeOptions& opts = {});

ConeUnion limiting_normal_cone_gph_box(const BoxSet& B, std::span<const double> y, std::span<const double> z,
                                       const GraphConeOptions& opts = {});
ConeUnion limiting_normal_cone_gph_polyhedron(const Polyhedron& K, std::span<const double> y,
                                              std::span<const double> z, const GraphConeOptions& opts = {});

}  // namespace mstat
