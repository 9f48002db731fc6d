#include "mstat/polyhedral.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mstat/errors.hpp"
#include "mstat/feasibility.hpp"

namespace mstat {

namespace {

Rational dotq(std::span<const Rational> a, std::span<const Rational> b) {
  Rational s = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (sgn(a[i]) != 0 && sgn(b[i]) != 0) s += a[i] * b[i];
  return s;
}

bool is_zero_vec(const QVec& v) {
  return std::all_of(v.begin(), v.end(), [](const Rational& c) { return sgn(c) == 0; });
}

QVec negated(QVec v) {
  for (auto& c : v) c = -c;
  return v;
}

QVec unit(std::size_t dim, std::size_t i, long sign = 1) {
  QVec v(dim, Rational(0));
  v[i] = sign;
  return v;
}

// Scales v to the primitive integer vector in the same direction.
void make_primitive(QVec& v) {
  mpz_class l = 1;
  for (const auto& c : v)
    if (sgn(c) != 0) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), c.get_den_mpz_t());
  mpz_class g = 0;
  std::vector<mpz_class> nums(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    nums[i] = v[i].get_num() * (l / v[i].get_den());
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), nums[i].get_mpz_t());
  }
  if (g == 0) return;
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = Rational(nums[i] / g);
}

// Lines have no orientation; fix the first nonzero entry positive.
void make_primitive_line(QVec& v) {
  make_primitive(v);
  for (const auto& c : v) {
    if (sgn(c) == 0) continue;
    if (sgn(c) < 0)
      for (auto& d : v) d = -d;
    return;
  }
}

struct DDResult {
  std::vector<QVec> rays;
  std::vector<QVec> lines;
};

// Double description (Motzkin): generators of { v : a.v <= 0 (ineq), a.v = 0 (eq) }.
// Starts from the whole space (lines = unit basis) and intersects one
// constraint at a time. Lines are consumed first whenever the constraint
// cuts them; otherwise rays are split by sign and adjacent pairs across the
// hyperplane are combined. Adjacency is the combinatorial test on the sets
// of constraints each ray makes tight.
DDResult double_description(std::size_t dim, const std::vector<QVec>& ineq, const std::vector<QVec>& eq) {
  struct Ray {
    QVec v;
    std::vector<bool> tight;
  };
  std::vector<std::pair<const QVec*, bool>> cons;
  for (const auto& a : eq) cons.emplace_back(&a, true);
  for (const auto& a : ineq) cons.emplace_back(&a, false);
  const std::size_t total = cons.size();

  std::vector<QVec> lines;
  for (std::size_t i = 0; i < dim; ++i) lines.push_back(unit(dim, i));
  std::vector<Ray> rays;

  for (std::size_t k = 0; k < total; ++k) {
    const QVec& a = *cons[k].first;
    const bool is_eq = cons[k].second;

    std::size_t pivot = lines.size();
    Rational al0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      al0 = dotq(a, lines[i]);
      if (sgn(al0) != 0) {
        pivot = i;
        break;
      }
    }
    if (pivot < lines.size()) {
      QVec l0 = lines[pivot];
      if (!is_eq && sgn(al0) > 0) {
        l0 = negated(l0);
        al0 = -al0;
      }
      auto project = [&](QVec& v) {
        Rational c = dotq(a, v) / al0;
        if (sgn(c) == 0) return;
        for (std::size_t j = 0; j < dim; ++j) v[j] -= c * l0[j];
      };
      std::vector<QVec> next_lines;
      for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i == pivot) continue;
        QVec l = lines[i];
        project(l);
        make_primitive_line(l);
        next_lines.push_back(std::move(l));
      }
      for (auto& r : rays) {
        project(r.v);
        make_primitive(r.v);
        r.tight[k] = true;
      }
      if (!is_eq) {
        Ray r{l0, std::vector<bool>(total, false)};
        for (std::size_t j = 0; j < k; ++j) r.tight[j] = true;
        make_primitive(r.v);
        rays.push_back(std::move(r));
      }
      lines = std::move(next_lines);
      continue;
    }

    std::vector<int> sign(rays.size());
    std::vector<Rational> val(rays.size());
    for (std::size_t i = 0; i < rays.size(); ++i) {
      val[i] = dotq(a, rays[i].v);
      sign[i] = sgn(val[i]);
    }
    std::vector<Ray> next;
    for (std::size_t i = 0; i < rays.size(); ++i) {
      if (sign[i] == 0) {
        next.push_back(rays[i]);
        next.back().tight[k] = true;
      } else if (sign[i] < 0 && !is_eq) {
        next.push_back(rays[i]);
      }
    }
    auto adjacent = [&](std::size_t p, std::size_t n) {
      for (std::size_t r = 0; r < rays.size(); ++r) {
        if (r == p || r == n) continue;
        bool covers = true;
        for (std::size_t j = 0; j < k && covers; ++j)
          if (rays[p].tight[j] && rays[n].tight[j] && !rays[r].tight[j]) covers = false;
        if (covers) return false;
      }
      return true;
    };
    for (std::size_t p = 0; p < rays.size(); ++p) {
      if (sign[p] <= 0) continue;
      for (std::size_t n = 0; n < rays.size(); ++n) {
        if (sign[n] >= 0 || !adjacent(p, n)) continue;
        Ray c{QVec(dim), std::vector<bool>(total, false)};
        for (std::size_t j = 0; j < dim; ++j) c.v[j] = val[p] * rays[n].v[j] - val[n] * rays[p].v[j];
        if (is_zero_vec(c.v)) continue;
        make_primitive(c.v);
        for (std::size_t j = 0; j < k; ++j) c.tight[j] = rays[p].tight[j] && rays[n].tight[j];
        c.tight[k] = true;
        next.push_back(std::move(c));
      }
    }
    rays = std::move(next);
  }

  DDResult out;
  std::set<QVec> seen;
  for (auto& r : rays)
    if (!is_zero_vec(r.v) && seen.insert(r.v).second) out.rays.push_back(r.v);
  out.lines = std::move(lines);
  return out;
}

Vec unit_row(const QVec& row) {
  Vec r = to_double(row);
  double n = norm2(r);
  if (n > 0)
    for (auto& c : r) c /= n;
  return r;
}

std::vector<QVec> drop_zero(std::vector<QVec> vs) {
  vs.erase(std::remove_if(vs.begin(), vs.end(), is_zero_vec), vs.end());
  return vs;
}

void check_dims(std::size_t dim, const std::vector<QVec>& vs) {
  for (const auto& v : vs)
    if (v.size() != dim) throw InputError("cone vector has length " + std::to_string(v.size()) + ", expected " +
                                          std::to_string(dim));
}

}  // namespace

// ---------------------------------------------------------------------------

ActiveSet active_set(const Polyhedron& P, std::span<const double> v, double tol) {
  if (v.size() != P.dim) throw InputError("point dimension does not match the polyhedron");
  ActiveSet s;
  for (std::size_t r = 0; r < P.rows(); ++r) {
    double lhs = dot(P.A.row(r), v);
    if (lhs > P.b[r] + tol)
      throw PointNotInSetError("point violates row " + std::to_string(r + 1) + " by " +
                               std::to_string(lhs - P.b[r]));
    if (lhs >= P.b[r] - tol) s.rows.push_back(r);
  }
  return s;
}

PolyhedralCone PolyhedralCone::from_generators(std::size_t dim, std::vector<QVec> rays, std::vector<QVec> lines) {
  check_dims(dim, rays);
  check_dims(dim, lines);
  PolyhedralCone c;
  c.dim_ = dim;
  c.rays_ = drop_zero(std::move(rays));
  c.lines_ = drop_zero(std::move(lines));
  DDResult polar = double_description(dim, c.rays_, c.lines_);
  c.ineq_ = std::move(polar.rays);
  c.eq_ = std::move(polar.lines);
  c.finalize();
  return c;
}

PolyhedralCone PolyhedralCone::from_halfspaces(std::size_t dim, std::vector<QVec> ineq, std::vector<QVec> eq) {
  check_dims(dim, ineq);
  check_dims(dim, eq);
  PolyhedralCone c;
  c.dim_ = dim;
  c.ineq_ = drop_zero(std::move(ineq));
  c.eq_ = drop_zero(std::move(eq));
  DDResult gens = double_description(dim, c.ineq_, c.eq_);
  c.rays_ = std::move(gens.rays);
  c.lines_ = std::move(gens.lines);
  c.finalize();
  return c;
}

PolyhedralCone PolyhedralCone::from_forms(std::size_t dim, std::vector<QVec> rays, std::vector<QVec> lines,
                                          std::vector<QVec> ineq, std::vector<QVec> eq) {
  PolyhedralCone c;
  c.dim_ = dim;
  c.rays_ = drop_zero(std::move(rays));
  c.lines_ = drop_zero(std::move(lines));
  c.ineq_ = drop_zero(std::move(ineq));
  c.eq_ = drop_zero(std::move(eq));
  c.finalize();
  return c;
}

PolyhedralCone PolyhedralCone::zero(std::size_t dim) {
  std::vector<QVec> eq;
  for (std::size_t i = 0; i < dim; ++i) eq.push_back(unit(dim, i));
  return from_forms(dim, {}, {}, {}, std::move(eq));
}

PolyhedralCone PolyhedralCone::whole(std::size_t dim) {
  std::vector<QVec> lines;
  for (std::size_t i = 0; i < dim; ++i) lines.push_back(unit(dim, i));
  return from_forms(dim, {}, std::move(lines), {}, {});
}

PolyhedralCone PolyhedralCone::product(const PolyhedralCone& a, const PolyhedralCone& b) {
  const std::size_t d = a.dim() + b.dim();
  auto lift = [&](const std::vector<QVec>& vs, std::size_t offset) {
    std::vector<QVec> out;
    for (const auto& v : vs) {
      QVec w(d, Rational(0));
      std::copy(v.begin(), v.end(), w.begin() + static_cast<std::ptrdiff_t>(offset));
      out.push_back(std::move(w));
    }
    return out;
  };
  auto join = [](std::vector<QVec> x, std::vector<QVec> y) {
    x.insert(x.end(), std::make_move_iterator(y.begin()), std::make_move_iterator(y.end()));
    return x;
  };
  return from_forms(d, join(lift(a.rays_, 0), lift(b.rays_, a.dim())),
                    join(lift(a.lines_, 0), lift(b.lines_, a.dim())),
                    join(lift(a.ineq_, 0), lift(b.ineq_, a.dim())), join(lift(a.eq_, 0), lift(b.eq_, a.dim())));
}

void PolyhedralCone::finalize() {
  ineq_unit_ = Mat(0, dim_);
  eq_unit_ = Mat(0, dim_);
  for (const auto& r : ineq_) ineq_unit_.append_row(unit_row(r));
  for (const auto& r : eq_) eq_unit_.append_row(unit_row(r));
}

std::vector<QVec> PolyhedralCone::generators() const {
  std::vector<QVec> out = rays_;
  for (const auto& l : lines_) {
    out.push_back(l);
    out.push_back(negated(l));
  }
  return out;
}

bool PolyhedralCone::is_zero() const { return rays_.empty() && lines_.empty(); }

PolyhedralCone PolyhedralCone::polar() const { return from_forms(dim_, ineq_, eq_, rays_, lines_); }

ConeMembership PolyhedralCone::contains(std::span<const double> v, double margin) const {
  if (v.size() != dim_) throw InputError("vector dimension does not match the cone");
  double worst = 0.0;
  for (std::size_t r = 0; r < ineq_unit_.rows(); ++r) worst = std::max(worst, dot(ineq_unit_.row(r), v));
  for (std::size_t r = 0; r < eq_unit_.rows(); ++r) worst = std::max(worst, std::fabs(dot(eq_unit_.row(r), v)));
  return {worst <= margin, worst};
}

bool PolyhedralCone::contains_exact(std::span<const Rational> v) const {
  for (const auto& r : ineq_)
    if (sgn(dotq(r, v)) > 0) return false;
  for (const auto& r : eq_)
    if (sgn(dotq(r, v)) != 0) return false;
  return true;
}

bool PolyhedralCone::contains_lp(std::span<const Rational> v) const {
  if (v.size() != dim_) throw InputError("vector dimension does not match the cone");
  const std::size_t k = rays_.size() + lines_.size();
  LinearSystem<Rational> sys(k);
  for (std::size_t i = 0; i < rays_.size(); ++i) sys.set_nonneg(i);
  QVec row(k);
  for (std::size_t j = 0; j < dim_; ++j) {
    for (std::size_t i = 0; i < rays_.size(); ++i) row[i] = rays_[i][j];
    for (std::size_t i = 0; i < lines_.size(); ++i) row[rays_.size() + i] = lines_[i][j];
    sys.add_equality(row, v[j]);
  }
  return feasible(sys, ArithmeticMode::Rational).feasible;
}

ConeMembership cone_contains(const PolyhedralCone& c, std::span<const double> v, double margin) {
  return c.contains(v, margin);
}

bool subset_of(const PolyhedralCone& a, const PolyhedralCone& b) {
  if (a.dim() != b.dim()) return false;
  for (const auto& g : a.generators())
    if (!b.contains_lp(g)) return false;
  return true;
}

bool same_cone(const PolyhedralCone& a, const PolyhedralCone& b) { return subset_of(a, b) && subset_of(b, a); }

bool forms_consistent(const PolyhedralCone& c) {
  for (const auto& g : c.generators())
    if (!c.contains_exact(g)) return false;
  auto from_h = PolyhedralCone::from_halfspaces(c.dim(), c.ineq(), c.eq());
  return subset_of(from_h, c);
}

PolyhedralCone normal_cone_polyhedron(const Polyhedron& P, std::span<const double> v, double tol) {
  ActiveSet act = active_set(P, v, tol);
  std::vector<QVec> rays;
  for (std::size_t r : act.rows) rays.push_back(to_rational(P.A.row(r)));
  return PolyhedralCone::from_generators(P.dim, std::move(rays));
}

PolyhedralCone normal_cone_box(const BoxSet& B, std::span<const double> y, double tol) {
  const std::size_t m = B.dim();
  if (y.size() != m) throw InputError("point dimension does not match the box");
  std::vector<QVec> rays, lines;
  for (std::size_t i = 0; i < m; ++i) {
    if (y[i] < B.lower[i] - tol || y[i] > B.upper[i] + tol)
      throw PointNotInSetError("point leaves the box in coordinate " + std::to_string(i + 1));
    if (B.lower[i] == B.upper[i]) {
      lines.push_back(unit(m, i));
      continue;
    }
    if (std::isfinite(B.lower[i]) && std::fabs(y[i] - B.lower[i]) <= tol) rays.push_back(unit(m, i, -1));
    if (std::isfinite(B.upper[i]) && std::fabs(y[i] - B.upper[i]) <= tol) rays.push_back(unit(m, i, 1));
  }
  return PolyhedralCone::from_generators(m, std::move(rays), std::move(lines));
}

PolyhedralCone normal_cone(const LowerSet& K, std::span<const double> y, double tol) {
  if (const auto* box = std::get_if<BoxSet>(&K)) return normal_cone_box(*box, y, tol);
  return normal_cone_polyhedron(std::get<Polyhedron>(K), y, tol);
}

// ---------------------------------------------------------------------------

ConeUnion::ConeUnion(std::vector<LabeledCone> branches) : branches_(std::move(branches)) {
  if (branches_.empty()) throw InternalError("cone union must have at least one branch");
  std::set<std::string> labels;
  for (const auto& b : branches_)
    if (!labels.insert(b.label).second) throw InternalError("duplicate branch label " + b.label);
}

UnionMembership ConeUnion::contains(std::span<const double> v, double margin) const {
  UnionMembership best;
  best.margin = INFINITY;
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    auto r = branches_[i].cone.contains(v, margin);
    if (r.margin < best.margin) {
      best.margin = r.margin;
      best.branch = i;
    }
  }
  best.member = best.margin <= margin;
  return best;
}

bool union_subset(const ConeUnion& a, const ConeUnion& b) {
  for (const auto& x : a.branches()) {
    bool inside = false;
    for (const auto& y : b.branches())
      if (subset_of(x.cone, y.cone)) {
        inside = true;
        break;
      }
    if (!inside) return false;
  }
  return true;
}

bool same_union(const ConeUnion& a, const ConeUnion& b) { return union_subset(a, b) && union_subset(b, a); }

// ---------------------------------------------------------------------------

const char* to_string(PointClass c) {
  switch (c) {
    case PointClass::Interior: return "INTERIOR";
    case PointClass::LowerStrict: return "LOWER_STRICT";
    case PointClass::LowerCorner: return "LOWER_CORNER_REGULAR";
    case PointClass::UpperStrict: return "UPPER_STRICT";
    case PointClass::UpperCorner: return "UPPER_CORNER_REGULAR";
    case PointClass::Fixed: return "FIXED";
  }
  return "?";
}

const char* to_string(BranchTag t) {
  switch (t) {
    case BranchTag::Interior: return "INTERIOR";
    case BranchTag::LowerStrict: return "LOWER_STRICT";
    case BranchTag::UpperStrict: return "UPPER_STRICT";
    case BranchTag::Fixed: return "FIXED";
    case BranchTag::LowerCornerRegularInterior: return "LOWER_CORNER_REGULAR_INTERIOR";
    case BranchTag::LowerCornerRegularStrict: return "LOWER_CORNER_REGULAR_STRICT";
    case BranchTag::CornerMixedLower: return "CORNER_MIXED_LOWER";
    case BranchTag::UpperCornerRegularInterior: return "UPPER_CORNER_REGULAR_INTERIOR";
    case BranchTag::UpperCornerRegularStrict: return "UPPER_CORNER_REGULAR_STRICT";
    case BranchTag::CornerMixedUpper: return "CORNER_MIXED_UPPER";
  }
  return "?";
}

std::string describe(BranchTag t) {
  switch (t) {
    case BranchTag::Interior: return "interior, branch {0}xR";
    case BranchTag::LowerStrict: return "lower bound with z<0, branch Rx{0}";
    case BranchTag::UpperStrict: return "upper bound with z>0, branch Rx{0}";
    case BranchTag::Fixed: return "fixed coordinate, branch Rx{0}";
    case BranchTag::LowerCornerRegularInterior: return "lower-corner, regular branch {0}xR";
    case BranchTag::LowerCornerRegularStrict: return "lower-corner, regular branch Rx{0}";
    case BranchTag::CornerMixedLower: return "lower-corner, mixed branch R_-xR_+";
    case BranchTag::UpperCornerRegularInterior: return "upper-corner, regular branch {0}xR";
    case BranchTag::UpperCornerRegularStrict: return "upper-corner, regular branch Rx{0}";
    case BranchTag::CornerMixedUpper: return "upper-corner, mixed branch R_+xR_-";
  }
  return "?";
}

PointClass classify_box_coordinate(double lower, double upper, double y, double z, double tol) {
  if (y < lower - tol || y > upper + tol) throw GraphMembershipError("y leaves K");
  if (lower == upper) return PointClass::Fixed;
  const bool at_lower = std::isfinite(lower) && std::fabs(y - lower) <= tol;
  const bool at_upper = std::isfinite(upper) && std::fabs(y - upper) <= tol;
  if (at_lower && at_upper) return PointClass::Fixed;  // bounds closer than tol
  if (at_lower) {
    if (z < -tol) return PointClass::LowerStrict;
    if (z <= tol) return PointClass::LowerCorner;
    throw GraphMembershipError("z > 0 at a lower bound");
  }
  if (at_upper) {
    if (z > tol) return PointClass::UpperStrict;
    if (z >= -tol) return PointClass::UpperCorner;
    throw GraphMembershipError("z < 0 at an upper bound");
  }
  if (std::fabs(z) > tol) throw GraphMembershipError("z != 0 strictly inside K");
  return PointClass::Interior;
}

std::vector<BranchTag> branch_options(PointClass c) {
  switch (c) {
    case PointClass::Interior: return {BranchTag::Interior};
    case PointClass::LowerStrict: return {BranchTag::LowerStrict};
    case PointClass::UpperStrict: return {BranchTag::UpperStrict};
    case PointClass::Fixed: return {BranchTag::Fixed};
    case PointClass::LowerCorner:
      return {BranchTag::LowerCornerRegularInterior, BranchTag::LowerCornerRegularStrict,
              BranchTag::CornerMixedLower};
    case PointClass::UpperCorner:
      return {BranchTag::UpperCornerRegularInterior, BranchTag::UpperCornerRegularStrict,
              BranchTag::CornerMixedUpper};
  }
  return {};
}

namespace {

enum class Piece { DualLine, PrimalLine, MixedLower, MixedUpper };

Piece piece_of(BranchTag t) {
  switch (t) {
    case BranchTag::Interior:
    case BranchTag::LowerCornerRegularInterior:
    case BranchTag::UpperCornerRegularInterior: return Piece::DualLine;
    case BranchTag::CornerMixedLower: return Piece::MixedLower;
    case BranchTag::CornerMixedUpper: return Piece::MixedUpper;
    default: return Piece::PrimalLine;
  }
}

// Product over coordinates, built directly in both forms.
PolyhedralCone box_branch_cone(const std::vector<BranchTag>& tags) {
  const std::size_t m = tags.size(), d = 2 * m;
  std::vector<QVec> rays, lines, ineq, eq;
  for (std::size_t i = 0; i < m; ++i) {
    switch (piece_of(tags[i])) {
      case Piece::DualLine:  // y* = 0, z* free
        lines.push_back(unit(d, m + i));
        eq.push_back(unit(d, i));
        break;
      case Piece::PrimalLine:  // y* free, z* = 0
        lines.push_back(unit(d, i));
        eq.push_back(unit(d, m + i));
        break;
      case Piece::MixedLower:  // y* <= 0, z* >= 0
        rays.push_back(unit(d, i, -1));
        rays.push_back(unit(d, m + i));
        ineq.push_back(unit(d, i));
        ineq.push_back(unit(d, m + i, -1));
        break;
      case Piece::MixedUpper:  // y* >= 0, z* <= 0
        rays.push_back(unit(d, i));
        rays.push_back(unit(d, m + i, -1));
        ineq.push_back(unit(d, i, -1));
        ineq.push_back(unit(d, m + i));
        break;
    }
  }
  return PolyhedralCone::from_forms(d, std::move(rays), std::move(lines), std::move(ineq), std::move(eq));
}

std::string index_set(const std::vector<std::size_t>& rows) {
  std::string s = "{";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(rows[i] + 1);
  }
  return s + "}";
}

}  // namespace

std::vector<BranchTag> GraphConeBranches::pattern(std::size_t k) const {
  if (!box_) throw InternalError("branch pattern requested from a polyhedral enumerator");
  if (k >= count_) throw InternalError("branch index out of range");
  std::vector<BranchTag> tags(m_);
  for (std::size_t i = m_; i-- > 0;) {
    const auto& opts = box_options_[i];
    tags[i] = opts[k % opts.size()];
    k /= opts.size();
  }
  return tags;
}

LabeledCone GraphConeBranches::branch(std::size_t k) const {
  if (!box_) return list_.at(k);
  auto tags = pattern(k);
  LabeledCone out;
  for (std::size_t i = 0; i < m_; ++i) {
    if (i) {
      out.label += ",";
      out.description += "; ";
    }
    out.label += to_string(tags[i]);
    out.description += "coordinate " + std::to_string(i + 1) + ": " + describe(tags[i]);
  }
  out.cone = box_branch_cone(tags);
  return out;
}

ConeUnion GraphConeBranches::materialize() const {
  std::vector<LabeledCone> all;
  all.reserve(count_);
  for (std::size_t k = 0; k < count_; ++k) all.push_back(branch(k));
  return ConeUnion(std::move(all));
}

GraphConeBranches graph_cone_box(const BoxSet& B, std::span<const double> y, std::span<const double> z,
                                 const GraphConeOptions& opts) {
  const std::size_t m = B.dim();
  if (y.size() != m || z.size() != m) throw InputError("point dimension does not match the box");
  GraphConeBranches g;
  g.box_ = true;
  g.m_ = m;
  g.count_ = 1;
  for (std::size_t i = 0; i < m; ++i) {
    PointClass c;
    try {
      c = classify_box_coordinate(B.lower[i], B.upper[i], y[i], z[i], opts.tol);
    } catch (const GraphMembershipError& e) {
      throw GraphMembershipError(std::string(e.what()) + " in coordinate " + std::to_string(i + 1));
    }
    g.box_options_.push_back(branch_options(c));
    g.count_ *= g.box_options_.back().size();
    if (g.count_ > opts.max_branches)
      throw CapExceededError("graph cone has more than " + std::to_string(opts.max_branches) + " branches");
  }
  return g;
}

GraphConeBranches graph_cone_polyhedron(const Polyhedron& K, std::span<const double> y, std::span<const double> z,
                                        const GraphConeOptions& opts) {
  const std::size_t m = K.dim;
  if (y.size() != m || z.size() != m) throw InputError("point dimension does not match K");

  // y in K and its active rows.
  std::vector<std::size_t> I;
  for (std::size_t r = 0; r < K.rows(); ++r) {
    double lhs = dot(K.A.row(r), y);
    if (lhs > K.b[r] + opts.tol) throw GraphMembershipError("y violates row " + std::to_string(r + 1) + " of K");
    if (lhs >= K.b[r] - opts.tol) I.push_back(r);
  }
  if (I.size() > opts.max_active_rows)
    throw CapExceededError(std::to_string(I.size()) + " active rows exceed the cap of " +
                           std::to_string(opts.max_active_rows) + "; use a box description of K if possible");
  std::vector<QVec> AI;
  for (std::size_t r : I) AI.push_back(to_rational(K.A.row(r)));

  // z in cone(A_I^T): least L1 residual over lambda >= 0, exactly on the
  // rounded data. Variables: lambda (|I|), r+ (m), r- (m).
  Vec zs(z.begin(), z.end());
  for (auto& v : zs)
    if (std::fabs(v) <= opts.tol) v = 0.0;
  const QVec zq = to_rational(zs);
  const std::size_t p = I.size(), nv = p + 2 * m;
  auto residual_system = [&] {
    LinearSystem<Rational> sys(nv);
    for (std::size_t v = 0; v < nv; ++v) sys.set_nonneg(v);
    QVec row(nv);
    for (std::size_t j = 0; j < m; ++j) {
      std::fill(row.begin(), row.end(), Rational(0));
      for (std::size_t i = 0; i < p; ++i) row[i] = AI[i][j];
      row[p + j] = 1;
      row[p + m + j] = -1;
      sys.add_equality(row, zq[j]);
    }
    return sys;
  };
  QVec l1(nv, Rational(0));
  for (std::size_t v = p; v < nv; ++v) l1[v] = 1;
  auto base = residual_system();
  auto best = minimize(base, std::span<const Rational>(l1));
  if (best.status != LpStatus::Feasible) throw InternalError("residual LP failed");
  double scale = std::max(1.0, norm_inf(zs));
  if (to_double(best.objective) > opts.tol * scale)
    throw GraphMembershipError("z is not in N_K(y) (residual " + std::to_string(to_double(best.objective)) + ")");

  // Rows carrying a positive multiplier in some representation of z.
  std::vector<bool> positive(p, false);
  for (std::size_t i = 0; i < p; ++i) {
    auto sys = residual_system();
    sys.add_inequality(l1, best.objective);
    QVec obj(nv, Rational(0));
    obj[i] = -1;
    auto r = minimize(sys, std::span<const Rational>(obj));
    positive[i] = r.status == LpStatus::Unbounded || (r.status == LpStatus::Feasible && sgn(r.objective) < 0);
  }

  // Critical cone C = { d : A_i d = 0 (i positive), A_i d <= 0 (other active i) }.
  std::vector<std::size_t> J, free_rows;  // indices into I
  for (std::size_t i = 0; i < p; ++i) (positive[i] ? J : free_rows).push_back(i);

  // Faces of C: subsets S of the free rows that are exactly the tight set of
  // some direction (relatively open face non-empty). Decided by maximizing
  // t with A_i d + t <= 0 for the rows outside S, t <= 1.
  const std::size_t q = free_rows.size();
  struct Face {
    std::vector<std::size_t> tight;  // K row indices (J and S together), sorted
    PolyhedralCone cone;
  };
  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> faces_s;  // (S as free-row positions, tight rows)
  for (std::size_t mask = 0; mask < (std::size_t{1} << q); ++mask) {
    LinearSystem<Rational> sys(m + 1);
    QVec row(m + 1, Rational(0));
    auto put = [&](const QVec& a, Rational t) {
      for (std::size_t j = 0; j < m; ++j) row[j] = a[j];
      row[m] = t;
    };
    for (std::size_t i : J) {
      put(AI[i], 0);
      sys.add_equality(row, Rational(0));
    }
    std::vector<std::size_t> S;
    bool any_strict = false;
    for (std::size_t k = 0; k < q; ++k) {
      put(AI[free_rows[k]], (mask >> k) & 1 ? 0 : 1);
      if ((mask >> k) & 1) {
        S.push_back(k);
        sys.add_equality(row, Rational(0));
      } else {
        any_strict = true;
        sys.add_inequality(row, Rational(0));
      }
    }
    bool realizable = true;
    if (any_strict) {
      put(QVec(m, Rational(0)), 1);
      sys.add_inequality(row, Rational(1));
      QVec obj(m + 1, Rational(0));
      obj[m] = -1;
      auto r = minimize(sys, std::span<const Rational>(obj));
      realizable = r.status == LpStatus::Feasible && to_double(-r.objective) > 1e-9;
    }
    if (!realizable) continue;
    std::vector<std::size_t> tight;
    for (std::size_t i : J) tight.push_back(I[i]);
    for (std::size_t k : S) tight.push_back(I[free_rows[k]]);
    std::sort(tight.begin(), tight.end());
    faces_s.emplace_back(std::move(S), std::move(tight));
  }
  std::sort(faces_s.begin(), faces_s.end());

  std::vector<Face> faces;
  for (const auto& [S, tight] : faces_s) {
    std::vector<QVec> ineq, eq;
    for (std::size_t i : J) eq.push_back(AI[i]);
    for (std::size_t k = 0; k < q; ++k)
      (std::binary_search(S.begin(), S.end(), k) ? eq : ineq).push_back(AI[free_rows[k]]);
    if (m > 0 && ineq.empty() && eq.empty()) {
      faces.push_back({tight, PolyhedralCone::whole(m)});
    } else {
      faces.push_back({tight, PolyhedralCone::from_halfspaces(m, std::move(ineq), std::move(eq))});
    }
  }

  // Each nested pair F1 ⊇ F2 gives the branch (F1 - F2)° x (F1 - F2).
  GraphConeBranches g;
  g.m_ = m;
  for (std::size_t a = 0; a < faces.size(); ++a) {
    for (std::size_t b = 0; b < faces.size(); ++b) {
      const auto& S1 = faces_s[a].first;
      const auto& S2 = faces_s[b].first;
      if (!std::includes(S2.begin(), S2.end(), S1.begin(), S1.end())) continue;
      if (g.list_.size() >= opts.max_branches)
        throw CapExceededError("graph cone has more than " + std::to_string(opts.max_branches) + " branches");
      std::vector<QVec> rays = faces[a].cone.rays(), lines = faces[a].cone.lines();
      for (const auto& r : faces[b].cone.rays()) rays.push_back(negated(r));
      for (const auto& l : faces[b].cone.lines()) lines.push_back(l);
      auto D = PolyhedralCone::from_generators(m, std::move(rays), std::move(lines));
      LabeledCone lc;
      lc.label = "face" + index_set(faces[a].tight) + "/face" + index_set(faces[b].tight);
      lc.description = "directions tight at rows " + index_set(faces[a].tight) + ", positions tight at rows " +
                       index_set(faces[b].tight);
      lc.cone = PolyhedralCone::product(D.polar(), D);
      g.list_.push_back(std::move(lc));
    }
  }
  g.count_ = g.list_.size();
  return g;
}

GraphConeBranches graph_cone(const LowerSet& K, std::span<const double> y, std::span<const double> z,
                             const GraphConeOptions& opts) {
  if (const auto* box = std::get_if<BoxSet>(&K)) return graph_cone_box(*box, y, z, opts);
  return graph_cone_polyhedron(std::get<Polyhedron>(K), y, z, opts);
}

ConeUnion limiting_normal_cone_gph_box(const BoxSet& B, std::span<const double> y, std::span<const double> z,
                                       const GraphConeOptions& opts) {
  return graph_cone_box(B, y, z, opts).materialize();
}

ConeUnion limiting_normal_cone_gph_polyhedron(const Polyhedron& K, std::span<const double> y,
                                              std::span<const double> z, const GraphConeOptions& opts) {
  return graph_cone_polyhedron(K, y, z, opts).materialize();
}

}  // namespace mstat
