#include "mstat/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "mstat/errors.hpp"

namespace mstat {

namespace {

Vec concat(std::span<const double> a, std::span<const double> b) {
  Vec v(a.begin(), a.end());
  v.insert(v.end(), b.begin(), b.end());
  return v;
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

// Affine set {x : Q x = c} with orthonormal rows Q; dependent rows dropped.
struct AffineHull {
  std::vector<Vec> q;
  Vec c;
  bool empty = false;

  AffineHull(const Mat& E, std::span<const double> e, std::span<const std::size_t> rows) {
    for (std::size_t r : rows) {
      Vec v(E.row(r).begin(), E.row(r).end());
      double rhs = e[r];
      const double scale = std::max(1.0, norm2(v));
      for (std::size_t k = 0; k < q.size(); ++k) {
        double t = dot(q[k], v);
        for (std::size_t j = 0; j < v.size(); ++j) v[j] -= t * q[k][j];
        rhs -= t * c[k];
      }
      double nv = norm2(v);
      if (nv <= 1e-10 * scale) {
        if (std::fabs(rhs) > 1e-9 * scale) empty = true;
        continue;
      }
      for (auto& x : v) x /= nv;
      q.push_back(std::move(v));
      c.push_back(rhs / nv);
    }
  }

  Vec project(Vec x) const {
    for (std::size_t k = 0; k < q.size(); ++k) {
      double t = dot(q[k], x) - c[k];
      for (std::size_t j = 0; j < x.size(); ++j) x[j] -= t * q[k][j];
    }
    return x;
  }
};

Vec gaussian_unit(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    Vec v(d);
    for (auto& x : v) x = g(rng);
    double n = norm2(v);
    if (n > 1e-12) {
      for (auto& x : v) x /= n;
      return v;
    }
  }
}

Vec ball_point(std::span<const double> p, double r, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec d = gaussian_unit(p.size(), rng);
  double rho = r * std::pow(u(rng), 1.0 / static_cast<double>(p.size()));
  Vec x(p.begin(), p.end());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += rho * d[i];
  return x;
}

// Samples closer than this fraction of r are dropped: the quotient loses
// digits as |x - p| approaches rounding level.
constexpr double kMinFraction = 0.1;
constexpr double kSetTol = 1e-13;

bool satisfies(const Mat& A, std::span<const double> b, std::span<const double> v, double tol) {
  for (std::size_t i = 0; i < A.rows(); ++i)
    if (dot(A.row(i), v) - b[i] > tol * std::max(1.0, std::fabs(b[i]))) return false;
  return true;
}

// Projection-rejection sampling on one affine hull.
void sample_on_hull(const AffineHull& hull, const std::function<bool(std::span<const double>)>& accept,
                    std::span<const double> p, double r, std::size_t want, std::mt19937_64& rng,
                    std::vector<Vec>& out) {
  if (hull.empty) return;
  Vec base = hull.project(Vec(p.begin(), p.end()));
  if (distance(base, p) > r) return;
  std::size_t got = 0;
  for (std::size_t attempt = 0; attempt < 40 * want && got < want; ++attempt) {
    Vec x = hull.project(ball_point(p, r, rng));
    double d = distance(x, p);
    if (d > r || d < kMinFraction * r) continue;
    if (!accept(x)) continue;
    out.push_back(std::move(x));
    ++got;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid

GridSpec GridSpec::uniform(Vec lower, Vec upper, std::size_t points, std::size_t refinement) {
  GridSpec g;
  g.resolution.assign(lower.size(), points);
  g.lower = std::move(lower);
  g.upper = std::move(upper);
  g.refinement = refinement;
  return g;
}

void GridSpec::validate(std::size_t m) const {
  std::vector<std::string> issues;
  if (lower.size() != m || upper.size() != m || resolution.size() != m)
    issues.push_back("grid has " + std::to_string(lower.size()) + "/" + std::to_string(upper.size()) + "/" +
                     std::to_string(resolution.size()) + " bounds/bounds/resolutions, expected " + std::to_string(m));
  for (std::size_t i = 0; i < std::min({lower.size(), upper.size(), resolution.size()}); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
      issues.push_back("grid bounds of coordinate " + std::to_string(i + 1) + " must be finite");
    else if (lower[i] > upper[i])
      issues.push_back("grid bounds of coordinate " + std::to_string(i + 1) + " are inverted");
    if (resolution[i] < 2) issues.push_back("grid resolution of coordinate " + std::to_string(i + 1) + " is below 2");
  }
  if (refinement < 1) issues.push_back("grid refinement factor must be at least 1");
  if (!issues.empty()) throw InputError(std::move(issues));
}

namespace {

// Points live on the fine lattice lower + (upper - lower) * k / N with
// N = (resolution - 1) * refinement; coarse points have k divisible by the
// refinement factor. Integer keys give exact dedup and lexicographic order.
struct Lattice {
  const GridSpec& g;
  std::vector<long> N;

  explicit Lattice(const GridSpec& grid) : g(grid) {
    for (std::size_t i = 0; i < g.resolution.size(); ++i)
      N.push_back(static_cast<long>((g.resolution[i] - 1) * g.refinement));
  }

  Vec point(const std::vector<long>& k) const {
    Vec y(k.size());
    for (std::size_t i = 0; i < k.size(); ++i)
      y[i] = k[i] == N[i] ? g.upper[i]
                          : g.lower[i] + (g.upper[i] - g.lower[i]) * static_cast<double>(k[i]) /
                                             static_cast<double>(N[i]);
    return y;
  }
};

using Key = std::vector<long>;

}  // namespace

LowerSolution solve_lower_grid(const BilevelProblem& problem, std::span<const double> x, const GridSpec& grid,
                               double value_tol) {
  grid.validate(problem.m);
  if (x.size() != problem.n)
    throw InputError("x has " + std::to_string(x.size()) + " entries, expected " + std::to_string(problem.n));
  const std::size_t m = problem.m;
  const Lattice lat(grid);
  const long R = static_cast<long>(grid.refinement);

  std::map<Key, double> values;  // lexicographic order by construction
  auto eval = [&](const Key& k) {
    auto it = values.find(k);
    if (it != values.end()) return;
    Vec y = lat.point(k);
    if (!contains(problem.K, y, kSetTol)) return;
    values.emplace(k, problem.f.evaluate(concat(x, y))[0]);
  };
  auto minimizers = [&]() {
    double best = INFINITY;
    for (const auto& [k, v] : values) best = std::min(best, v);
    const double cut = best + value_tol * std::max(1.0, std::fabs(best));
    std::vector<Key> keys;
    for (const auto& [k, v] : values)
      if (v <= cut) keys.push_back(k);
    return std::pair{best, keys};
  };

  // coarse pass: mixed-radix counter, first coordinate most significant
  Key k(m, 0);
  for (;;) {
    eval(k);
    std::size_t i = m;
    while (i > 0) {
      --i;
      k[i] += R;
      if (k[i] <= lat.N[i]) break;
      k[i] = 0;
      if (i == 0) goto coarse_done;
    }
    if (m == 0) break;
  }
coarse_done:
  if (values.empty()) throw OracleError("grid does not meet K: no grid point is feasible for the lower level");

  if (R > 1) {
    auto [best, coarse] = minimizers();
    (void)best;
    for (const auto& c : coarse) {
      Key off(m, -R);
      for (;;) {
        Key q(m);
        bool inside = true;
        for (std::size_t i = 0; i < m; ++i) {
          q[i] = c[i] + off[i];
          if (q[i] < 0 || q[i] > lat.N[i]) inside = false;
        }
        if (inside) eval(q);
        std::size_t i = m;
        bool done = true;
        while (i > 0) {
          --i;
          if (++off[i] <= R) {
            done = false;
            break;
          }
          off[i] = -R;
        }
        if (done) break;
      }
    }
  }

  auto [best, keys] = minimizers();
  LowerSolution out;
  out.value = best;
  for (const auto& key : keys) out.points.push_back(lat.point(key));
  return out;
}

Phi0Result phi0(const BilevelProblem& problem, std::span<const double> x, const GridSpec& grid) {
  Phi0Result r;
  r.solutions = solve_lower_grid(problem, x, grid);
  r.value = INFINITY;
  for (const auto& y : r.solutions.points) {
    double v = problem.F.evaluate(concat(x, y))[0];
    if (v < r.value) {
      r.value = v;
      r.y = y;
    }
  }
  return r;
}

LocalVerdict verify_optimistic_local(const BilevelProblem& problem, const Candidate& c, const GridSpec& grid,
                                     const LocalOptions& opts) {
  if (opts.x_points < 2) throw InputError("x grid needs at least 2 points per coordinate");
  if (!(opts.radius >= 0)) throw InputError("radius must be nonnegative");
  if (!problem.omega.contains(c.x, kSetTol)) throw PointNotInSetError("candidate x is not in Omega");
  const std::size_t n = problem.n;

  LocalVerdict v;
  v.phi0_at_candidate = phi0(problem, c.x, grid).value;
  v.F_at_candidate = problem.F.evaluate(concat(c.x, c.y))[0];
  v.value_matches = std::fabs(v.phi0_at_candidate - v.F_at_candidate) <= opts.tol * std::max(1.0, std::fabs(v.F_at_candidate));
  v.worst_phi0 = v.phi0_at_candidate;

  std::vector<std::size_t> idx(n, 0);
  const double denom = static_cast<double>(opts.x_points - 1);
  for (;;) {
    Vec x(n);
    for (std::size_t i = 0; i < n; ++i)
      x[i] = c.x[i] - opts.radius + 2.0 * opts.radius * static_cast<double>(idx[i]) / denom;
    if (distance(x, c.x) <= opts.radius * (1 + 1e-12) && problem.omega.contains(x, kSetTol)) {
      ++v.points_checked;
      double val = phi0(problem, x, grid).value;
      if (val < v.worst_phi0) {
        v.worst_phi0 = val;
        v.worst_x = x;
      }
    }
    std::size_t i = n;
    bool done = true;
    while (i > 0) {
      --i;
      if (++idx[i] < opts.x_points) {
        done = false;
        break;
      }
      idx[i] = 0;
    }
    if (done) break;
  }
  v.optimal = v.value_matches && v.worst_phi0 >= v.phi0_at_candidate - opts.tol;
  return v;
}

// ---------------------------------------------------------------------------
// Sets

bool PolyhedronSet::contains(std::span<const double> v) const {
  return v.size() == P_.dim && satisfies(P_.A, P_.b, v, kSetTol);
}

std::vector<Vec> PolyhedronSet::sample_near(std::span<const double> p, double r, std::size_t count,
                                            std::mt19937_64& rng) const {
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < P_.rows(); ++i)
    if (std::fabs(dot(P_.A.row(i), p) - P_.b[i]) <= 1e-9 * std::max(1.0, std::fabs(P_.b[i]))) active.push_back(i);
  if (active.size() > 12) throw CapExceededError("too many active rows to enumerate faces");
  const std::size_t faces = std::size_t{1} << active.size();
  const std::size_t per = std::max<std::size_t>(1, (count + faces - 1) / faces);
  std::vector<Vec> out;
  auto accept = [&](std::span<const double> x) { return contains(x); };
  for (std::size_t mask = 0; mask < faces; ++mask) {
    std::vector<std::size_t> rows;
    for (std::size_t j = 0; j < active.size(); ++j)
      if (mask & (std::size_t{1} << j)) rows.push_back(active[j]);
    sample_on_hull(AffineHull(P_.A, P_.b, rows), accept, p, r, per, rng, out);
  }
  return out;
}

bool PieceUnionSet::contains(std::span<const double> v) const {
  if (v.size() != dim_) return false;
  for (const auto& pc : pieces_) {
    if (!satisfies(pc.A, pc.b, v, 1e-12)) continue;
    bool eq = true;
    for (std::size_t i = 0; i < pc.E.rows() && eq; ++i)
      eq = std::fabs(dot(pc.E.row(i), v) - pc.e[i]) <= 1e-12 * std::max(1.0, std::fabs(pc.e[i]));
    if (eq) return true;
  }
  return false;
}

std::vector<Vec> PieceUnionSet::sample_near(std::span<const double> p, double r, std::size_t count,
                                            std::mt19937_64& rng) const {
  std::vector<Vec> out;
  const std::size_t per = std::max<std::size_t>(1, (count + pieces_.size() - 1) / std::max<std::size_t>(1, pieces_.size()));
  for (const auto& pc : pieces_) {
    std::vector<std::size_t> rows(pc.E.rows());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    auto accept = [&](std::span<const double> x) { return satisfies(pc.A, pc.b, x, 1e-12); };
    sample_on_hull(AffineHull(pc.E, pc.e, rows), accept, p, r, per, rng, out);
  }
  return out;
}

PieceUnionSet graph_of_box_normal_cone(const BoxSet& B) {
  const std::size_t m = B.dim();
  // per coordinate: 0 = z_i = 0 with l <= y_i <= u, 1 = y_i = l with z_i <= 0,
  // 2 = y_i = u with z_i >= 0 (infinite bounds drop the option)
  std::vector<std::vector<int>> options(m);
  for (std::size_t i = 0; i < m; ++i) {
    options[i].push_back(0);
    if (std::isfinite(B.lower[i])) options[i].push_back(1);
    if (std::isfinite(B.upper[i])) options[i].push_back(2);
  }
  std::vector<PieceUnionSet::Piece> pieces;
  std::vector<std::size_t> pick(m, 0);
  for (;;) {
    PieceUnionSet::Piece pc;
    pc.A = Mat(0, 2 * m);
    pc.E = Mat(0, 2 * m);
    for (std::size_t i = 0; i < m; ++i) {
      Vec row(2 * m, 0.0);
      switch (options[i][pick[i]]) {
        case 0:
          row[m + i] = 1;
          pc.E.append_row(row);
          pc.e.push_back(0);
          row[m + i] = 0;
          if (std::isfinite(B.upper[i])) {
            row[i] = 1;
            pc.A.append_row(row);
            pc.b.push_back(B.upper[i]);
          }
          if (std::isfinite(B.lower[i])) {
            row[i] = -1;
            pc.A.append_row(row);
            pc.b.push_back(-B.lower[i]);
          }
          break;
        case 1:
          row[i] = 1;
          pc.E.append_row(row);
          pc.e.push_back(B.lower[i]);
          row[i] = 0;
          row[m + i] = 1;
          pc.A.append_row(row);
          pc.b.push_back(0);
          break;
        default:
          row[i] = 1;
          pc.E.append_row(row);
          pc.e.push_back(B.upper[i]);
          row[i] = 0;
          row[m + i] = -1;
          pc.A.append_row(row);
          pc.b.push_back(0);
          break;
      }
    }
    pieces.push_back(std::move(pc));
    std::size_t i = m;
    bool done = true;
    while (i > 0) {
      --i;
      if (++pick[i] < options[i].size()) {
        done = false;
        break;
      }
      pick[i] = 0;
    }
    if (done) break;
  }
  return PieceUnionSet(2 * m, std::move(pieces));
}

// ---------------------------------------------------------------------------
// Sampled cones

std::vector<Vec> sample_directions(std::size_t dim, std::size_t count, std::mt19937_64& rng) {
  std::vector<Vec> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(gaussian_unit(dim, rng));
  return out;
}

std::vector<Vec> circle_grid(double step_degrees) {
  if (!(step_degrees > 0)) throw InputError("angular step must be positive");
  const auto count = static_cast<std::size_t>(std::llround(360.0 / step_degrees));
  std::vector<Vec> out;
  for (std::size_t k = 0; k < count; ++k) {
    const double deg = static_cast<double>(k) * 360.0 / static_cast<double>(count);
    const double quarter = deg / 90.0;
    if (quarter == std::floor(quarter)) {
      static const Vec axes[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
      out.push_back(axes[static_cast<int>(quarter) % 4]);
      continue;
    }
    const double rad = deg * std::numbers::pi / 180.0;
    out.push_back({std::cos(rad), std::sin(rad)});
  }
  return out;
}

std::vector<ClassifiedDirection> sample_frechet_normal_cone(const LocalSet& set, std::span<const double> point,
                                                            const std::vector<Vec>& directions,
                                                            const FrechetOptions& opts) {
  if (point.size() != set.dim()) throw InputError("point dimension does not match the set");
  if (!set.contains(point)) throw PointNotInSetError("sampling point is not in the set");
  std::mt19937_64 rng(opts.seed);

  std::vector<ClassifiedDirection> out(directions.size());
  for (std::size_t k = 0; k < directions.size(); ++k) {
    out[k].direction = directions[k];
    const double nd = norm2(directions[k]);
    if (nd > 0)
      for (auto& v : out[k].direction) v /= nd;
    out[k].ratio = -INFINITY;
  }
  for (double r : opts.radii) {
    auto pts = set.sample_near(point, r, opts.points_per_radius, rng);
    if (pts.size() < opts.min_points)
      throw OracleError("too few set samples near the point: " + std::to_string(pts.size()) + " at radius " + fmt(r));
    // unit displacements
    for (auto& x : pts) {
      double d = distance(x, point);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = (x[i] - point[i]) / d;
    }
    for (auto& cd : out)
      for (const auto& u : pts) cd.ratio = std::max(cd.ratio, dot(cd.direction, u));
  }
  for (auto& cd : out) cd.in = cd.ratio <= opts.threshold;
  return out;
}

std::vector<ClassifiedDirection> sample_frechet_normal_cone(const LocalSet& set, std::span<const double> point,
                                                            std::size_t count, const FrechetOptions& opts) {
  std::mt19937_64 rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  return sample_frechet_normal_cone(set, point, sample_directions(set.dim(), count, rng), opts);
}

std::vector<ClassifiedDirection> sample_limiting_normal_cone(const LocalSet& set, std::span<const double> point,
                                                             const std::vector<Vec>& directions,
                                                             const LimitingOptions& opts) {
  auto out = sample_frechet_normal_cone(set, point, directions, opts.frechet);
  std::mt19937_64 rng(opts.frechet.seed + 1);
  std::uint64_t stream = 2;
  const double reach = *std::max_element(opts.frechet.radii.begin(), opts.frechet.radii.end());
  for (double rho : opts.neighbor_radii) {
    auto near = set.sample_near(point, rho, 4 * opts.neighbors_per_radius, rng);
    std::size_t used = 0;
    for (const auto& q : near) {
      if (used == opts.neighbors_per_radius) break;
      // keep the Fréchet balls at q clear of the point itself
      if (distance(q, point) < std::max(0.5 * rho, 2 * reach)) continue;
      ++used;
      FrechetOptions fo = opts.frechet;
      fo.seed = opts.frechet.seed + stream++;
      std::vector<ClassifiedDirection> at_q;
      try {
        at_q = sample_frechet_normal_cone(set, q, directions, fo);
      } catch (const OracleError&) {
        continue;  // q sits on a piece too thin to sample; other neighbors cover it
      }
      for (std::size_t k = 0; k < out.size(); ++k) {
        out[k].ratio = std::min(out[k].ratio, at_q[k].ratio);
        out[k].in = out[k].in || at_q[k].in;
      }
    }
  }
  return out;
}

double angular_gap(std::span<const double> d, const std::vector<Vec>& to) {
  double best = 180.0;
  const double nd = norm2(d);
  for (const auto& t : to) {
    double c = dot(d, t) / (nd * norm2(t));
    best = std::min(best, std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / std::numbers::pi);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Coderivative and moduli

SampledCoderivative sampled_frechet_coderivative(const SmoothFunction& h, std::span<const double> point,
                                                 std::span<const double> y_star, double radius,
                                                 std::size_t samples, std::uint64_t seed) {
  const std::size_t N = h.vars();
  if (point.size() != N) throw InputError("point dimension does not match the map");
  if (y_star.size() != h.size()) throw InputError("y* dimension does not match the map");
  std::mt19937_64 rng(seed);
  const Vec h0 = h.evaluate(point);

  // normal equations (sum s s^T) x* = sum s q / r for unit s
  Mat G(N, N);
  Vec rhs(N, 0.0);
  std::vector<Vec> dirs;
  for (std::size_t k = 0; k < std::max(samples, 2 * N); ++k) {
    Vec s = gaussian_unit(N, rng);
    Vec plus(point.begin(), point.end()), minus = plus;
    for (std::size_t i = 0; i < N; ++i) {
      plus[i] += radius * s[i];
      minus[i] -= radius * s[i];
    }
    Vec hp = h.evaluate(plus), hm = h.evaluate(minus);
    double q = 0.0;
    for (std::size_t j = 0; j < hp.size(); ++j) q += y_star[j] * (hp[j] - hm[j]);
    q /= 2 * radius;
    for (std::size_t a = 0; a < N; ++a) {
      rhs[a] += s[a] * q;
      for (std::size_t b = 0; b < N; ++b) G(a, b) += s[a] * s[b];
    }
    dirs.push_back(std::move(s));
  }
  // Gaussian elimination with partial pivoting; G is positive definite
  Vec x = rhs;
  for (std::size_t c = 0; c < N; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < N; ++r)
      if (std::fabs(G(r, c)) > std::fabs(G(piv, c))) piv = r;
    if (std::fabs(G(piv, c)) < 1e-12) throw InternalError("degenerate sample set in coderivative fit");
    if (piv != c) {
      for (std::size_t j = 0; j < N; ++j) std::swap(G(c, j), G(piv, j));
      std::swap(x[c], x[piv]);
    }
    for (std::size_t r = c + 1; r < N; ++r) {
      double f = G(r, c) / G(c, c);
      for (std::size_t j = c; j < N; ++j) G(r, j) -= f * G(c, j);
      x[r] -= f * x[c];
    }
  }
  for (std::size_t c = N; c-- > 0;) {
    for (std::size_t j = c + 1; j < N; ++j) x[c] -= G(c, j) * x[j];
    x[c] /= G(c, c);
  }

  SampledCoderivative out;
  out.x_star = x;
  out.max_ratio = -INFINITY;
  for (const auto& s : dirs) {
    Vec p(point.begin(), point.end());
    for (std::size_t i = 0; i < N; ++i) p[i] += radius * s[i];
    Vec dh = h.evaluate(p);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      num += x[i] * radius * s[i];
      den += radius * radius * s[i] * s[i];
    }
    for (std::size_t j = 0; j < dh.size(); ++j) {
      dh[j] -= h0[j];
      num -= y_star[j] * dh[j];
      den += dh[j] * dh[j];
    }
    out.max_ratio = std::max(out.max_ratio, num / std::sqrt(den));
  }
  return out;
}

SetMap lower_level_map(const BilevelProblem& problem, const GridSpec& grid) {
  return [problem, grid](std::span<const double> x) { return solve_lower_grid(problem, x, grid).points; };
}

namespace {

std::vector<Vec> modulus_samples(std::span<const double> x_bar, const ModulusOptions& opts) {
  const std::size_t n = x_bar.size();
  std::mt19937_64 rng(opts.seed);
  std::set<Vec> seen;
  std::vector<Vec> out;
  auto add = [&](Vec x) {
    if (seen.insert(x).second) out.push_back(std::move(x));
  };
  for (double rho : opts.radii) {
    for (std::size_t i = 0; i < n; ++i)
      for (double s : {1.0, -1.0}) {
        Vec x(x_bar.begin(), x_bar.end());
        x[i] += s * rho;
        add(std::move(x));
      }
    for (std::size_t k = 0; k < opts.directions; ++k) {
      Vec d = gaussian_unit(n, rng);
      Vec x(x_bar.begin(), x_bar.end());
      for (std::size_t i = 0; i < n; ++i) x[i] += rho * d[i];
      add(std::move(x));
    }
  }
  return out;
}

std::vector<Vec> in_window(const SetMap& S, std::span<const double> x, std::span<const double> y_bar,
                           double window) {
  auto ys = S(x);
  if (ys.empty()) {
    std::string at;
    for (double v : x) at += (at.empty() ? "" : ", ") + fmt(v);
    throw OracleError("empty S(x) in window at x = (" + at + ")");
  }
  std::vector<Vec> kept;
  for (auto& y : ys)
    if (distance(y, y_bar) <= window) kept.push_back(std::move(y));
  return kept;
}

// sup over a in A of dist(a, B); 0 for empty A
double excess(const std::vector<Vec>& A, const std::vector<Vec>& B) {
  double e = 0.0;
  for (const auto& a : A) {
    double d = INFINITY;
    for (const auto& b : B) d = std::min(d, distance(a, b));
    e = std::max(e, d);
  }
  return e;
}

}  // namespace

ModulusEstimate estimate_calmness(const SetMap& S, std::span<const double> x_bar, std::span<const double> y_bar,
                                  const ModulusOptions& opts) {
  auto at_bar = S(x_bar);
  if (at_bar.empty()) throw OracleError("S(x̄) is empty");
  ModulusEstimate est;
  est.radii = opts.radii;
  for (const auto& x : modulus_samples(x_bar, opts)) {
    auto ys = in_window(S, x, y_bar, opts.window);
    est.modulus = std::max(est.modulus, excess(ys, at_bar) / distance(x, x_bar));
    ++est.samples;
  }
  return est;
}

ModulusEstimate estimate_lipschitz_like(const SetMap& S, std::span<const double> x_bar,
                                        std::span<const double> y_bar, const ModulusOptions& opts) {
  if (S(x_bar).empty()) throw OracleError("S(x̄) is empty");
  std::vector<Vec> xs{Vec(x_bar.begin(), x_bar.end())};
  for (auto& x : modulus_samples(x_bar, opts)) xs.push_back(std::move(x));
  std::vector<std::vector<Vec>> full, windowed;
  for (const auto& x : xs) {
    windowed.push_back(in_window(S, x, y_bar, opts.window));
    full.push_back(S(x));
  }
  ModulusEstimate est;
  est.radii = opts.radii;
  est.samples = xs.size();
  for (std::size_t a = 0; a < xs.size(); ++a)
    for (std::size_t b = 0; b < xs.size(); ++b)
      if (a != b) est.modulus = std::max(est.modulus, excess(windowed[a], full[b]) / distance(xs[a], xs[b]));
  return est;
}

}  // namespace mstat
