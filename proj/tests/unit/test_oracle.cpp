#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "../support/instances.hpp"
#include "../support/random_expr.hpp"
#include "mstat/calculus.hpp"
#include "mstat/errors.hpp"
#include "mstat/oracle.hpp"
#include "mstat/polyhedral.hpp"

using namespace mstat;
using namespace mstat::testing;

namespace {

BilevelProblem clamp_instance(const std::string& F = "(x1-1)^2+(y1-2)^2") {
  return bilevel(1, 1, F, "(y1-x1)^2/2", Polyhedron::whole_space(1), BoxSet{{0}, {1}});
}

// IN directions and exactly-member directions are within 2° of each other.
void check_matches(const std::vector<ClassifiedDirection>& cls, const std::function<bool(const Vec&)>& exact) {
  std::vector<Vec> in, ex;
  for (const auto& cd : cls) {
    if (cd.in) in.push_back(cd.direction);
    if (exact(cd.direction)) ex.push_back(cd.direction);
  }
  REQUIRE(!ex.empty());
  REQUIRE(!in.empty());
  for (const auto& d : in) CHECK(angular_gap(d, ex) <= 2.0);
  for (const auto& d : ex) CHECK(angular_gap(d, in) <= 2.0);
}

}  // namespace

TEST_CASE("solve_lower_grid examples") {
  auto g = GridSpec::uniform({0}, {1}, 11);
  auto p = clamp_instance();
  auto s = solve_lower_grid(p, Vec{0.5}, g);
  REQUIRE(s.points.size() == 1);
  CHECK(s.points[0][0] == doctest::Approx(0.5));

  s = solve_lower_grid(p, Vec{2}, g);
  REQUIRE(s.points.size() == 1);
  CHECK(s.points[0][0] == 1.0);

  auto concave = bilevel(1, 1, "0", "-(y1-3/10)^2", Polyhedron::whole_space(1), BoxSet{{0}, {1}});
  for (double x : {-3.0, 0.0, 10.0}) {
    s = solve_lower_grid(concave, Vec{x}, g);
    REQUIRE(s.points.size() == 1);
    CHECK(s.points[0][0] == 1.0);
    CHECK(s.value == doctest::Approx(-0.49));
  }
}

TEST_CASE("solve_lower_grid: ties are reported in lexicographic order") {
  // f = 0 on K = [0,1]^2: every grid point ties
  auto p = bilevel(1, 2, "0", "0", Polyhedron::whole_space(1), BoxSet{{0, 0}, {1, 1}});
  auto s = solve_lower_grid(p, Vec{0}, GridSpec::uniform({0, 0}, {1, 1}, 3, 1));
  REQUIRE(s.points.size() == 9);
  for (std::size_t k = 1; k < s.points.size(); ++k) CHECK(s.points[k - 1] < s.points[k]);
  CHECK(s.points.front() == Vec{0, 0});
  CHECK(s.points.back() == Vec{1, 1});
}

TEST_CASE("solve_lower_grid: errors") {
  auto p = clamp_instance();
  CHECK_THROWS_AS(solve_lower_grid(p, Vec{0}, GridSpec::uniform({2}, {3}, 5)), OracleError);
  CHECK_THROWS_AS(solve_lower_grid(p, Vec{0}, GridSpec::uniform({0}, {1}, 1)), InputError);
  CHECK_THROWS_AS(solve_lower_grid(p, Vec{0}, GridSpec::uniform({0}, {INFINITY}, 5)), InputError);
  CHECK_THROWS_AS(solve_lower_grid(p, Vec{0}, GridSpec::uniform({0, 0}, {1, 1}, 5)), InputError);
}

TEST_CASE("phi0 examples") {
  auto p = quadratic_instance();
  auto g = GridSpec::uniform({-1}, {4}, 51);
  CHECK(phi0(p, Vec{1.5}, g).value == doctest::Approx(0.5));
  CHECK(phi0(p, Vec{1}, g).value == doctest::Approx(1.0));
  auto c = bilevel(1, 1, "7/2", "(y1-x1)^2", Polyhedron::whole_space(1), real_line(1));
  CHECK(phi0(c, Vec{0.3}, g).value == 3.5);
}

TEST_CASE("verify_optimistic_local examples") {
  auto p = quadratic_instance();
  auto g = GridSpec::uniform({-1}, {4}, 51);
  auto v = verify_optimistic_local(p, make_candidate(p, {1.5}, {1.5}), g, {0.5, 11, 1e-6});
  CHECK(v.optimal);
  CHECK(v.value_matches);
  CHECK(v.points_checked == 11);
  CHECK(v.phi0_at_candidate == doctest::Approx(0.5));

  v = verify_optimistic_local(p, make_candidate(p, {0}, {0}), g, {0.5, 11, 1e-6});
  CHECK_FALSE(v.optimal);
  CHECK(v.phi0_at_candidate == doctest::Approx(5.0));
  REQUIRE(v.worst_x.has_value());
  CHECK((*v.worst_x)[0] == doctest::Approx(0.5));  // phi0 = 2(x - 1.5)^2 + 0.5 decreases toward 1.5
  CHECK(v.worst_phi0 < v.phi0_at_candidate);

  // single-point Omega
  auto q = bilevel(1, 1, "x1+y1", "(y1-x1)^2/2", polyhedron(1, {{1}, {-1}}, {3, -3}), real_line(1));
  v = verify_optimistic_local(q, make_candidate(q, {3}, {3}), GridSpec::uniform({0}, {5}, 11), {0.5, 11, 1e-6});
  CHECK(v.optimal);
  CHECK(v.points_checked == 1);
}

TEST_CASE("curated suite: grid verdicts agree with the hand analysis") {
  for (const auto& inst : curated_suite()) {
    CAPTURE(inst.name);
    GridSpec g;
    g.lower = inst.y_lo;
    g.upper = inst.y_hi;
    g.resolution.assign(inst.problem.m, 41);
    auto v = verify_optimistic_local(inst.problem, make_candidate(inst.problem, inst.x, inst.y), g,
                                     {0.25, 11, 1e-6});
    CHECK(v.optimal == inst.optimal);
  }
}

TEST_CASE("property: refinement consistency of phi0") {
  // x = 1/3 has no terminating binary expansion, so the nested grids never
  // contain S(x) exactly and every refinement moves the approximation
  const double x = 1.0 / 3.0;
  for (const auto& p : {quadratic_instance(), clamp_instance(), clamp_instance("(x1+y1)^2-y1")}) {
    std::vector<double> values;
    for (std::size_t res : {11, 21, 41, 81, 161}) {
      GridSpec g = GridSpec::uniform({-1}, {4}, res, 1);
      values.push_back(phi0(p, Vec{x}, g).value);
    }
    std::vector<double> gaps;
    for (std::size_t k = 1; k < values.size(); ++k) gaps.push_back(std::fabs(values[k] - values[k - 1]));
    for (std::size_t k = 1; k < gaps.size(); ++k) CHECK(gaps[k] <= gaps[k - 1] + 1e-15);
  }
}

TEST_CASE("Fréchet sampling: half-plane boundary and interior point") {
  PolyhedronSet half(polyhedron(2, {{1, 0}}, {0}));
  auto cls = sample_frechet_normal_cone(half, Vec{0, 0}, circle_grid());
  for (const auto& cd : cls) {
    if (cd.direction == Vec{1, 0}) CHECK(cd.in);
    if (cd.direction == Vec{0, 1} || cd.direction == Vec{0, -1}) CHECK_FALSE(cd.in);
    if (cd.in) CHECK(angular_gap(cd.direction, {Vec{1, 0}}) <= 2.0);
  }

  for (const auto& cd : sample_frechet_normal_cone(half, Vec{-1, 0.5}, circle_grid())) CHECK_FALSE(cd.in);
  for (const auto& cd : sample_frechet_normal_cone(half, Vec{-1, 0.5}, std::size_t{200})) CHECK_FALSE(cd.in);
}

TEST_CASE("Fréchet sampling: simplex vertex matches the exact cone") {
  auto P = polyhedron(2, {{1, 1}, {-1, 0}, {0, -1}}, {1, 0, 0});
  auto exact = normal_cone_polyhedron(P, Vec{1, 0});
  check_matches(sample_frechet_normal_cone(PolyhedronSet(P), Vec{1, 0}, circle_grid()),
                [&](const Vec& d) { return cone_contains(exact, d).member; });
}

TEST_CASE("Fréchet sampling: errors") {
  PieceUnionSet point(2, {{Mat(0, 2), {}, Mat(0, 2), {}}});  // all of R^2, queried off-grid below
  PieceUnionSet origin(2, {{Mat(0, 2), {}, [] {
                              Mat E(0, 2);
                              E.append_row(Vec{1, 0});
                              E.append_row(Vec{0, 1});
                              return E;
                            }(),
                            {0, 0}}});
  CHECK_THROWS_AS(sample_frechet_normal_cone(origin, Vec{0, 0}, circle_grid()), OracleError);
  CHECK_THROWS_AS(sample_frechet_normal_cone(origin, Vec{1, 0}, circle_grid()), PointNotInSetError);
  CHECK_NOTHROW(sample_frechet_normal_cone(point, Vec{1, 0}, circle_grid()));
}

TEST_CASE("limiting sampling: complementarity corner") {
  BoxSet B{{0}, {INFINITY}};
  auto set = graph_of_box_normal_cone(B);
  CHECK(set.contains(Vec{0, -3}));
  CHECK(set.contains(Vec{2, 0}));
  CHECK_FALSE(set.contains(Vec{1, 1}));
  auto exact = limiting_normal_cone_gph_box(B, Vec{0}, Vec{0});
  auto cls = sample_limiting_normal_cone(set, Vec{0, 0}, circle_grid());
  check_matches(cls, [&](const Vec& d) { return exact.contains(d).member; });

  // the Fréchet cone at the corner alone is only the polar quadrant R_- x R_+
  for (const auto& cd : sample_frechet_normal_cone(set, Vec{0, 0}, circle_grid()))
    if (cd.in) CHECK((cd.direction[0] <= 1e-4 && cd.direction[1] >= -1e-4));
}

TEST_CASE("limiting sampling: smooth manifold and convex polyhedron") {
  Mat E(0, 2);
  E.append_row(Vec{1, -1});
  PieceUnionSet diagonal(2, {{Mat(0, 2), {}, E, {0}}});
  const double s = 1 / std::sqrt(2.0);
  auto cls = sample_limiting_normal_cone(diagonal, Vec{0.3, 0.3}, circle_grid());
  bool plus = false, minus = false;
  for (const auto& cd : cls) {
    if (!cd.in) continue;
    CHECK(angular_gap(cd.direction, {Vec{s, -s}, Vec{-s, s}}) <= 2.0);
    plus = plus || angular_gap(cd.direction, {Vec{s, -s}}) <= 0.5;
    minus = minus || angular_gap(cd.direction, {Vec{-s, s}}) <= 0.5;
  }
  CHECK(plus);
  CHECK(minus);

  auto P = polyhedron(2, {{1, 1}, {-1, 0}, {0, -1}}, {1, 0, 0});
  PolyhedronSet simplex(P);
  auto lim = sample_limiting_normal_cone(simplex, Vec{1, 0}, circle_grid());
  auto fre = sample_frechet_normal_cone(simplex, Vec{1, 0}, circle_grid());
  for (std::size_t k = 0; k < lim.size(); ++k) CHECK(lim[k].in == fre[k].in);
}

TEST_CASE("sampled Fréchet coderivative matches the adjoint Jacobian") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + trial % 2, m = 1 + (trial / 2) % 2;
    std::vector<Expr> comps;
    for (std::size_t i = 0; i < m; ++i) comps.push_back(random_smooth(rng, n, m, 3));
    SmoothFunction h(comps, n + m);
    Vec pt = random_point(rng, n + m, -1, 1), ys = random_point(rng, m, -1, 1);
    auto sampled = sampled_frechet_coderivative(h, pt, ys);
    Vec exact = coderivative_smooth(h, pt, ys);
    Vec scal = scalarized_subdifferential(h, ys, pt);
    for (std::size_t v = 0; v < n + m; ++v) {
      CHECK(std::fabs(sampled.x_star[v] - exact[v]) <= 1e-5);
      CHECK(std::fabs(scal[v] - exact[v]) <= 1e-5);
    }
    CHECK(sampled.max_ratio <= 1e-2);
  }
}

TEST_CASE("calmness and Lipschitz-like estimates") {
  SetMap identity = [](std::span<const double> x) { return std::vector<Vec>{Vec(x.begin(), x.end())}; };
  SetMap clamp = [](std::span<const double> x) { return std::vector<Vec>{{std::clamp(x[0], 0.0, 1.0)}}; };
  SetMap constant = [](std::span<const double>) { return std::vector<Vec>{{0.25}}; };

  auto c = estimate_calmness(identity, Vec{0.5}, Vec{0.5});
  auto l = estimate_lipschitz_like(identity, Vec{0.5}, Vec{0.5});
  CHECK(c.modulus == doctest::Approx(1.0).epsilon(0.05));
  CHECK(l.modulus == doctest::Approx(1.0).epsilon(0.05));
  CHECK(c.radii == std::vector<double>{0.2, 0.1, 0.05});

  CHECK(estimate_calmness(clamp, Vec{0.5}, Vec{0.5}).modulus == doctest::Approx(1.0).epsilon(0.05));
  CHECK(estimate_lipschitz_like(clamp, Vec{0.5}, Vec{0.5}).modulus == doctest::Approx(1.0).epsilon(0.05));
  CHECK(estimate_calmness(constant, Vec{0.5}, Vec{0.25}).modulus == 0.0);
  CHECK(estimate_lipschitz_like(constant, Vec{0.5}, Vec{0.25}).modulus == 0.0);

  // grid-backed lower-level maps; x samples sit on the fine lattice
  auto grid = GridSpec::uniform({-1}, {2}, 31);  // fine step 0.025
  const double grid_tol = 0.025 / 0.05;
  for (const auto& p : {quadratic_instance(), clamp_instance()}) {
    auto S = lower_level_map(p, grid);
    ModulusOptions o;
    o.directions = 0;
    auto cal = estimate_calmness(S, Vec{0.5}, Vec{0.5}, o);
    auto lip = estimate_lipschitz_like(S, Vec{0.5}, Vec{0.5}, o);
    CHECK(cal.modulus <= lip.modulus + grid_tol);
    CHECK(cal.modulus == doctest::Approx(1.0).epsilon(0.05));
  }

  SetMap empty = [](std::span<const double> x) { return x[0] > 0.6 ? std::vector<Vec>{} : std::vector<Vec>{{0}}; };
  CHECK_THROWS_AS(estimate_calmness(empty, Vec{0.5}, Vec{0}), OracleError);
}

TEST_CASE("property: calmness never exceeds the Lipschitz-like estimate") {
  std::mt19937_64 rng(62);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = std::uniform_real_distribution<double>(-2, 2)(rng);
    const double b = std::uniform_real_distribution<double>(-1, 1)(rng);
    SetMap S = [a, b](std::span<const double> x) {
      return std::vector<Vec>{{a * x[0] + b * x[1] * x[1]}, {std::sin(x[0]) + b}};
    };
    Vec xb = random_point(rng, 2, -1, 1);
    ModulusOptions o;
    o.seed = static_cast<std::uint64_t>(trial);
    auto cal = estimate_calmness(S, xb, S(xb)[0], o);
    auto lip = estimate_lipschitz_like(S, xb, S(xb)[0], o);
    CHECK(cal.modulus <= lip.modulus);
  }
}
