#include <doctest.h>

#include <cmath>
#include <random>

#include "mstat/feasibility.hpp"

using namespace mstat;

namespace {

QVec q(std::initializer_list<long> values) {
  QVec out;
  for (long v : values) out.emplace_back(v);
  return out;
}

// Random system built around a sampled point so that it is feasible by
// construction: equalities pass through the point, inequalities hold with
// random non-negative slack.
LinearSystem<Rational> constructed_system(std::mt19937_64& rng, std::size_t vars, std::size_t eqs,
                                          std::size_t ineqs, QVec& witness) {
  std::uniform_int_distribution<long> coef(-5, 5);
  std::uniform_int_distribution<long> slack(0, 3);
  LinearSystem<Rational> sys(vars);
  witness.assign(vars, Rational(0));
  for (std::size_t i = 0; i < vars; ++i) {
    if (i % 2 == 0) {
      sys.set_nonneg(i);
      witness[i] = Rational(std::abs(coef(rng)), 3);
    } else {
      witness[i] = Rational(coef(rng), 2);
    }
  }
  QVec row(vars);
  auto dotw = [&] {
    Rational s = 0;
    for (std::size_t i = 0; i < vars; ++i) s += row[i] * witness[i];
    return s;
  };
  for (std::size_t r = 0; r < eqs; ++r) {
    for (auto& c : row) c = coef(rng);
    sys.add_equality(row, dotw());
  }
  for (std::size_t r = 0; r < ineqs; ++r) {
    for (auto& c : row) c = coef(rng);
    sys.add_inequality(row, dotw() + slack(rng));
  }
  return sys;
}

}  // namespace

TEST_CASE("feasible: simplex example") {
  LinearSystem<Rational> sys(2);
  sys.set_nonneg(0);
  sys.set_nonneg(1);
  QVec row = q({1, 1});
  sys.add_equality(row, Rational(1));
  for (auto mode : {ArithmeticMode::Rational, ArithmeticMode::Float}) {
    auto r = feasible(sys, mode);
    REQUIRE(r.feasible);
    CHECK(r.point[0] + r.point[1] == doctest::Approx(1.0));
    CHECK(r.point[0] >= 0.0);
    CHECK(r.point[1] >= 0.0);
  }
  auto exact = feasible(sys, ArithmeticMode::Rational);
  CHECK(exact.exact_point->at(0) == 1);  // Bland's rule picks the first column
  CHECK(sys.max_violation(*exact.exact_point) == 0.0);
}

TEST_CASE("feasible: contradictory bounds are infeasible") {
  LinearSystem<Rational> sys(1);
  sys.set_nonneg(0);
  QVec one = q({1});
  sys.add_inequality(one, Rational(-1));  // v <= -1
  CHECK_FALSE(feasible(sys, ArithmeticMode::Rational).feasible);
  CHECK_FALSE(feasible(sys, ArithmeticMode::Float).feasible);
}

TEST_CASE("feasible: free variables and negative right-hand sides") {
  LinearSystem<Rational> sys(2);
  sys.add_equality(q({1, -1}), Rational(3));
  sys.add_inequality(q({-1, 0}), Rational(4));  // v0 >= -4
  sys.add_inequality(q({0, 1}), Rational(-2));   // v1 <= -2
  auto r = feasible(sys, ArithmeticMode::Rational);
  REQUIRE(r.feasible);
  CHECK(sys.max_violation(*r.exact_point) == 0.0);
}

TEST_CASE("minimize returns the optimum and detects unboundedness") {
  LinearSystem<Rational> sys(2);
  sys.set_nonneg(0);
  sys.set_nonneg(1);
  sys.add_inequality(q({1, 1}), Rational(4));
  sys.add_inequality(q({-1, 1}), Rational(-1));  // v1 <= v0 - 1
  QVec c = q({-1, -2});
  auto r = minimize(sys, std::span<const Rational>(c));
  REQUIRE(r.status == LpStatus::Feasible);
  CHECK(r.objective == Rational(-11, 2));  // vertex (5/2, 3/2)

  LinearSystem<Rational> open(1);
  QVec down = q({-1});
  auto u = minimize(open, std::span<const Rational>(down));
  CHECK(u.status == LpStatus::Unbounded);
}

TEST_CASE("property: constructed feasible systems are solved in both modes") {
  std::mt19937_64 rng(11);
  int float_checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<std::size_t> dim(1, 6), rows(0, 5);
    QVec witness;
    auto sys = constructed_system(rng, dim(rng), rows(rng), rows(rng), witness);
    CHECK(sys.max_violation(witness) == 0.0);

    auto exact = feasible(sys, ArithmeticMode::Rational);
    REQUIRE(exact.feasible);
    CHECK(sys.max_violation(*exact.exact_point) == 0.0);

    auto approx = feasible(sys, ArithmeticMode::Float);
    REQUIRE(approx.feasible);
    CHECK(to_float(sys).max_violation(approx.point) <= 1e-9);
    ++float_checked;
  }
  CHECK(float_checked == 200);
}

TEST_CASE("property: rational and float verdicts agree on random systems") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<long> coef(-4, 4);
  int infeasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    LinearSystem<Rational> sys(3);
    sys.set_nonneg(0);
    QVec row(3);
    for (int r = 0; r < 4; ++r) {
      for (auto& c : row) c = coef(rng);
      sys.add_inequality(row, Rational(coef(rng)));
    }
    for (auto& c : row) c = coef(rng);
    sys.add_equality(row, Rational(coef(rng)));
    bool a = feasible(sys, ArithmeticMode::Rational).feasible;
    bool b = feasible(sys, ArithmeticMode::Float).feasible;
    CHECK(a == b);
    infeasible += a ? 0 : 1;
  }
  CHECK(infeasible > 0);  // the corpus exercises both verdicts
}

TEST_CASE("cone_nonzero examples") {
  SUBCASE("ray in the negative quadrant") {
    LinearSystem<Rational> sys(2);
    sys.add_inequality(q({1, 0}), Rational(0));
    sys.add_inequality(q({0, 1}), Rational(0));
    sys.add_equality(q({1, -1}), Rational(0));
    auto r = cone_nonzero(sys);
    REQUIRE(r.nonzero);
    CHECK(r.witness[0] == doctest::Approx(-1.0 / std::sqrt(2.0)));
    CHECK(r.witness[1] == doctest::Approx(-1.0 / std::sqrt(2.0)));
    CHECK(std::fabs(norm2(r.witness) - 1.0) <= 1e-12);
  }
  SUBCASE("only the origin") {
    LinearSystem<Rational> sys(2);
    sys.add_equality(q({1, 0}), Rational(0));
    sys.add_equality(q({0, 1}), Rational(0));
    CHECK_FALSE(cone_nonzero(sys).nonzero);
  }
  SUBCASE("rows positively spanning the plane") {
    // rows whose nonnegative span is the whole plane: Mv <= 0 forces v = 0
    LinearSystem<Rational> sys(2);
    sys.add_inequality(q({1, 1}), Rational(0));
    sys.add_inequality(q({-2, 1}), Rational(0));
    sys.add_inequality(q({1, -3}), Rational(0));
    CHECK_FALSE(cone_nonzero(sys).nonzero);
    CHECK_FALSE(cone_nonzero(to_float(sys)).nonzero);

    // sampling oracle: every direction violates some row
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    auto fsys = to_float(sys);
    for (int i = 0; i < 10000; ++i) {
      Vec d{g(rng), g(rng)};
      double n = norm2(d);
      d[0] /= n;
      d[1] /= n;
      CHECK(fsys.max_violation(d) > 0.0);
    }
  }
}

TEST_CASE("property: cone_nonzero witnesses satisfy the system") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<long> coef(-3, 3);
  int nonzero = 0;
  for (int trial = 0; trial < 200; ++trial) {
    LinearSystem<Rational> sys(3);
    QVec row(3);
    for (int r = 0; r < 3; ++r) {
      for (auto& c : row) c = coef(rng);
      sys.add_inequality(row, Rational(0));
    }
    if (trial % 3 == 0) {
      for (auto& c : row) c = coef(rng);
      sys.add_equality(row, Rational(0));
    }
    auto r = cone_nonzero(sys);
    if (!r.nonzero) continue;
    ++nonzero;
    CHECK(std::fabs(norm2(r.witness) - 1.0) <= 1e-12);
    CHECK(to_float(sys).max_violation(r.witness) <= 1e-12);
  }
  CHECK(nonzero > 0);
}

TEST_CASE("cone_nonzero restricted to probe variables") {
  // v0 = v1 with v2 free; probing only v0 finds the direction (1, 1, *)
  LinearSystem<Rational> sys(3);
  sys.add_equality(q({1, -1, 0}), Rational(0));
  std::vector<std::size_t> probe{0};
  auto r = cone_nonzero(sys, probe);
  REQUIRE(r.nonzero);
  CHECK(r.probe_var == 0);
  CHECK(r.witness[0] == doctest::Approx(1.0));
}
