#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "mstat/expr.hpp"
#include "mstat/model.hpp"

namespace mstat::testing {

inline Polyhedron polyhedron(std::size_t dim, std::vector<Vec> rows, Vec b) {
  Polyhedron p;
  p.dim = dim;
  p.A = Mat(0, dim);
  for (const auto& r : rows) p.A.append_row(r);
  p.b = std::move(b);
  return p;
}

inline BilevelProblem bilevel(std::size_t n, std::size_t m, const std::string& F, const std::string& f,
                              Polyhedron omega, LowerSet K) {
  BilevelProblem p;
  p.n = n;
  p.m = m;
  p.F = SmoothFunction(parse(F, n, m), n + m);
  p.f = SmoothFunction(parse(f, n, m), n + m);
  p.omega = std::move(omega);
  p.K = std::move(K);
  return p;
}

inline BoxSet real_line(std::size_t m) { return BoxSet{Vec(m, -INFINITY), Vec(m, INFINITY)}; }

/// Curated instance with a candidate and what is known about it by hand.
struct Instance {
  std::string name;
  BilevelProblem problem;
  Vec x, y;
  bool optimal;          // local optimistic optimum (confirmed by the grid oracle in tests)
  bool qualification;    // expected outcome of the qualification check
  // grid window for the oracle; its fine lattice contains the x grid steps
  Vec x_lo, x_hi, y_lo, y_hi;
};

/// F=(x1-1)^2+(y1-2)^2, f=(y1-x1)^2/2, K = R, Omega = R.
inline BilevelProblem quadratic_instance() {
  return bilevel(1, 1, "(x1-1)^2+(y1-2)^2", "(y1-x1)^2/2", Polyhedron::whole_space(1), real_line(1));
}

/// f = 0, K = [0, inf): every y >= 0 solves the lower level.
inline BilevelProblem degenerate_instance() {
  return bilevel(1, 1, "x1^2+y1^2", "0", Polyhedron::whole_space(1), BoxSet{{0}, {INFINITY}});
}

inline std::vector<Instance> curated_suite() {
  std::vector<Instance> s;
  s.push_back({"quadratic", quadratic_instance(), {1.5}, {1.5}, true, true, {0.5}, {2.5}, {-1}, {3}});
  s.push_back({"quadratic-origin", quadratic_instance(), {0}, {0}, false, true, {-1}, {1}, {-1}, {3}});
  s.push_back({"unconstrained",
               bilevel(1, 1, "x1^2+y1^2", "y1^2", Polyhedron::whole_space(1), real_line(1)),
               {0}, {0}, true, true, {-1}, {1}, {-1}, {1}});
  // S(x) = clamp(x, 0, 1); optimum x = 2, y = 1 with z = 1 at the upper bound
  s.push_back({"box-upper",
               bilevel(1, 1, "(x1-2)^2+(y1-2)^2", "(y1-x1)^2/2", Polyhedron::whole_space(1), BoxSet{{0}, {1}}),
               {2}, {1}, true, true, {1}, {3}, {0}, {1}});
  // S(x) = max(x, 0); optimum at the complementarity corner (0, 0)
  s.push_back({"box-corner",
               bilevel(1, 1, "x1^2+y1^2", "(y1-x1)^2/2", Polyhedron::whole_space(1), BoxSet{{0}, {INFINITY}}),
               {0}, {0}, true, true, {-1}, {1}, {0}, {2}});
  // Lower level: projection of (x, x) onto the unit simplex; optimum x = 1, y = (1/2, 1/2)
  s.push_back({"simplex",
               bilevel(1, 2, "(x1-1)^2+(y1-1)^2+y2^2", "((y1-x1)^2+(y2-x1)^2)/2", Polyhedron::whole_space(1),
                       polyhedron(2, {{1, 1}, {-1, 0}, {0, -1}}, {1, 0, 0})),
               {1}, {0.5, 0.5}, true, true, {0.5}, {1.5}, {0, 0}, {1, 1}});
  // Omega = (-inf, 1] cuts the unconstrained optimum 1.5; optimum (1, 1) with mu = 2
  s.push_back({"omega-active",
               bilevel(1, 1, "(x1-1)^2+(y1-2)^2", "(y1-x1)^2/2", polyhedron(1, {{1}}, {1}), real_line(1)),
               {1}, {1}, true, true, {0}, {1}, {-1}, {3}});
  s.push_back({"degenerate", degenerate_instance(), {0}, {0}, true, false, {-1}, {1}, {0}, {1}});
  return s;
}

}  // namespace mstat::testing
