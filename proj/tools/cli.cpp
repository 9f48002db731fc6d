#include "mstat/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "mstat/errors.hpp"
#include "mstat/oracle.hpp"
#include "mstat/polyhedral.hpp"
#include "mstat/stationarity.hpp"

namespace mstat::cli {

namespace {

// ---------------------------------------------------------------------------
// Reading

class Reader {
 public:
  std::vector<std::string> issues;

  void fail(const std::string& where, const std::string& what) { issues.push_back(where + ": " + what); }

  void only_members(const Json& obj, const std::string& where, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items())
      if (!allowed.count(key)) fail(where, "unknown member \"" + key + "\"");
  }

  bool require(const Json& obj, const std::string& where, const std::string& key) {
    if (obj.contains(key)) return true;
    fail(where, "missing member \"" + key + "\"");
    return false;
  }

  std::optional<std::size_t> count(const Json& v, const std::string& where) {
    if (v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0)) return v.get<std::size_t>();
    fail(where, "expected a nonnegative integer");
    return std::nullopt;
  }

  std::optional<double> number(const Json& v, const std::string& where, bool sentinels = false) {
    if (v.is_number()) return v.get<double>();
    if (sentinels && v.is_string()) {
      if (v == "inf") return INFINITY;
      if (v == "-inf") return -INFINITY;
    }
    fail(where, sentinels ? "expected a number, \"inf\" or \"-inf\"" : "expected a number");
    return std::nullopt;
  }

  std::optional<Vec> vector(const Json& v, const std::string& where, std::optional<std::size_t> size,
                            bool sentinels = false) {
    if (!v.is_array()) {
      fail(where, "expected an array");
      return std::nullopt;
    }
    if (size && v.size() != *size) {
      fail(where, "expected " + std::to_string(*size) + " entries, found " + std::to_string(v.size()));
      return std::nullopt;
    }
    Vec out;
    bool ok = true;
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto x = number(v[i], where + "[" + std::to_string(i) + "]", sentinels);
      if (x) out.push_back(*x);
      else ok = false;
    }
    if (!ok) return std::nullopt;
    return out;
  }

  std::optional<Polyhedron> polyhedron(const Json& v, const std::string& where, std::optional<std::size_t> dim) {
    if (!v.is_object()) {
      fail(where, "expected an object with members A and b");
      return std::nullopt;
    }
    only_members(v, where, {"A", "b"});
    if (!require(v, where, "A") || !require(v, where, "b")) return std::nullopt;
    if (!v["A"].is_array()) {
      fail(where + ".A", "expected an array of rows");
      return std::nullopt;
    }
    Polyhedron P;
    P.dim = dim.value_or(0);
    P.A = Mat(0, P.dim);
    bool ok = true;
    for (std::size_t r = 0; r < v["A"].size(); ++r) {
      auto row = vector(v["A"][r], where + ".A[" + std::to_string(r) + "]", dim);
      if (row) P.A.append_row(*row);
      else ok = false;
    }
    auto b = vector(v["b"], where + ".b", v["A"].size());
    if (!b || !ok || !dim) return std::nullopt;
    P.b = *b;
    return P;
  }
};

Expr expression(Reader& rd, const Json& v, const std::string& where, std::size_t n, std::size_t m) {
  if (!v.is_string()) {
    rd.fail(where, "expected expression text");
    return Expr::constant(0);
  }
  try {
    return parse(v.get<std::string>(), n, m);
  } catch (const ParseError& e) {
    rd.fail(where, e.what());
    return Expr::constant(0);
  }
}

}  // namespace

ProblemFile parse_problem(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InputError(std::string("problem file is not valid JSON: ") + e.what());
  }
  Reader rd;
  if (!doc.is_object()) throw InputError("problem file: expected an object at the top level");
  rd.only_members(doc, "problem", {"n", "m", "F", "f", "Omega", "K", "candidates", "tolerances"});
  for (const char* key : {"n", "m", "F", "f", "Omega", "K"}) rd.require(doc, "problem", key);

  std::optional<std::size_t> n, m;
  if (doc.contains("n")) n = rd.count(doc["n"], "n");
  if (doc.contains("m")) m = rd.count(doc["m"], "m");
  if (m && *m == 0) rd.fail("m", "the lower level needs at least one variable");

  ProblemFile pf;
  BilevelProblem& p = pf.problem;
  p.n = n.value_or(0);
  p.m = m.value_or(0);
  if (n && m) {
    if (doc.contains("F")) p.F = SmoothFunction(expression(rd, doc["F"], "F", p.n, p.m), p.n + p.m);
    if (doc.contains("f")) p.f = SmoothFunction(expression(rd, doc["f"], "f", p.n, p.m), p.n + p.m);
  }
  if (doc.contains("Omega"))
    if (auto P = rd.polyhedron(doc["Omega"], "Omega", n)) p.omega = *P;

  if (doc.contains("K")) {
    const Json& K = doc["K"];
    if (K.is_object() && K.contains("box")) {
      rd.only_members(K, "K", {"box"});
      const Json& box = K["box"];
      if (!box.is_object()) {
        rd.fail("K.box", "expected an object with members lower and upper");
      } else {
        rd.only_members(box, "K.box", {"lower", "upper"});
        if (rd.require(box, "K.box", "lower") && rd.require(box, "K.box", "upper")) {
          auto lo = rd.vector(box["lower"], "K.box.lower", m, true);
          auto up = rd.vector(box["upper"], "K.box.upper", m, true);
          if (lo && up) p.K = BoxSet{*lo, *up};
        }
      }
    } else if (auto P = rd.polyhedron(K, "K", m)) {
      p.K = *P;
    }
  }

  if (doc.contains("candidates")) {
    const Json& cs = doc["candidates"];
    if (!cs.is_array()) rd.fail("candidates", "expected an array");
    else
      for (std::size_t k = 0; k < cs.size(); ++k) {
        const std::string where = "candidates[" + std::to_string(k) + "]";
        if (!cs[k].is_object()) {
          rd.fail(where, "expected an object with members x and y");
          continue;
        }
        rd.only_members(cs[k], where, {"x", "y"});
        if (!rd.require(cs[k], where, "x") || !rd.require(cs[k], where, "y")) continue;
        auto x = rd.vector(cs[k]["x"], where + ".x", n);
        auto y = rd.vector(cs[k]["y"], where + ".y", m);
        if (x && y) pf.candidates.emplace_back(*x, *y);
      }
  }

  if (doc.contains("tolerances")) {
    const Json& t = doc["tolerances"];
    if (!t.is_object()) {
      rd.fail("tolerances", "expected an object");
    } else {
      rd.only_members(t, "tolerances", {"active", "residual", "cone_margin"});
      auto set = [&](const char* key, double& slot) {
        if (!t.contains(key)) return;
        auto v = rd.number(t[key], std::string("tolerances.") + key);
        if (v && *v > 0) slot = *v;
        else if (v) rd.fail(std::string("tolerances.") + key, "must be positive");
      };
      set("active", pf.tol.active);
      set("residual", pf.tol.residual);
      set("cone_margin", pf.tol.cone_margin);
    }
  }

  if (!rd.issues.empty()) throw InputError(std::move(rd.issues));
  validate(p);
  return pf;
}

ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open problem file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

namespace {

Json numbers(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x + 0.0);  // no negative zero in reports
  return a;
}

Json exact_strings(std::span<const Rational> v) {
  Json a = Json::array();
  for (const auto& q : v) a.push_back(to_string(q));
  return a;
}

Json string_rows(const std::vector<QVec>& rows) {
  Json a = Json::array();
  for (const auto& r : rows) a.push_back(exact_strings(r));
  return a;
}

Json cone_json(const PolyhedralCone& c) {
  Json j;
  j["dim"] = c.dim();
  j["rays"] = string_rows(c.rays());
  j["lines"] = string_rows(c.lines());
  j["ineq"] = string_rows(c.ineq());
  j["eq"] = string_rows(c.eq());
  return j;
}

Json indices_one_based(const std::vector<std::size_t>& idx) {
  Json a = Json::array();
  for (auto i : idx) a.push_back(i + 1);
  return a;
}

Json tolerances_json(const Tolerances& t) {
  Json j;
  j["active"] = t.active;
  j["residual"] = t.residual;
  j["cone_margin"] = t.cone_margin;
  return j;
}

Json header(const std::string& command) {
  Json j;
  j["tool"] = "mstat";
  j["version"] = kVersion;
  j["command"] = command;
  return j;
}

Json error_report(const std::string& command, const std::string& kind, const std::vector<std::string>& messages) {
  Json j = header(command);
  j["verdict"] = "INPUT_ERROR";
  j["exit_code"] = static_cast<int>(kInputError);
  Json errs = Json::array();
  for (const auto& m : messages) errs.push_back(Json{{"kind", kind}, {"message", m}});
  j["errors"] = errs;
  return j;
}

struct Common {
  std::string problem;
  std::size_t candidate = 0;
};

struct TolFlags {
  std::optional<double> active, residual, cone;
  Tolerances apply(Tolerances t) const {
    if (active) t.active = *active;
    if (residual) t.residual = *residual;
    if (cone) t.cone_margin = *cone;
    return t;
  }
};

struct GridFlags {
  std::vector<double> lower, upper;
  std::size_t points = 41;
  std::size_t refine = 4;

  GridSpec resolve(const BilevelProblem& p) const {
    GridSpec g;
    if (!lower.empty() || !upper.empty()) {
      g.lower = lower;
      g.upper = upper;
    } else if (const auto* box = std::get_if<BoxSet>(&p.K)) {
      g.lower = box->lower;
      g.upper = box->upper;
      for (std::size_t i = 0; i < p.m; ++i)
        if (!std::isfinite(g.lower[i]) || !std::isfinite(g.upper[i]))
          throw InputError("K is unbounded: pass --grid-lower and --grid-upper");
    } else {
      throw InputError("K is a general polyhedron: pass --grid-lower and --grid-upper");
    }
    g.resolution.assign(p.m, points);
    g.refinement = refine;
    g.validate(p.m);
    return g;
  }
};

Json grid_json(const GridSpec& g) {
  Json j;
  j["lower"] = numbers(g.lower);
  j["upper"] = numbers(g.upper);
  j["points"] = g.resolution.empty() ? 0 : g.resolution.front();
  j["refinement"] = g.refinement;
  return j;
}

Candidate pick_candidate(const ProblemFile& pf, std::size_t k) {
  if (k >= pf.candidates.size())
    throw InputError("candidate index " + std::to_string(k) + " out of range (the file lists " +
                     std::to_string(pf.candidates.size()) + ")");
  return make_candidate(pf.problem, pf.candidates[k].first, pf.candidates[k].second);
}

Json candidate_json(const Candidate& c, std::size_t index) {
  Json j;
  j["index"] = index;
  j["x"] = numbers(c.x);
  j["y"] = numbers(c.y);
  j["z"] = numbers(c.z);
  return j;
}

// --- commands ---------------------------------------------------------------

struct CheckArgs {
  Common common;
  bool rational = false, floating = false, verify = false;
  TolFlags tol;
};

int cmd_check(const CheckArgs& a, Json& r) {
  const auto pf = load_problem(a.common.problem);
  const Candidate c = pick_candidate(pf, a.common.candidate);
  StationarityOptions so;
  so.tol = a.tol.apply(pf.tol);
  so.mode = a.floating ? ArithmeticMode::Float : ArithmeticMode::Rational;
  so.verify_derivatives = a.verify;

  auto q = check_qualification(pf.problem, c, so);
  auto s = check_m_stationarity(pf.problem, c, so);
  int code = !q.holds ? kQualificationFails : s.stationary ? kStationary : kNotStationary;
  r["verdict"] = code == kStationary ? "STATIONARY" : code == kNotStationary ? "NOT_STATIONARY" : "QUALIFICATION_FAILS";
  r["exit_code"] = code;
  r["candidate"] = candidate_json(c, a.common.candidate);
  r["mode"] = to_string(s.mode);
  Json st;
  st["stationary"] = s.stationary;
  st["reliable"] = q.holds;  // without the qualification a negative answer proves nothing
  st["branches_checked"] = s.branches_checked;
  r["stationarity"] = st;
  if (s.certificate) {
    const auto& cert = *s.certificate;
    auto rep = explain_certificate(cert, pf.problem, c, so.tol);
    Json j;
    j["branch"] = cert.branch;
    j["description"] = rep.description;
    j["alpha"] = numbers(cert.alpha);
    j["beta"] = numbers(cert.beta);
    j["gamma"] = numbers(cert.gamma);
    j["eta"] = numbers(cert.eta);
    j["mu"] = numbers(cert.mu);
    j["omega_active"] = indices_one_based(cert.omega_active);
    if (cert.beta_exact) {
      Json e;
      e["beta"] = exact_strings(*cert.beta_exact);
      e["gamma"] = exact_strings(*cert.gamma_exact);
      e["mu"] = exact_strings(*cert.mu_exact);
      j["exact"] = e;
    }
    Json res;
    res["equation"] = rep.equation_residual;
    res["eta"] = rep.eta_residual;
    res["cone_margin"] = rep.cone_margin;
    j["residuals"] = res;
    r["certificate"] = j;
  } else {
    r["certificate"] = nullptr;
  }
  Json qj;
  qj["holds"] = q.holds;
  if (q.witness) {
    Json w;
    w["x_star"] = numbers(q.witness->x_star);
    w["y_star"] = numbers(q.witness->y_star);
    w["z_star"] = numbers(q.witness->z_star);
    w["branch"] = q.witness->branch;
    qj["witness"] = w;
  } else {
    qj["witness"] = nullptr;
  }
  r["qualification"] = qj;
  r["tolerances"] = tolerances_json(so.tol);
  return code;
}

struct LowerArgs {
  Common common;
  std::vector<double> x;
  GridFlags grid;
};

int cmd_lower(const LowerArgs& a, Json& r) {
  const auto pf = load_problem(a.common.problem);
  if (a.x.size() != pf.problem.n)
    throw InputError("--x has " + std::to_string(a.x.size()) + " entries, expected " + std::to_string(pf.problem.n));
  const GridSpec g = a.grid.resolve(pf.problem);
  auto res = phi0(pf.problem, a.x, g);
  r["verdict"] = "OK";
  r["exit_code"] = static_cast<int>(kStationary);
  r["x"] = numbers(a.x);
  r["grid"] = grid_json(g);
  Json sols = Json::array();
  for (const auto& y : res.solutions.points) sols.push_back(numbers(y));
  r["solutions"] = sols;
  r["lower_value"] = res.solutions.value;
  r["phi0"] = res.value;
  r["argmin"] = numbers(res.y);
  return kStationary;
}

struct ConeArgs {
  Common common;
  std::string which;
  std::vector<double> point, z;
  TolFlags tol;
};

int cmd_cone(const ConeArgs& a, Json& r) {
  const auto pf = load_problem(a.common.problem);
  const Tolerances tol = a.tol.apply(pf.tol);
  const auto& p = pf.problem;
  auto from_candidate = [&]() { return pick_candidate(pf, a.common.candidate); };
  auto point_or = [&](std::size_t dim, auto fallback) {
    if (a.point.empty()) return fallback();
    if (a.point.size() != dim)
      throw InputError("--point has " + std::to_string(a.point.size()) + " entries, expected " + std::to_string(dim));
    return a.point;
  };
  r["verdict"] = "OK";
  r["exit_code"] = static_cast<int>(kStationary);
  r["which"] = a.which;
  if (a.which == "omega") {
    Vec x = point_or(p.n, [&] { return from_candidate().x; });
    if (!p.omega.contains(x, tol.active)) throw PointNotInSetError("point is not in Omega");
    r["point"] = numbers(x);
    r["cone"] = cone_json(normal_cone_polyhedron(p.omega, x, tol.active));
  } else if (a.which == "K") {
    Vec y = point_or(p.m, [&] { return from_candidate().y; });
    if (!contains(p.K, y, tol.active)) throw PointNotInSetError("point is not in K");
    r["point"] = numbers(y);
    r["cone"] = cone_json(normal_cone(p.K, y, tol.active));
  } else {
    Vec y, z;
    if (a.point.empty()) {
      auto c = from_candidate();
      y = c.y;
      z = a.z.empty() ? c.z : a.z;
    } else {
      y = point_or(p.m, [] { return Vec{}; });
      if (a.z.empty()) throw InputError("--which gph with --point also needs --z");
      z = a.z;
    }
    if (z.size() != p.m) throw InputError("--z has " + std::to_string(z.size()) + " entries, expected " + std::to_string(p.m));
    GraphConeOptions go;
    go.tol = tol.active;
    auto branches = graph_cone(p.K, y, z, go);
    r["y"] = numbers(y);
    r["z"] = numbers(z);
    Json list = Json::array();
    for (std::size_t k = 0; k < branches.size(); ++k) {
      auto b = branches.branch(k);
      Json j;
      j["label"] = b.label;
      j["description"] = b.description;
      j["cone"] = cone_json(b.cone);
      list.push_back(j);
    }
    r["branches"] = list;
  }
  return kStationary;
}

struct VerifyArgs {
  Common common;
  double radius = 0.5;
  std::size_t x_points = 11;
  double tol = 1e-6;
  GridFlags grid;
};

int cmd_verify(const VerifyArgs& a, Json& r) {
  const auto pf = load_problem(a.common.problem);
  const Candidate c = pick_candidate(pf, a.common.candidate);
  const GridSpec g = a.grid.resolve(pf.problem);
  auto v = verify_optimistic_local(pf.problem, c, g, {a.radius, a.x_points, a.tol});
  const int code = v.optimal ? kStationary : kNotStationary;
  r["verdict"] = v.optimal ? "LOCALLY_OPTIMAL" : "NOT_OPTIMAL";
  r["exit_code"] = code;
  r["candidate"] = candidate_json(c, a.common.candidate);
  r["radius"] = a.radius;
  r["x_points"] = a.x_points;
  r["grid"] = grid_json(g);
  r["phi0_at_candidate"] = v.phi0_at_candidate;
  r["F_at_candidate"] = v.F_at_candidate;
  r["value_matches"] = v.value_matches;
  r["points_checked"] = v.points_checked;
  if (v.worst_x) r["worst"] = Json{{"x", numbers(*v.worst_x)}, {"phi0", v.worst_phi0}};
  else r["worst"] = nullptr;
  r["tolerance"] = a.tol;
  return code;
}

}  // namespace

MStationarityCertificate certificate_from_report(const Json& report) {
  try {
    const Json& j = report.at("certificate");
    if (j.is_null()) throw InputError("report carries no certificate");
    MStationarityCertificate c;
    c.branch = j.at("branch").get<std::string>();
    c.alpha = j.at("alpha").get<Vec>();
    c.beta = j.at("beta").get<Vec>();
    c.gamma = j.at("gamma").get<Vec>();
    c.eta = j.at("eta").get<Vec>();
    c.mu = j.at("mu").get<Vec>();
    for (auto i : j.at("omega_active").get<std::vector<std::size_t>>()) c.omega_active.push_back(i - 1);
    c.equation_residual = j.at("residuals").at("equation").get<double>();
    c.cone_margin = j.at("residuals").at("cone_margin").get<double>();
    c.mode = report.at("mode") == "rational" ? ArithmeticMode::Rational : ArithmeticMode::Float;
    if (j.contains("exact")) {
      auto q = [&](const char* key) {
        QVec v;
        for (const auto& s : j["exact"].at(key)) v.push_back(parse_rational(s.get<std::string>()));
        return v;
      };
      c.beta_exact = q("beta");
      c.gamma_exact = q("gamma");
      c.mu_exact = q("mu");
    }
    return c;
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed certificate in report: ") + e.what());
  }
}

Candidate candidate_from_report(const Json& report) {
  try {
    const Json& j = report.at("candidate");
    return Candidate{j.at("x").get<Vec>(), j.at("y").get<Vec>(), j.at("z").get<Vec>()};
  } catch (const Json::exception& e) {
    throw InputError(std::string("malformed candidate in report: ") + e.what());
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Verification toolkit for optimistic bilevel programs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  auto add_common = [](CLI::App* sub, Common& c) {
    sub->add_option("problem", c.problem, "problem file (JSON)")->required();
    sub->add_option("--candidate", c.candidate, "candidate index in the problem file")->capture_default_str();
  };
  auto add_tol = [](CLI::App* sub, TolFlags& t) {
    sub->add_option("--tol-active", t.active, "active-set tolerance");
    sub->add_option("--tol-residual", t.residual, "equation residual tolerance");
    sub->add_option("--tol-cone", t.cone, "cone membership margin");
  };
  auto add_grid = [](CLI::App* sub, GridFlags& g) {
    sub->add_option("--grid-lower", g.lower, "lower grid bounds for y (defaults to a bounded box K)")->delimiter(',');
    sub->add_option("--grid-upper", g.upper, "upper grid bounds for y")->delimiter(',');
    sub->add_option("--grid-points", g.points, "grid points per coordinate")->capture_default_str();
    sub->add_option("--refine", g.refine, "refinement factor around minimizers")->capture_default_str();
  };

  CheckArgs check;
  auto* c = app.add_subcommand("check", "M-stationarity and qualification at a candidate");
  add_common(c, check.common);
  auto* rat = c->add_flag("--rational", check.rational, "exact arithmetic when the data allow it (default)");
  auto* flt = c->add_flag("--float", check.floating, "floating-point arithmetic");
  rat->excludes(flt);
  c->add_flag("--verify-derivatives", check.verify, "check derivatives against finite differences");
  add_tol(c, check.tol);

  LowerArgs lower;
  auto* l = app.add_subcommand("lower", "grid solution set S(x) and optimistic value phi0(x)");
  add_common(l, lower.common);
  l->add_option("--x", lower.x, "upper-level point")->required()->delimiter(',');
  add_grid(l, lower.grid);

  ConeArgs cone;
  auto* k = app.add_subcommand("cone", "normal cone of Omega or K, or the branches of the graph cone");
  add_common(k, cone.common);
  k->add_option("--which", cone.which, "omega, K or gph")->required()->check(CLI::IsMember({"omega", "K", "gph"}));
  k->add_option("--point", cone.point, "point (defaults to the candidate)")->delimiter(',');
  k->add_option("--z", cone.z, "graph point z for --which gph (defaults to the candidate)")->delimiter(',');
  add_tol(k, cone.tol);

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "brute-force local optimality check of a candidate");
  add_common(v, verify.common);
  v->add_option("--radius", verify.radius, "radius of the x neighborhood")->capture_default_str();
  v->add_option("--x-points", verify.x_points, "x grid points per coordinate")->capture_default_str();
  v->add_option("--verify-tol", verify.tol, "value tolerance")->capture_default_str();
  add_grid(v, verify.grid);

  std::string command;
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    for (auto* sub : app.get_subcommands()) command = sub->get_name();
    out << error_report(command, "usage", {e.what()}).dump(2) << "\n";
    return kInputError;
  }
  command = app.get_subcommands().front()->get_name();

  Json report = header(command);
  const auto start = std::chrono::steady_clock::now();
  int code = kInputError;
  try {
    if (command == "check") code = cmd_check(check, report);
    else if (command == "lower") code = cmd_lower(lower, report);
    else if (command == "cone") code = cmd_cone(cone, report);
    else code = cmd_verify(verify, report);
  } catch (const InputError& e) {
    report = error_report(command, "input", e.issues());
  } catch (const ParseError& e) {
    report = error_report(command, "parse", {e.what()});
  } catch (const PointNotInSetError& e) {
    report = error_report(command, "point_not_in_set", {e.what()});
  } catch (const GraphMembershipError& e) {
    report = error_report(command, "graph_membership", {e.what()});
  } catch (const DomainError& e) {
    report = error_report(command, "domain", {e.what()});
  } catch (const CapExceededError& e) {
    report = error_report(command, "cap_exceeded", {e.what()});
  } catch (const OracleError& e) {
    report = error_report(command, "oracle", {e.what()});
  } catch (const Error& e) {
    report = error_report(command, "internal", {e.what()});
  }
  if (report.contains("errors"))
    for (const auto& e : report["errors"]) err << "mstat " << command << ": " << e["message"].get<std::string>() << "\n";
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report["timing"] = Json{{"seconds", seconds}};
  out << report.dump(2) << "\n";
  return report.contains("errors") ? static_cast<int>(kInputError) : code;
}

}  // namespace mstat::cli
