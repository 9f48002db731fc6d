#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mstat/model.hpp"

namespace mstat::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes of every command.
enum ExitCode : int {
  kStationary = 0,          // also: lower/cone succeeded, verify found a local optimum
  kNotStationary = 1,       // also: verify found a better nearby point
  kQualificationFails = 2,
  kInputError = 3,
};

struct ProblemFile {
  BilevelProblem problem;
  std::vector<std::pair<Vec, Vec>> candidates;  // (x, y)
  Tolerances tol;
};

/// Strict reader: unknown members, wrong types and dimension mismatches are
/// collected into one InputError, followed by model validation.
ProblemFile parse_problem(const std::string& text);
ProblemFile load_problem(const std::string& path);

/// Certificate and candidate stored in a check report.
MStationarityCertificate certificate_from_report(const Json& report);
Candidate candidate_from_report(const Json& report);

/// Runs one command; the report goes to `out`, diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mstat::cli
