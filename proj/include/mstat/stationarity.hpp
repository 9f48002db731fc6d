#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mstat/calculus.hpp"
#include "mstat/feasibility.hpp"
#include "mstat/model.hpp"
#include "mstat/polyhedral.hpp"

namespace mstat {

struct StationarityOptions {
  Tolerances tol;
  /// Rational is used only when every derivative is exactly computable.
  ArithmeticMode mode = ArithmeticMode::Rational;
  bool verify_derivatives = false;
  std::size_t max_branches = 531441;
  std::size_t max_active_rows = 10;
};

struct StationarityResult {
  bool stationary = false;
  std::optional<MStationarityCertificate> certificate;
  std::size_t branches_checked = 0;
  ArithmeticMode mode = ArithmeticMode::Rational;
};

/// Branch-by-branch search for (beta, gamma, mu) with
///   xi1 + hess_yx^T gamma + A_active^T mu = 0,
///   xi2 + hess_yy^T gamma - beta = 0,
///   (-beta, -gamma) in the branch cone, mu >= 0.
/// The first feasible branch in enumeration order wins. Rational mode
/// returns the phase-1 basic solution; float mode the feasible point of
/// least L1 norm.
StationarityResult check_m_stationarity(const BilevelProblem& problem, const Candidate& c,
                                        const StationarityOptions& opts = {});
StationarityResult check_mpec_stationarity(const MpecProblem& mpec, const Candidate& c,
                                           const StationarityOptions& opts = {});

/// Same search with precomputed derivatives.
StationarityResult check_m_stationarity(const DerivativeBundle& bundle, const Candidate& c, const Polyhedron& omega,
                                        const LowerSet& K, const StationarityOptions& opts = {});

/// Decides whether x* = hess_yx^T z* + eta (eta in N(x̄, Omega)),
/// y* = hess_yy^T z*, x* = 0, (-y*, -z*) in a branch admits a nonzero
/// (x*, y*, z*) on some branch.
QualificationReport check_qualification(const BilevelProblem& problem, const Candidate& c,
                                        const StationarityOptions& opts = {});
QualificationReport check_qualification(const DerivativeBundle& bundle, const Candidate& c,
                                        const Polyhedron& omega, const LowerSet& K,
                                        const StationarityOptions& opts = {});

struct CertificateReport {
  std::string branch;
  std::string description;  // pattern in human terms
  double equation_residual = 0.0;
  double eta_residual = 0.0;  // |eta - A_active^T mu|
  double cone_margin = 0.0;
  double min_mu = 0.0;
  double max_abs_alpha = 0.0;
};

/// Recomputes every residual from the raw data with plain loops (no solver)
/// and throws StaleCertificateError if any exceeds its tolerance.
CertificateReport explain_certificate(const MStationarityCertificate& cert, const DerivativeBundle& bundle,
                                      const Polyhedron& omega, const LabeledCone& branch, const Tolerances& tol = {});
CertificateReport explain_certificate(const MStationarityCertificate& cert, const BilevelProblem& problem,
                                      const Candidate& c, const Tolerances& tol = {});

/// Active rows of Omega at x; throws PointNotInSetError if x is infeasible.
std::vector<std::size_t> omega_active_rows(const Polyhedron& omega, std::span<const double> x, double tol);

}  // namespace mstat
