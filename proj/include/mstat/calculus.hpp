#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mstat/model.hpp"
#include "mstat/polyhedral.hpp"

namespace mstat {

/// First and second derivative data at a candidate. For a bilevel problem
///   xi1 = grad_x F, xi2 = grad_y F, grad_y_f,
///   hess_yx = d(grad_y f)/dx (m x n), hess_yy = d(grad_y f)/dy (m x m).
/// For an MPEC the same slots hold the objective gradient, G and its
/// Jacobian blocks.
struct DerivativeBundle {
  Vec xi1, xi2, grad_y_f;
  Mat hess_yx, hess_yy;

  // Present when every tree is rational and the candidate is exact.
  std::optional<QVec> xi1_exact, xi2_exact, grad_y_f_exact;
  std::optional<QMat> hess_yx_exact, hess_yy_exact;

  /// Largest |symbolic - FD| / max(1, |FD|) over all entries; set only when
  /// verification ran.
  std::optional<double> fd_max_error;

  bool exact() const { return xi1_exact.has_value(); }
};

struct DerivativeOptions {
  bool verify = false;  // cross-check every entry by central differences
};

/// Throws DomainError naming the offending block; with verify set, throws
/// InternalError if an entry disagrees with its finite difference beyond
/// FiniteDifferenceConfig::relative_tolerance.
DerivativeBundle derivative_bundle(const BilevelProblem& problem, const Candidate& c,
                                   const DerivativeOptions& opts = {});
DerivativeBundle derivative_bundle(const MpecProblem& problem, const Candidate& c,
                                   const DerivativeOptions& opts = {});

/// grad h(point)^T y* — the single element shared by the Fréchet, mixed and
/// normal coderivatives of a smooth map.
Vec coderivative_smooth(const SmoothFunction& h, std::span<const double> point, std::span<const double> y_star);

/// Gradient of the scalar function <z*, h> at point.
Vec scalarized_subdifferential(const SmoothFunction& h, std::span<const double> z_star,
                               std::span<const double> point);

/// The singular subdifferential of a locally Lipschitz function: {0}.
PolyhedralCone singular_subdifferential_smooth(std::span<const double> point);

}  // namespace mstat
