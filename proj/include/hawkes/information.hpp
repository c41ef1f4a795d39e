#pragma once

#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "hawkes/core.hpp"

namespace hawkes {

// Single step kappa1 -> kappa2 at a change time, pre-change regime stationary.
struct StepConfig {
  double lambda0 = 1.0;
  double beta = 1.0;
  double kappa1 = 0.0;
  double kappa2 = 0.0;
};

struct StepQuantities {
  double steady_pre = 0.0;   // Lambda_1
  double steady_post = 0.0;  // Lambda_2
  double amplitude = 0.0;    // A
  double rate = 0.0;         // rho
  double slope_b = 0.0;      // B = -beta kappa2 (kappa2 - kappa1) Lambda_1
  double lambda_jump = 0.0;  // (kappa2 - kappa1) Lambda_1
};

// Throws DomainError unless 0 <= kappa1, kappa2 < 1 and lambda0, beta > 0.
StepQuantities step_quantities(const StepConfig& step);

// Closed-form ∫_0^Δ M(u)^2 / lambda_bar(u) du; quadrature when kappa2 < 1e-4.
double info_level_mf(double lambda0, double beta, double kappa1, double kappa2, double delta);
// The same integral by adaptive quadrature.
double info_level_mf_quadrature(double lambda0, double beta, double kappa1, double kappa2, double delta);

// ∫_0^Δ {M^2 / lambda_bar + lambda0^2 V / lambda_bar^3} du, V from the moment
// equations started at the pre-change stationary variance. zero_variance
// drops the V term.
double info_level_mf_plus(const StepConfig& step, double delta, bool zero_variance = false);

struct ChangeTimeInfo {
  double total = 0.0;
  double jump = 0.0;
  double smooth = 0.0;
  // jump + B^2 (1 - e^{-2 rho Δ}) / (2 rho min(Lambda_1, Lambda_2))
  double bound = 0.0;
};
ChangeTimeInfo info_changetime(double lambda0, double beta, double kappa1, double kappa2, double delta);

// Lower bound ∫_0^δ S^2 e^{-2 beta u} / (lambda0 + kappa_max S e^{-beta u}) du
// scaled by weight_factor (inf of (∂kappa)^2 over the layer).
double info_boundary_lower(double S, double lambda0, double beta, double kappa_max, double delta,
                           double weight_factor = 1.0);
double info_boundary_lower_quadrature(double S, double lambda0, double beta, double kappa_max, double delta);
// Ramp-slope version with ∂kappa = u inside the integral.
double info_boundary_lower_ramp_slope(double S, double lambda0, double beta, double kappa_max, double delta);

struct RecommendedWindow {
  double tau2 = 0.0;
  double delta_lo = 0.0;
  double delta_hi = 0.0;
};
RecommendedWindow recommended_window(double beta, double kappa2);
// Δ with beta ∫_{t*}^{t*+Δ} (1 - kappa) equal to 3 and 5; tau2 is the
// relaxation time at t*+.
RecommendedWindow recommended_window(const ProductivityProfile& profile, double beta, double t_star);

enum class InfoKind { LevelMF, LevelMFPlus, ChangeTimeSmooth, ChangeTimeTotal, BoundaryLower };
std::string_view to_string(InfoKind kind);
InfoKind info_kind_from_string(std::string_view s);

struct InfoCurve {
  InfoKind kind = InfoKind::LevelMF;
  std::vector<double> delta_grid;
  std::vector<double> values;
  StepQuantities meta;
};

// BoundaryLower uses the stationary carry-over S = Lambda_1 and kappa_max = kappa2.
InfoCurve info_curve(const StepConfig& step, InfoKind kind, std::span<const double> delta_grid);

}  // namespace hawkes
