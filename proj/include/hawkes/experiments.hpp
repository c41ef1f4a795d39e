#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hawkes/core.hpp"
#include "hawkes/estimate.hpp"
#include "hawkes/information.hpp"

namespace hawkes {

enum class Scenario { HighToLow, LowToHigh, RampUp, RampDown };

std::string_view to_string(Scenario s);
// "high_to_low", "low_to_high", "ramp_up", "ramp_down".
Scenario scenario_from_string(std::string_view s);
bool is_step(Scenario s);

// Step levels (kappa1, kappa2); throws DomainError for ramps.
std::pair<double, double> step_levels(Scenario s);

// kappa0 before t_star, then either a step to kappa2 or a continuous ramp
// kappa0 + s (t - t_star) with (kappa0, s) = (0.25, 0.005) or (0.75, -0.005).
HawkesParams scenario_params(Scenario s, double lambda0, double beta, double t_star, double horizon);

struct StudySpec {
  Scenario scenario = Scenario::HighToLow;
  std::size_t replicates = 100;
  // Some information-growth designs use {0.2, 1, 5} instead. Studies that
  // need a single rate use the first entry.
  std::vector<double> lambda0_set{1.0, 2.0, 4.0, 8.0};
  // Post-change windows in units of tau2 = 1 / (beta (1 - kappa2)).
  std::vector<double> delta_grid_in_tau{1.0, 2.0, 4.0, 8.0};
  std::uint64_t seed = 0;
  double beta = 1.0;
  double t_star = 50.0;
  double horizon = 100.0;
  // Candidate count for grid-argmax change times, as in com_step.
  std::size_t grid_points = 200;
  std::optional<int> threads{};

  std::vector<std::string> violations() const;
};

struct InfoRow {
  double lambda0 = 0.0;
  double delta_in_tau = 0.0;
  double delta = 0.0;
  std::size_t replicates = 0;
  double score_mean = 0.0;
  double level_info = 0.0;  // sample variance of the kappa2 score
  double level_info_se = 0.0;
  double tstar_sd = 0.0;
  double tstar_precision = 0.0;  // 1 / sample variance of the grid argmax
  double level_mf = 0.0;
  double level_mf_plus = 0.0;
  ChangeTimeInfo changetime{};
};

struct InfoStudyResult {
  StudySpec spec;
  std::vector<InfoRow> rows;  // lambda0-major, then delta
};

// Paths are simulated on (0, t* + max delta] and truncated per window, so the
// windows of one replicate are nested.
InfoStudyResult run_info_study(const StudySpec& spec);

struct RecoveryOptions {
  bool fix_change_point = false;
  Variant variant = Variant::VariableSusceptibility;
  int max_outer = 50;
};

struct RecoveryRow {
  double lambda0 = 0.0;
  std::size_t replicate = 0;
  std::size_t events = 0;
  std::vector<double> estimates;  // aligned with RecoveryStudyResult::names
  bool converged = false;
  std::optional<std::string> error{};
};

struct QuantileSummary {
  double lambda0 = 0.0;
  std::string name;
  double truth = 0.0;
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double q05 = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double q95 = 0.0;
};

struct RecoveryStudyResult {
  StudySpec spec;
  RecoveryOptions options;
  // MAP smooth parameters, then "t_com", "t_map" and "t_mle"; the last comes
  // from a second fit that moves the change point to its grid argmax.
  std::vector<std::string> names;
  std::vector<std::vector<double>> truth;  // per lambda0
  std::vector<RecoveryRow> rows;
  std::vector<QuantileSummary> summary;
};

RecoveryStudyResult run_recovery_study(const StudySpec& spec, const RecoveryOptions& options = {});

struct SurfaceOptions {
  std::size_t kappa_points = 50;
  std::size_t tstar_points = 81;
  double kappa_lo = 0.01;
  double kappa_hi = 0.99;
  // t* grid spans t_true +- min(delta, this).
  double tstar_half_width_max = 10.0;
  // Weak Gaussian prior centred at the truth for the MAP and CoM scatter.
  double prior_sd_kappa = 0.25;
  double prior_sd_tstar = 10.0;
};

struct SurfacePoint {
  double kappa2 = 0.0;
  double tstar = 0.0;
};

struct SurfaceWindow {
  double window_in_tau = 0.0;
  double delta = 0.0;
  std::vector<double> kappa_grid;
  std::vector<double> tstar_grid;
  // Mean over replicates of loglik minus its per-replicate maximum;
  // row-major with kappa2 as the row index.
  std::vector<double> mean_surface;
  std::vector<SurfacePoint> mle;
  std::vector<SurfacePoint> map;
  std::vector<SurfacePoint> com;
  // Standardised third moments of exp(profile) on the grids, where each
  // profile maximises mean_surface over the other coordinate.
  double skew_tstar = 0.0;
  double skew_kappa = 0.0;
  // (drop_left - drop_right) / (drop_left + drop_right) of mean_surface along
  // t* at the two grid edges, on the kappa2 row nearest the truth; positive
  // means the right tail is the longer one.
  double tail_asymmetry_tstar = 0.0;
  double mean_abs_com_map_kappa = 0.0;
  double mean_abs_com_map_tstar = 0.0;
};

struct SurfaceStudyResult {
  StudySpec spec;
  SurfaceOptions options;
  std::vector<SurfaceWindow> windows;
};

// Log-likelihood over (kappa2, t*) with lambda0 = lambda0_set[0], beta and
// kappa1 at their true values; windows from spec.delta_grid_in_tau.
SurfaceStudyResult run_surface_study(const StudySpec& spec, const SurfaceOptions& options = {});

struct SelectionOptions {
  std::vector<std::string> candidates{"C", "CC", "CCC"};
  std::size_t mc_samples = 50;
  double no_change_level = 0.5;
  double kappa1 = 0.25;
  double kappa2 = 0.75;
};

struct SelectionRow {
  std::size_t arm = 0;  // true change-point count
  std::size_t replicate = 0;
  std::size_t events = 0;
  std::string best;
  std::size_t best_K = 0;
  std::vector<double> log_evidence;  // aligned with candidates
  std::vector<double> mc_std_err;
  std::optional<std::string> error{};
};

struct SelectionStudyResult {
  StudySpec spec;
  SelectionOptions options;
  std::vector<SelectionRow> rows;
  // Share of replicates per arm choosing the true K.
  double accuracy_no_change = 0.0;
  double accuracy_one_step = 0.0;
};

// Arm 0: constant kappa; arm 1: one step at t_star. lambda0 = lambda0_set[0].
SelectionStudyResult run_selection_study(const StudySpec& spec, const SelectionOptions& options = {});

struct ShortRegimeRow {
  double width_in_tau = 0.0;
  std::size_t replicates = 0;
  std::size_t failures = 0;
  double mean = 0.0;
  double sd = 0.0;
  double iqr = 0.0;
};

struct ShortRegimeOptions {
  std::vector<double> widths_in_tau{20.0, 5.0, 1.0};
  double outer_level = 0.25;
  double middle_level = 0.5;
  // Flat on the levels, so the estimate is not shrunk toward a prior mode.
  PriorSpec priors{.kappa_level_prior = {1.0, 1.0}};
};

// Three constant segments with the middle one of width w tau centred in the
// window and change points pinned at the truth; dispersion of the middle
// level's MAP over replicates.
std::vector<ShortRegimeRow> run_short_regime_study(const StudySpec& spec, const ShortRegimeOptions& options = {});

// Linear interpolation between order statistics (type 7).
double quantile(std::vector<double> values, double p);

}  // namespace hawkes
