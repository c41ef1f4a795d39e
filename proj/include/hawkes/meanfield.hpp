#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hawkes/core.hpp"

namespace hawkes {

struct SegmentMeta {
  std::size_t index = 0;
  double start = 0.0;
  double end = 0.0;
  // Set for constant subcritical segments: Lambda_j = lambda0 / (1 - kappa_j)
  // and tau_j = 1 / (beta (1 - kappa_j)).
  std::optional<double> steady_state{};
  std::optional<double> relaxation_time{};
};

struct MeanFieldPath {
  std::vector<double> grid;
  std::vector<double> M;           // mean filtered intensity
  std::vector<double> lambda_bar;  // mean intensity
  std::vector<double> V;           // Var[Z_t]; empty unless moments were solved
  std::vector<SegmentMeta> segments;
  // A supercritical segment pushed values past exp(700); they read +inf.
  bool overflow = false;
};

struct MeanFieldOptions {
  // Integrate constant segments numerically too (cross-check route).
  bool force_numeric = false;
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
};

// Linear mean ODE M' = a(t) + b(t) M on the window, with M(window_start) = M0.
// Variable susceptibility: a = beta lambda0, b = beta (kappa - 1),
// lambda_bar = lambda0 + kappa M. Variable infectivity: a = beta kappa lambda0,
// lambda_bar = lambda0 + M. Constant segments use exact solutions; ramp and
// exponential segments are integrated by an adaptive Dormand-Prince pair with
// every change point as a forced breakpoint.
MeanFieldPath solve_mean_ode(const HawkesParams& params, double M0, std::span<const double> grid,
                             const MeanFieldOptions& options = {});

// Adds V' = 2 b(t) V + forcing, with forcing beta^2 (lambda0 + kappa M) under
// variable susceptibility and beta^2 kappa^2 (lambda0 + M) under variable
// infectivity.
MeanFieldPath solve_moment_odes(const HawkesParams& params, double M0, double V0,
                                std::span<const double> grid, const MeanFieldOptions& options = {});

// Exact (M, V) after local time u on a constant-kappa stretch.
struct MomentState {
  double M = 0.0;
  double V = 0.0;
  bool overflow = false;
};
MomentState constant_kappa_moments(Variant variant, double lambda0, double beta, double kappa,
                                   double M0, double V0, double u);

// Stationary variance of Z for constant subcritical kappa.
double stationary_variance(Variant variant, double lambda0, double beta, double kappa);

struct StepChangePath {
  MeanFieldPath path;  // grid is lag u >= 0; values at u = 0 are right limits
  double steady_pre = 0.0;   // Lambda_1
  double steady_post = 0.0;  // Lambda_2
  double amplitude = 0.0;    // A = Lambda_1 - Lambda_2
  double rate = 0.0;         // beta (1 - kappa2)
  double offset = 0.0;       // lambda_bar(0+) - Lambda_2
  double intensity_jump = 0.0;  // (kappa2 - kappa1) Lambda_1
};

// Relaxation after a step kappa1 -> kappa2 from the pre-change steady state.
StepChangePath step_change_path(double lambda0, double beta, double kappa1, double kappa2,
                                std::span<const double> u_grid);

// |kappa'(t)| / (beta (1 - kappa(t))^2) at an interior point of a segment.
double slow_variation_index(const HawkesParams& params, double t);

struct ForgettingBound {
  double bound = 0.0;     // C exp(-beta delta (t - window_start))
  double phi = 0.0;       // exp(-beta ∫ (1 - kappa)) from window_start to t
  double constant = 0.0;  // C = sup_{[0, L]} phi * exp(beta delta L)
  double worst_gap = 0.0; // min over checked windows of ∫ (1 - kappa) / L
};

// Throws PreconditionError naming the worst window if the average-gap
// condition fails on the verification grid (spacing L / 100).
ForgettingBound forgetting_bound(const ProductivityProfile& profile, double beta, double L,
                                 double delta, double t);

struct FinitePopSpec {
  HawkesParams base;
  double n_pop = 1.0;
};

struct FinitePopPath {
  std::vector<double> grid;
  std::vector<double> N;
  std::vector<double> M;
  std::vector<double> lambda_bar;
};

// N' = lambda_bar, M' = beta (lambda_bar - M),
// lambda_bar = lambda0 + kappa(t) max(0, 1 - N / n_pop) M.
FinitePopPath solve_finite_pop(const FinitePopSpec& spec, double N0, double M0,
                               std::span<const double> grid, const MeanFieldOptions& options = {});

}  // namespace hawkes
