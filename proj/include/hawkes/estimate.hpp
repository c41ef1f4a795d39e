#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hawkes/core.hpp"
#include "hawkes/likelihood.hpp"

namespace hawkes {

// Segment-kind string plus change-point count, named "CRC" for K = 0 shapes
// and "2_CP_CRC" otherwise. kinds.size() == K + 1.
struct ModelShape {
  std::string kinds;
  // Per boundary; empty means the default (continuous next to R/E segments).
  std::vector<bool> continuity;

  static ModelShape parse(std::string_view name);
  std::size_t change_point_count() const { return kinds.empty() ? 0 : kinds.size() - 1; }
  std::string name() const;
  std::vector<bool> resolved_continuity() const;
  bool operator==(const ModelShape&) const = default;
};

// Unconstrained coordinates for the free smooth parameters of a fixed profile
// layout: log for lambda0, beta and rates; logit for kappa-valued parameters
// (log when supercritical levels are allowed); identity for slopes. Intercepts
// behind a continuity flag are not free; `held` parameters keep their layout
// values and carry no prior.
class ParamPacker {
 public:
  ParamPacker(const HawkesParams& layout, bool allow_supercritical = false, std::span<const ParamId> held = {});

  std::size_t size() const noexcept { return free_.size(); }
  const std::vector<ParamId>& free_ids() const noexcept { return free_; }
  std::vector<std::string> names() const;

  std::vector<double> pack(const HawkesParams& params) const;
  // Throws DomainError when the coordinates give an inadmissible profile.
  HawkesParams unpack(std::span<const double> y) const;
  // Natural-scale values of the free parameters.
  std::vector<double> natural(const HawkesParams& params) const;
  // Elementwise d natural / d y.
  std::vector<double> jacobian(std::span<const double> y) const;
  HawkesParams from_natural(std::span<const double> x) const;

  // Log prior over the free parameters on their natural scale.
  double log_prior(const HawkesParams& params, const PriorSpec& priors) const;

  // Log posterior and its gradient with respect to the natural free
  // parameters; -inf outside the admissible set.
  double objective(const EventSeq& events, const HawkesParams& params, const PriorSpec& priors,
                   std::vector<double>* grad_natural = nullptr) const;

  bool admissible(const HawkesParams& params) const;
  bool allow_supercritical() const noexcept { return allow_supercritical_; }

 private:
  enum class Transform { Log, Logit, Identity };
  Transform transform(const ParamId& id) const;
  bool kappa_valued(const ParamId& id) const;

  HawkesParams layout_;
  std::vector<ParamId> free_;
  bool allow_supercritical_;
};

struct MapOptions {
  int max_iterations = 200;
  bool allow_supercritical = false;
  // Held at their input values.
  std::vector<ParamId> held{};
  // Skip the Laplace standard deviations (central-difference Hessian).
  bool laplace = true;
};

struct MapResult {
  HawkesParams params;
  double objective = 0.0;  // loglik + log prior at params
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<std::string> names;  // free parameters
  std::vector<double> laplace_sd;  // aligned with names; empty if not requested or not negative definite
};

// MAP of the smooth parameters with change points held fixed at those of
// `params`. Never returns a point worse than the input.
MapResult map_step(const EventSeq& events, const HawkesParams& params, const PriorSpec& priors,
                   const MapOptions& opt = {});

struct PosteriorGrid {
  std::vector<double> candidates;
  std::vector<double> log_posterior;
  std::vector<double> weights;  // probability masses, sum to 1
};

struct GridSpec {
  std::size_t points = 200;
  bool refine = true;
  std::optional<double> min_gap{};  // default priors.resolved_min_gap(beta)
  std::optional<int> threads{};
  bool allow_supercritical = false;
  // Move each coordinate to its grid argmax instead of its centre of mass,
  // which turns the alternation into a joint-mode search.
  bool move_to_argmax = false;
};

struct ComResult {
  std::vector<double> cp_com;
  std::vector<double> cp_map;
  std::vector<PosteriorGrid> grids;
  std::vector<double> grid_step;  // coarse spacing per coordinate
};

// Masses are exp(log_posterior) times cell widths, normalised; a cell spans
// the midpoints to its neighbours and the end cells are mirrored, so a
// uniform grid gets equal widths. Throws DomainError when every value is -inf.
PosteriorGrid normalise_grid(std::vector<double> candidates, std::vector<double> log_posterior);
double centre_of_mass(const PosteriorGrid& grid);

// One Gauss-Seidel sweep over the change points of `params`: each coordinate
// is moved to the centre of mass of its conditional posterior.
ComResult com_step(const EventSeq& events, const HawkesParams& params, const PriorSpec& priors,
                   const GridSpec& grid = {});

struct TraceEntry {
  double loglik = 0.0;
  double objective = 0.0;
  HawkesParams params;
};

struct FitOptions {
  Variant variant = Variant::VariableSusceptibility;
  int max_outer = 50;
  int map_iterations = 200;
  GridSpec grid{};
  // Pins the change points; com_step is skipped.
  std::optional<std::vector<double>> fixed_change_points{};
  // Starting point replacing the deterministic initialisation.
  std::optional<HawkesParams> warm_start{};
  bool allow_supercritical = false;
  bool laplace = true;
  std::vector<ParamId> held{};
};

struct FitResult {
  ModelShape shape;
  HawkesParams theta_hat;
  // Fitted change points (grid argmaxes under GridSpec::move_to_argmax).
  std::vector<double> cp_com;
  // Argmax of the last conditional grids.
  std::vector<double> cp_map;
  std::vector<PosteriorGrid> posterior_grid;
  std::vector<TraceEntry> trace;
  bool converged = false;
  int iterations = 0;
  double loglik = 0.0;
  double objective = 0.0;
  std::vector<std::string> param_names;
  std::vector<double> laplace_sd;
  std::vector<std::string> warnings;
};

// One over the mean inter-event gap; 1 with fewer than two events.
double initial_beta(const EventSeq& events);
// Change-point spacing used by fit when the priors leave it unset: five
// e-folds of the initial kernel, independent of any warm start.
double default_min_gap(const EventSeq& events, const PriorSpec& priors);

// Deterministic starting point for a shape on an event window.
HawkesParams initial_params(const EventSeq& events, const ModelShape& shape, const PriorSpec& priors,
                            Variant variant = Variant::VariableSusceptibility);

// Alternating MAP / centre-of-mass fit.
FitResult fit(const EventSeq& events, const ModelShape& shape, const PriorSpec& priors,
              const FitOptions& opt = {});

}  // namespace hawkes
