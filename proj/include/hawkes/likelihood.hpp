#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hawkes/core.hpp"

namespace hawkes {

// Filtered sum at a boundary: sum of beta e^{-beta (t - t_i)} over t_i <= t,
// with kappa(t_i) weights under variable infectivity.
struct CarryState {
  double S = 0.0;
  double boundary_time = 0.0;

  // Decayed to time t >= boundary_time assuming no events in between.
  CarryState advanced(double t, double beta) const;
};

// State carried into a window from its history; S = 0 at window_start when unset.
CarryState initial_carry(const EventSeq& events, const std::optional<CarryState>& initial);

// Sum of log lambda(t_i-) minus the compensator over the window, one sweep.
double loglik(const EventSeq& events, const HawkesParams& params,
              const std::optional<CarryState>& initial = std::nullopt);

struct SegmentLoglik {
  double value = 0.0;
  CarryState carry_out;
};

// Contribution of segment j: its events and its share of the compensator.
SegmentLoglik segment_loglik(const EventSeq& events, const HawkesParams& params, std::size_t j,
                             const CarryState& carry_in);

// Chains segment_loglik across segments.
double loglik_by_segments(const EventSeq& events, const HawkesParams& params,
                          const std::optional<CarryState>& initial = std::nullopt);

// Carry state at time t (events <= t included).
CarryState carry_at(const EventSeq& events, const HawkesParams& params, double t,
                    const std::optional<CarryState>& initial = std::nullopt);

enum class ParamKind { Lambda0, Beta, Segment, ChangePoint };

struct ParamId {
  ParamKind kind = ParamKind::Lambda0;
  std::size_t segment = 0;  // segment index, or change-point index
  std::size_t index = 0;    // position in SegmentShape::params()

  static ParamId lambda0() { return {ParamKind::Lambda0, 0, 0}; }
  static ParamId beta() { return {ParamKind::Beta, 0, 0}; }
  static ParamId segment_param(std::size_t j, std::size_t k) { return {ParamKind::Segment, j, k}; }
  static ParamId change_point(std::size_t k) { return {ParamKind::ChangePoint, k, 0}; }

  std::string name(const HawkesParams& params) const;
  bool operator==(const ParamId&) const = default;
};

// [lambda0, beta, segment 0 params..., segment 1 params..., ...]
std::vector<ParamId> smooth_param_ids(const HawkesParams& params);

struct LoglikGrad {
  double value = 0.0;
  std::vector<double> grad;  // aligned with the requested ids
};

// Exact partial derivatives; `which` empty means smooth_param_ids(params).
// Throws UnsupportedParameter for change points.
LoglikGrad loglik_grad(const EventSeq& events, const HawkesParams& params,
                       std::span<const ParamId> which = {},
                       const std::optional<CarryState>& initial = std::nullopt);

struct ProfilePoint {
  double gamma = 0.0;
  double loglik = 0.0;
};

// loglik with change point `index` moved to each grid value. The grid must be
// strictly increasing and keep min_gap clearance from the neighbouring change
// points and window edges.
std::vector<ProfilePoint> profile_changepoint(const EventSeq& events, const HawkesParams& params,
                                              std::span<const double> grid, std::size_t index,
                                              double min_gap = 0.0, std::optional<int> threads = std::nullopt,
                                              const std::optional<CarryState>& initial = std::nullopt);

}  // namespace hawkes
