#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "hawkes/core.hpp"

namespace hawkes {

struct SimConfig {
  HawkesParams params;
  std::uint64_t seed = 0;
  std::size_t max_events = 1'000'000;
  // Events at or before the window start; they excite the window through the
  // kernel. Under variable infectivity they carry the productivity of the
  // window's first instant.
  std::optional<EventSeq> history{};
};

// Exact thinning sample on (window_start, window_end]. Replicate r draws from
// its own stream of `seed`, so fan-out order never changes results.
// Throws ExplosionError once max_events is exceeded.
EventSeq simulate(const SimConfig& config, std::uint64_t replicate = 0);

std::vector<EventSeq> simulate_replicates(const SimConfig& config, std::size_t replicates,
                                          int threads = 1);

// sum_{t_i < t} beta * exp(-beta (t - t_i)) by the exponential recursion.
double filtered_sum(const EventSeq& events, double beta, double t);
double filtered_sum(std::span<const double> times, double beta, double t);

}  // namespace hawkes
