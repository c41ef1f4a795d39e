#include "hawkes/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "hawkes/parallel.hpp"
#include "hawkes/rng.hpp"

namespace hawkes {

namespace {

double history_carry(const SimConfig& config) {
  if (!config.history) return 0.0;
  const auto& p = config.params;
  const double start = p.profile.window_start();
  double weight = 1.0;
  if (p.variant == Variant::VariableInfectivity) weight = p.profile.segment(0).value(0.0);
  double z = 0.0;
  for (double t : config.history->times()) {
    if (t <= start) z += weight * p.beta * std::exp(-p.beta * (start - t));
  }
  return z;
}

void record(std::vector<double>& out, double t, std::size_t max_events) {
  out.push_back(t);
  if (out.size() > max_events) throw ExplosionError(t, out.size());
}

// lambda(t) = lambda0 + kappa(t) Z(t). The majorant lambda0 + sup kappa * Z is
// taken over the rest of the current segment, where kappa is monotone and Z
// decays, and refreshed at every candidate and boundary.
std::vector<double> thin_susceptibility(const SimConfig& config, Rng& rng) {
  const auto& p = config.params;
  const auto& prof = p.profile;
  std::vector<double> out;
  double t = prof.window_start();
  double z = history_carry(config);
  std::size_t seg = 0;
  while (true) {
    const double seg_start = prof.segment_start(seg);
    const double seg_end = prof.segment_end(seg);
    const auto& shape = prof.segment(seg);
    const double kmax = std::max(0.0, shape.max_over(t - seg_start, seg_end - seg_start));
    const double bound = p.lambda0 + kmax * z;
    const double cand = t + rng.exponential(bound);
    if (cand > seg_end) {
      z *= std::exp(-p.beta * (seg_end - t));
      t = seg_end;
      if (seg + 1 == prof.segment_count()) break;
      ++seg;
      continue;
    }
    z *= std::exp(-p.beta * (cand - t));
    t = cand;
    const double rate = p.lambda0 + std::max(0.0, shape.value(t - seg_start)) * z;
    if (rng.uniform() * bound <= rate) {
      record(out, t, config.max_events);
      z += p.beta;
    }
  }
  return out;
}

// lambda(t) = lambda0 + Zfix(t) is non-increasing between events, so the
// current intensity bounds it up to the next candidate.
std::vector<double> thin_infectivity(const SimConfig& config, Rng& rng) {
  const auto& p = config.params;
  const auto& prof = p.profile;
  std::vector<double> out;
  double t = prof.window_start();
  const double end = prof.window_end();
  double z = history_carry(config);
  while (true) {
    const double bound = p.lambda0 + z;
    const double cand = t + rng.exponential(bound);
    if (cand > end) break;
    z *= std::exp(-p.beta * (cand - t));
    t = cand;
    if (rng.uniform() * bound <= p.lambda0 + z) {
      record(out, t, config.max_events);
      z += p.beta * std::max(0.0, prof.kappa(t));
    }
  }
  return out;
}

}  // namespace

EventSeq simulate(const SimConfig& config, std::uint64_t replicate) {
  require_valid(config.params);
  if (config.max_events == 0) throw DomainError("simulate: max_events must be > 0");
  Rng rng(config.seed, replicate);
  auto times = config.params.variant == Variant::VariableSusceptibility
                   ? thin_susceptibility(config, rng)
                   : thin_infectivity(config, rng);
  return EventSeq(std::move(times), config.params.profile.window_start(),
                  config.params.profile.window_end());
}

std::vector<EventSeq> simulate_replicates(const SimConfig& config, std::size_t replicates, int threads) {
  std::vector<std::optional<EventSeq>> slots(replicates);
  parallel_for(replicates, threads, [&](std::size_t r) { slots[r] = simulate(config, r); });
  std::vector<EventSeq> out;
  out.reserve(replicates);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

double filtered_sum(std::span<const double> times, double beta, double t) {
  double z = 0.0;
  double last = 0.0;
  bool any = false;
  for (double ti : times) {
    if (!(ti < t)) break;
    z = any ? z * std::exp(-beta * (ti - last)) + beta : beta;
    last = ti;
    any = true;
  }
  return any ? z * std::exp(-beta * (t - last)) : 0.0;
}

double filtered_sum(const EventSeq& events, double beta, double t) {
  return filtered_sum(events.times(), beta, t);
}

}  // namespace hawkes
