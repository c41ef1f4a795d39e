#include "hawkes/evidence.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "hawkes/numerics.hpp"
#include "hawkes/parallel.hpp"

namespace hawkes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t events_in(const EventSeq& ev, double a, double b) {
  const auto t = ev.times();
  return static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), b) - std::upper_bound(t.begin(), t.end(), a));
}

}  // namespace

std::string to_string(PenaltyCount mode) { return mode == PenaltyCount::Total ? "total" : "per_segment_min"; }

PenaltyCount penalty_count_from_string(std::string_view s) {
  if (s == "total") return PenaltyCount::Total;
  if (s == "per_segment_min") return PenaltyCount::PerSegmentMin;
  throw DomainError(fmt::format("unknown penalty count mode '{}'", s));
}

EvidenceEstimate log_mean_exp(std::span<const double> terms) {
  if (terms.empty()) throw DomainError("log_mean_exp: no terms");
  EvidenceEstimate e;
  e.c_max = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(e.c_max)) throw DomainError("integrated evidence: every sample has a non-finite objective");
  const double S = static_cast<double>(terms.size());
  double sum = 0.0;
  double sum2 = 0.0;
  for (double t : terms) {
    const double w = std::exp(t - e.c_max);
    sum += w;
    sum2 += w * w;
  }
  const double mean = sum / S;
  e.log_evidence = e.c_max + std::log(mean);
  if (terms.size() > 1) {
    const double var = std::max(0.0, (sum2 - S * mean * mean) / (S - 1.0));
    e.std_err = std::sqrt(var / S) / mean;
  }
  return e;
}

double log_model_prior(std::size_t segments, double lambda_segs) {
  if (!(lambda_segs > 0.0)) throw DomainError("lambda_segs must be > 0");
  const double k = static_cast<double>(segments);
  return k * std::log(lambda_segs) - lambda_segs - std::lgamma(k + 1.0);
}

std::vector<double> sample_change_points(Rng& rng, std::size_t k, double a, double b, double min_gap) {
  const double slack = (b - a) - static_cast<double>(k + 1) * min_gap;
  if (!(slack >= 0.0)) {
    throw DomainError(fmt::format("no room for {} change points with min_gap {} on ({}, {})", k, min_gap, a, b));
  }
  std::vector<double> u(k);
  for (auto& x : u) x = rng.uniform() * slack;
  std::sort(u.begin(), u.end());
  for (std::size_t i = 0; i < k; ++i) u[i] += a + static_cast<double>(i + 1) * min_gap;
  return u;
}

EvidenceResult integrated_evidence(const EventSeq& events, const ModelShape& shape, const PriorSpec& priors,
                                   const EvidenceOptions& opt) {
  if (opt.mc_samples < 1) throw DomainError("integrated_evidence: need at least one Monte-Carlo sample");
  const std::size_t K = shape.change_point_count();
  const HawkesParams pilot = [&] {
    if (!opt.warm_start) return initial_params(events, shape, priors, opt.variant);
    HawkesParams w = *opt.warm_start;
    bool ok = w.profile.segment_count() == shape.kinds.size();
    for (std::size_t j = 0; ok && j < shape.kinds.size(); ++j) {
      ok = segment_kind_char(w.profile.segment(j).kind()) == shape.kinds[j];
    }
    if (!ok) throw DomainError(fmt::format("integrated_evidence: warm start does not match shape {}", shape.name()));
    w.variant = opt.variant;
    return w;
  }();

  EvidenceResult res;
  res.p_M = ParamPacker(pilot).size();
  res.log_prior_model = log_model_prior(K + 1, opt.lambda_segs);
  const double n_total = static_cast<double>(events.size());

  MapOptions mo;
  mo.max_iterations = opt.inner_iterations;
  mo.laplace = false;

  auto penalty = [&](const HawkesParams& p) {
    double n = n_total;
    if (opt.n_mode == PenaltyCount::PerSegmentMin) {
      const auto& prof = p.profile;
      for (std::size_t j = 0; j < prof.segment_count(); ++j) {
        n = std::min(n, static_cast<double>(events_in(events, prof.segment_start(j), prof.segment_end(j))));
      }
    }
    return 0.5 * static_cast<double>(res.p_M) * std::log(std::max(n, 1.0));
  };

  if (K == 0) {
    const auto m = map_step(events, pilot, priors, mo);
    res.terms = {m.objective - penalty(m.params)};
    res.log_evidence = res.terms[0] + res.log_prior_model;
    res.c_max = res.terms[0];
    if (events.size() < 10) res.warnings.push_back("segment with fewer than 10 events: BIC approximation is rough");
    return res;
  }

  const double gap = default_min_gap(events, priors);
  const double ws = events.window_start();
  const double we = events.window_end();
  res.mc_samples = opt.mc_samples;
  res.terms.assign(opt.mc_samples, kNegInf);
  bool sparse = false;
  // warm-start chain: each sample starts from the previous optimum
  HawkesParams chain = pilot;
  for (std::size_t s = 0; s < opt.mc_samples; ++s) {
    Rng rng(opt.seed, s);
    const auto cps = sample_change_points(rng, K, ws, we, gap);
    for (std::size_t j = 0; j <= K; ++j) {
      const double a = j == 0 ? ws : cps[j - 1];
      const double b = j == K ? we : cps[j];
      if (events_in(events, a, b) < 10) sparse = true;
    }
    const ParamPacker check(pilot);
    HawkesParams start = chain;
    start.profile = chain.profile.with_change_points(cps);
    if (!std::isfinite(check.objective(events, start, priors))) {
      start = pilot;
      start.profile = pilot.profile.with_change_points(cps);
      if (!std::isfinite(check.objective(events, start, priors))) continue;
    }
    const auto m = map_step(events, start, priors, mo);
    if (!std::isfinite(m.objective)) continue;
    res.terms[s] = m.objective - penalty(m.params);
    chain = m.params;
  }
  const auto est = log_mean_exp(res.terms);
  res.log_evidence = est.log_evidence + res.log_prior_model;
  res.std_err = est.std_err;
  res.c_max = est.c_max;
  if (sparse) res.warnings.push_back("sampled segment with fewer than 10 events: BIC approximation is rough");
  return res;
}

EvidenceTable select(const EventSeq& events, std::span<const ModelShape> candidates, const PriorSpec& priors,
                     const EvidenceOptions& opt) {
  if (candidates.empty()) throw DomainError("select: empty candidate list");
  EvidenceTable table;
  table.records.resize(candidates.size());
  EvidenceOptions inner = opt;
  parallel_for(candidates.size(), resolve_threads(opt.threads), [&](std::size_t i) {
    const auto& shape = candidates[i];
    auto& rec = table.records[i];
    rec.name = shape.name();
    rec.K = shape.change_point_count();
    try {
      EvidenceOptions o = inner;
      if (o.warm_start && o.warm_start->profile.segment_count() != shape.kinds.size()) o.warm_start.reset();
      if (o.warm_start) {
        for (std::size_t j = 0; j < shape.kinds.size(); ++j) {
          if (segment_kind_char(o.warm_start->profile.segment(j).kind()) != shape.kinds[j]) {
            o.warm_start.reset();
            break;
          }
        }
      }
      const auto r = integrated_evidence(events, shape, priors, o);
      rec.p_M = r.p_M;
      rec.log_evidence = r.log_evidence;
      rec.mc_samples = r.mc_samples;
      rec.mc_std_err = r.std_err;
      rec.warnings = r.warnings;
    } catch (const std::exception& e) {
      rec.error = e.what();
      rec.log_evidence = kNegInf;
    }
  });
  std::stable_sort(table.records.begin(), table.records.end(), [](const EvidenceRecord& a, const EvidenceRecord& b) {
    if (a.error.has_value() != b.error.has_value()) return !a.error.has_value();
    return a.log_evidence > b.log_evidence;
  });
  return table;
}

}  // namespace hawkes
