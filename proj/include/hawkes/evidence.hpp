#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hawkes/core.hpp"
#include "hawkes/estimate.hpp"
#include "hawkes/rng.hpp"

namespace hawkes {

// Event count entering the (p_M / 2) log n penalty.
enum class PenaltyCount { Total, PerSegmentMin };

std::string to_string(PenaltyCount mode);
PenaltyCount penalty_count_from_string(std::string_view s);

struct EvidenceOptions {
  std::size_t mc_samples = 200;
  std::uint64_t seed = 0;
  int inner_iterations = 50;
  double lambda_segs = 1.0;
  PenaltyCount n_mode = PenaltyCount::Total;
  Variant variant = Variant::VariableSusceptibility;
  std::optional<int> threads{};
  // Start of the inner optimisation chain; must match the shape.
  std::optional<HawkesParams> warm_start{};
};

struct EvidenceEstimate {
  double log_evidence = 0.0;
  double std_err = 0.0;
  double c_max = 0.0;
};

// log( (1/S) sum_s exp(terms_s) ) with the largest term factored out, and
// the delta-method standard error of that log-mean. -inf terms count as zero.
EvidenceEstimate log_mean_exp(std::span<const double> terms);

// log pi(M) for a model with `segments` segments: Poisson(segments; lambda_segs).
double log_model_prior(std::size_t segments, double lambda_segs);

struct EvidenceResult {
  double log_evidence = 0.0;
  double std_err = 0.0;
  std::size_t p_M = 0;
  std::size_t mc_samples = 0;  // 0 when there are no change points to integrate
  double c_max = 0.0;
  double log_prior_model = 0.0;
  // Profile log-posterior minus penalty, one per sample.
  std::vector<double> terms;
  std::vector<std::string> warnings;
};

// Monte-Carlo integrated evidence; change points drawn uniformly under the
// min-gap constraint, each followed by a short warm-started MAP.
EvidenceResult integrated_evidence(const EventSeq& events, const ModelShape& shape, const PriorSpec& priors,
                                   const EvidenceOptions& opt = {});

struct EvidenceRecord {
  std::string name;
  std::size_t K = 0;
  std::size_t p_M = 0;
  double log_evidence = 0.0;
  std::size_t mc_samples = 0;
  double mc_std_err = 0.0;
  std::vector<std::string> warnings;
  std::optional<std::string> error{};
};

// Rows sorted by log_evidence, best first; failed rows last.
struct EvidenceTable {
  std::vector<EvidenceRecord> records;
};

EvidenceTable select(const EventSeq& events, std::span<const ModelShape> candidates, const PriorSpec& priors,
                     const EvidenceOptions& opt = {});

// Ordered change points uniform on (a, b) with every spacing, including the
// edges, at least min_gap.
std::vector<double> sample_change_points(Rng& rng, std::size_t k, double a, double b, double min_gap);

}  // namespace hawkes
