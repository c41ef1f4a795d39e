#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hawkes/error.hpp"

namespace hawkes {

// Sorted event times of a simple point process on (window_start, window_end].
class EventSeq {
 public:
  EventSeq(std::vector<double> times, double window_start, double window_end);

  std::span<const double> times() const noexcept { return times_; }
  double window_start() const noexcept { return window_start_; }
  double window_end() const noexcept { return window_end_; }
  double length() const noexcept { return window_end_ - window_start_; }
  std::size_t size() const noexcept { return times_.size(); }
  bool empty() const noexcept { return times_.empty(); }
  double operator[](std::size_t i) const { return times_[i]; }

  EventSeq shifted(double offset) const;
  // Events with time in (a, b] re-windowed to (a, b].
  EventSeq restricted(double a, double b) const;

 private:
  std::vector<double> times_;
  double window_start_;
  double window_end_;
};

enum class SegmentKind { Constant, Ramp, Exponential };

std::string_view to_string(SegmentKind kind);
SegmentKind segment_kind_from_char(char c);
char segment_kind_char(SegmentKind kind);

struct ConstantShape {
  double level;
};

struct RampShape {
  double intercept;
  double slope;  // per unit time
};

// kappa(u) = asymptote + (initial - asymptote) * exp(-rate * u)
struct ExponentialShape {
  double asymptote;
  double initial;
  double rate;
};

// Productivity shape of one segment, parameterised in local time u measured
// from the segment start.
class SegmentShape {
 public:
  using Data = std::variant<ConstantShape, RampShape, ExponentialShape>;

  static SegmentShape constant(double level);
  static SegmentShape ramp(double intercept, double slope);
  static SegmentShape exponential(double asymptote, double initial, double rate);
  static SegmentShape from_params(SegmentKind kind, std::span<const double> params);

  SegmentKind kind() const noexcept;
  const Data& data() const noexcept { return data_; }

  double value(double u) const;
  double derivative(double u) const;
  // Integral of kappa over local times [u0, u1].
  double integral(double u0, double u1) const;

  std::size_t param_count() const noexcept;
  std::vector<double> params() const;
  std::vector<std::string> param_names() const;
  // d value(u) / d params, in params() order.
  std::vector<double> value_gradient(double u) const;

  // Index into params() of the parameter equal to value(0).
  std::size_t intercept_index() const noexcept;
  SegmentShape with_intercept(double value) const;

  // Extremes over local times [u0, u1]; every shape is monotone on a segment.
  double min_over(double u0, double u1) const;
  double max_over(double u0, double u1) const;

 private:
  explicit SegmentShape(Data data) : data_(data) {}
  Data data_;
};

// Piecewise productivity kappa(t). Segment j is active on (gamma_{j-1}, gamma_j]
// with gamma_0 = window_start and gamma_{m+1} = window_end.
class ProductivityProfile {
 public:
  ProductivityProfile(double window_start, double window_end,
                      std::vector<double> change_points,
                      std::vector<SegmentShape> segments,
                      std::vector<bool> continuity_flags = {});

  static ProductivityProfile constant(double window_start, double window_end, double level);

  double window_start() const noexcept { return window_start_; }
  double window_end() const noexcept { return window_end_; }
  std::span<const double> change_points() const noexcept { return change_points_; }
  std::span<const SegmentShape> segments() const noexcept { return segments_; }
  const std::vector<bool>& continuity_flags() const noexcept { return continuity_; }
  std::size_t segment_count() const noexcept { return segments_.size(); }
  const SegmentShape& segment(std::size_t j) const { return segments_.at(j); }

  double segment_start(std::size_t j) const;
  double segment_end(std::size_t j) const;
  double segment_length(std::size_t j) const { return segment_end(j) - segment_start(j); }

  // Segment containing t under the left-open convention; window_start maps to 0.
  std::size_t segment_index(double t) const;

  // kappa(t) for t in [window_start, window_end]; at t = window_start the first
  // segment's initial value is returned.
  double kappa(double t) const;
  // Right limit kappa(t+), used where a boundary starts the next segment.
  double kappa_right(double t) const;
  double kappa_derivative(double t) const;
  // Integral of kappa over [a, b] inside the window, using exact segment forms.
  double integral(double a, double b) const;
  double total_variation() const;
  double max_kappa() const;

  ProductivityProfile with_change_points(std::vector<double> change_points) const;
  ProductivityProfile with_segments(std::vector<SegmentShape> segments) const;
  // Copy with each continuity-flagged boundary's next intercept set to the
  // previous segment's end value.
  ProductivityProfile with_continuity_applied() const;

 private:
  double window_start_;
  double window_end_;
  std::vector<double> change_points_;
  std::vector<SegmentShape> segments_;
  std::vector<bool> continuity_;
};

enum class Variant { VariableSusceptibility, VariableInfectivity };

std::string_view to_string(Variant v);
Variant variant_from_string(std::string_view s);

struct HawkesParams {
  double lambda0 = 1.0;
  double beta = 1.0;
  ProductivityProfile profile = ProductivityProfile::constant(0.0, 1.0, 0.0);
  Variant variant = Variant::VariableSusceptibility;
};

// kappa(t) for t in (window_start, window_end].
double eval_kappa(const ProductivityProfile& profile, double t);

// Every violated invariant as "<field> <rule>"; empty iff params are valid.
std::vector<std::string> validate(const HawkesParams& params);
void require_valid(const HawkesParams& params);

struct LogNormalPrior {
  double mu = 0.0;
  double sigma = 2.0;
  double log_density(double x) const;
  double dlog_density(double x) const;
};

struct BetaPrior {
  double a = 2.0;
  double b = 2.0;
  double log_density(double x) const;
  double dlog_density(double x) const;
};

struct NormalPrior {
  double mu = 0.0;
  double sigma = 1.0;
  double log_density(double x) const;
  double dlog_density(double x) const;
};

struct PriorSpec {
  LogNormalPrior lambda0_prior{};
  LogNormalPrior beta_prior{};
  BetaPrior kappa_level_prior{};
  NormalPrior slope_prior{};
  // Truncated to rate > 0.
  NormalPrior rate_prior{};
  // Minimum spacing between change points and window edges. Unset means
  // five kernel e-folds, 5 / beta, resolved at the initial beta.
  std::optional<double> min_gap{};

  std::vector<std::string> violations() const;
  double resolved_min_gap(double beta) const;
};

}  // namespace hawkes
