#include "hawkes/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace hawkes {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string fmt_double(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------- EventSeq

EventSeq::EventSeq(std::vector<double> times, double window_start, double window_end)
    : times_(std::move(times)), window_start_(window_start), window_end_(window_end) {
  if (!std::isfinite(window_start) || !std::isfinite(window_end) || !(window_end > window_start)) {
    throw DomainError("EventSeq: window_end must exceed window_start");
  }
  for (std::size_t i = 0; i < times_.size(); ++i) {
    const double t = times_[i];
    if (!(t > window_start_ && t <= window_end_)) {
      throw DomainError("EventSeq: time " + fmt_double(t) + " at index " + std::to_string(i) +
                        " outside (window_start, window_end]");
    }
    if (i > 0 && !(t > times_[i - 1])) {
      throw DomainError("EventSeq: times not strictly increasing at index " + std::to_string(i));
    }
  }
}

EventSeq EventSeq::shifted(double offset) const {
  std::vector<double> out(times_);
  for (double& t : out) t += offset;
  return EventSeq(std::move(out), window_start_ + offset, window_end_ + offset);
}

EventSeq EventSeq::restricted(double a, double b) const {
  std::vector<double> out;
  for (double t : times_) {
    if (t > a && t <= b) out.push_back(t);
  }
  return EventSeq(std::move(out), a, b);
}

// ---------------------------------------------------------------- kinds

std::string_view to_string(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::Constant:
      return "Constant";
    case SegmentKind::Ramp:
      return "Ramp";
    case SegmentKind::Exponential:
      return "Exponential";
  }
  return "?";
}

SegmentKind segment_kind_from_char(char c) {
  switch (c) {
    case 'C':
      return SegmentKind::Constant;
    case 'R':
      return SegmentKind::Ramp;
    case 'E':
      return SegmentKind::Exponential;
    default:
      throw std::invalid_argument(std::string("unknown segment kind '") + c + "'");
  }
}

char segment_kind_char(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::Constant:
      return 'C';
    case SegmentKind::Ramp:
      return 'R';
    case SegmentKind::Exponential:
      return 'E';
  }
  return '?';
}

std::string_view to_string(Variant v) {
  return v == Variant::VariableSusceptibility ? "VariableSusceptibility" : "VariableInfectivity";
}

Variant variant_from_string(std::string_view s) {
  if (s == "VariableSusceptibility" || s == "susceptibility") return Variant::VariableSusceptibility;
  if (s == "VariableInfectivity" || s == "infectivity") return Variant::VariableInfectivity;
  throw std::invalid_argument("unknown variant '" + std::string(s) + "'");
}

// ---------------------------------------------------------------- SegmentShape

SegmentShape SegmentShape::constant(double level) { return SegmentShape(ConstantShape{level}); }

SegmentShape SegmentShape::ramp(double intercept, double slope) {
  return SegmentShape(RampShape{intercept, slope});
}

SegmentShape SegmentShape::exponential(double asymptote, double initial, double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw DomainError("Exponential segment rate must be > 0");
  }
  return SegmentShape(ExponentialShape{asymptote, initial, rate});
}

SegmentShape SegmentShape::from_params(SegmentKind kind, std::span<const double> p) {
  auto need = [&](std::size_t n) {
    if (p.size() != n) throw std::invalid_argument("wrong parameter count for segment shape");
  };
  switch (kind) {
    case SegmentKind::Constant:
      need(1);
      return constant(p[0]);
    case SegmentKind::Ramp:
      need(2);
      return ramp(p[0], p[1]);
    case SegmentKind::Exponential:
      need(3);
      return exponential(p[0], p[1], p[2]);
  }
  throw std::invalid_argument("bad segment kind");
}

SegmentKind SegmentShape::kind() const noexcept {
  return static_cast<SegmentKind>(data_.index());
}

double SegmentShape::value(double u) const {
  return std::visit(overloaded{
                        [](const ConstantShape& s) { return s.level; },
                        [u](const RampShape& s) { return s.intercept + s.slope * u; },
                        [u](const ExponentialShape& s) {
                          return s.asymptote + (s.initial - s.asymptote) * std::exp(-s.rate * u);
                        },
                    },
                    data_);
}

double SegmentShape::derivative(double u) const {
  return std::visit(overloaded{
                        [](const ConstantShape&) { return 0.0; },
                        [](const RampShape& s) { return s.slope; },
                        [u](const ExponentialShape& s) {
                          return -s.rate * (s.initial - s.asymptote) * std::exp(-s.rate * u);
                        },
                    },
                    data_);
}

double SegmentShape::integral(double u0, double u1) const {
  return std::visit(overloaded{
                        [&](const ConstantShape& s) { return s.level * (u1 - u0); },
                        [&](const RampShape& s) {
                          return s.intercept * (u1 - u0) + 0.5 * s.slope * (u1 * u1 - u0 * u0);
                        },
                        [&](const ExponentialShape& s) {
                          return s.asymptote * (u1 - u0) +
                                 (s.initial - s.asymptote) *
                                     (std::exp(-s.rate * u0) - std::exp(-s.rate * u1)) / s.rate;
                        },
                    },
                    data_);
}

std::size_t SegmentShape::param_count() const noexcept {
  switch (kind()) {
    case SegmentKind::Constant:
      return 1;
    case SegmentKind::Ramp:
      return 2;
    case SegmentKind::Exponential:
      return 3;
  }
  return 0;
}

std::vector<double> SegmentShape::params() const {
  return std::visit(overloaded{
                        [](const ConstantShape& s) { return std::vector<double>{s.level}; },
                        [](const RampShape& s) { return std::vector<double>{s.intercept, s.slope}; },
                        [](const ExponentialShape& s) {
                          return std::vector<double>{s.asymptote, s.initial, s.rate};
                        },
                    },
                    data_);
}

std::vector<std::string> SegmentShape::param_names() const {
  switch (kind()) {
    case SegmentKind::Constant:
      return {"level"};
    case SegmentKind::Ramp:
      return {"intercept", "slope"};
    case SegmentKind::Exponential:
      return {"asymptote", "initial", "rate"};
  }
  return {};
}

std::vector<double> SegmentShape::value_gradient(double u) const {
  return std::visit(overloaded{
                        [](const ConstantShape&) { return std::vector<double>{1.0}; },
                        [u](const RampShape&) { return std::vector<double>{1.0, u}; },
                        [u](const ExponentialShape& s) {
                          const double e = std::exp(-s.rate * u);
                          return std::vector<double>{1.0 - e, e, -(s.initial - s.asymptote) * u * e};
                        },
                    },
                    data_);
}

std::size_t SegmentShape::intercept_index() const noexcept {
  return kind() == SegmentKind::Exponential ? 1 : 0;
}

SegmentShape SegmentShape::with_intercept(double v) const {
  auto p = params();
  p[intercept_index()] = v;
  return from_params(kind(), p);
}

double SegmentShape::min_over(double u0, double u1) const {
  return std::min(value(u0), value(u1));
}

double SegmentShape::max_over(double u0, double u1) const {
  return std::max(value(u0), value(u1));
}

// ---------------------------------------------------------------- ProductivityProfile

ProductivityProfile::ProductivityProfile(double window_start, double window_end,
                                         std::vector<double> change_points,
                                         std::vector<SegmentShape> segments,
                                         std::vector<bool> continuity_flags)
    : window_start_(window_start),
      window_end_(window_end),
      change_points_(std::move(change_points)),
      segments_(std::move(segments)),
      continuity_(std::move(continuity_flags)) {
  if (!std::isfinite(window_start_) || !std::isfinite(window_end_) || !(window_end_ > window_start_)) {
    throw DomainError("profile: window_end must exceed window_start");
  }
  if (segments_.size() != change_points_.size() + 1) {
    throw DomainError("profile: need exactly one more segment than change points");
  }
  if (continuity_.empty()) continuity_.assign(change_points_.size(), false);
  if (continuity_.size() != change_points_.size()) {
    throw DomainError("profile: continuity_flags must have one entry per change point");
  }
  double prev = window_start_;
  for (std::size_t k = 0; k < change_points_.size(); ++k) {
    const double g = change_points_[k];
    if (!(g > prev) || !(g < window_end_)) {
      throw DomainError("profile: change points must be strictly increasing inside the window");
    }
    prev = g;
  }
  for (const auto& s : segments_) {
    for (double p : s.params()) {
      if (!std::isfinite(p)) throw DomainError("profile: non-finite segment parameter");
    }
  }
}

ProductivityProfile ProductivityProfile::constant(double window_start, double window_end, double level) {
  return ProductivityProfile(window_start, window_end, {}, {SegmentShape::constant(level)});
}

double ProductivityProfile::segment_start(std::size_t j) const {
  return j == 0 ? window_start_ : change_points_.at(j - 1);
}

double ProductivityProfile::segment_end(std::size_t j) const {
  return j == change_points_.size() ? window_end_ : change_points_.at(j);
}

std::size_t ProductivityProfile::segment_index(double t) const {
  // first change point >= t: t == gamma_j stays in segment j
  auto it = std::lower_bound(change_points_.begin(), change_points_.end(), t);
  return static_cast<std::size_t>(it - change_points_.begin());
}

double ProductivityProfile::kappa(double t) const {
  if (!(t >= window_start_ && t <= window_end_)) {
    throw DomainError("kappa: t=" + fmt_double(t) + " outside the observation window");
  }
  const std::size_t j = segment_index(t);
  return segments_[j].value(t - segment_start(j));
}

double ProductivityProfile::kappa_right(double t) const {
  if (!(t >= window_start_ && t < window_end_)) {
    throw DomainError("kappa_right: t outside [window_start, window_end)");
  }
  auto it = std::upper_bound(change_points_.begin(), change_points_.end(), t);
  const auto j = static_cast<std::size_t>(it - change_points_.begin());
  return segments_[j].value(t - segment_start(j));
}

double ProductivityProfile::kappa_derivative(double t) const {
  const std::size_t j = segment_index(t);
  return segments_[j].derivative(t - segment_start(j));
}

double ProductivityProfile::integral(double a, double b) const {
  if (b < a) return -integral(b, a);
  a = std::max(a, window_start_);
  b = std::min(b, window_end_);
  double total = 0.0;
  for (std::size_t j = 0; j < segments_.size(); ++j) {
    const double s = segment_start(j);
    const double lo = std::max(a, s);
    const double hi = std::min(b, segment_end(j));
    if (hi > lo) total += segments_[j].integral(lo - s, hi - s);
  }
  return total;
}

double ProductivityProfile::total_variation() const {
  double tv = 0.0;
  for (std::size_t j = 0; j < segments_.size(); ++j) {
    const auto& s = segments_[j];
    tv += std::abs(s.value(segment_length(j)) - s.value(0.0));
    if (j + 1 < segments_.size()) {
      tv += std::abs(segments_[j + 1].value(0.0) - s.value(segment_length(j)));
    }
  }
  return tv;
}

double ProductivityProfile::max_kappa() const {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < segments_.size(); ++j) {
    m = std::max(m, segments_[j].max_over(0.0, segment_length(j)));
  }
  return m;
}

ProductivityProfile ProductivityProfile::with_change_points(std::vector<double> change_points) const {
  return ProductivityProfile(window_start_, window_end_, std::move(change_points), segments_, continuity_)
      .with_continuity_applied();
}

ProductivityProfile ProductivityProfile::with_segments(std::vector<SegmentShape> segments) const {
  return ProductivityProfile(window_start_, window_end_, change_points_, std::move(segments), continuity_)
      .with_continuity_applied();
}

ProductivityProfile ProductivityProfile::with_continuity_applied() const {
  ProductivityProfile out = *this;
  for (std::size_t k = 0; k < out.change_points_.size(); ++k) {
    if (!out.continuity_[k]) continue;
    const double end_value = out.segments_[k].value(out.segment_length(k));
    out.segments_[k + 1] = out.segments_[k + 1].with_intercept(end_value);
  }
  return out;
}

// ---------------------------------------------------------------- params

double eval_kappa(const ProductivityProfile& profile, double t) {
  if (!(t > profile.window_start() && t <= profile.window_end())) {
    throw DomainError("eval_kappa: t=" + fmt_double(t) + " outside (window_start, window_end]");
  }
  return profile.kappa(t);
}

std::vector<std::string> validate(const HawkesParams& params) {
  std::vector<std::string> out;
  if (!(params.lambda0 > 0.0) || !std::isfinite(params.lambda0)) out.push_back("lambda0 must be > 0");
  if (!(params.beta > 0.0) || !std::isfinite(params.beta)) out.push_back("beta must be > 0");
  const auto& prof = params.profile;
  for (std::size_t j = 0; j < prof.segment_count(); ++j) {
    const auto& s = prof.segment(j);
    const double len = prof.segment_length(j);
    const double v0 = s.value(0.0);
    const double v1 = s.value(len);
    if (std::min(v0, v1) < 0.0) {
      const double t = prof.segment_start(j) + (v0 < v1 ? 0.0 : len);
      out.push_back("kappa negative at t=" + fmt_double(t) + " (segment " + std::to_string(j) + ")");
    }
  }
  for (std::size_t k = 0; k < prof.change_points().size(); ++k) {
    if (!prof.continuity_flags()[k]) continue;
    const double left = prof.segment(k).value(prof.segment_length(k));
    const double right = prof.segment(k + 1).value(0.0);
    if (std::abs(left - right) > 1e-12) {
      out.push_back("continuity_flags[" + std::to_string(k) + "] kappa discontinuous at t=" +
                    fmt_double(prof.change_points()[k]));
    }
  }
  return out;
}

void require_valid(const HawkesParams& params) {
  const auto v = validate(params);
  if (v.empty()) return;
  std::string msg = "invalid parameters:";
  for (const auto& s : v) msg += " " + s + ";";
  throw DomainError(msg);
}

// ---------------------------------------------------------------- priors

double LogNormalPrior::log_density(double x) const {
  if (!(x > 0.0)) return -std::numeric_limits<double>::infinity();
  const double z = (std::log(x) - mu) / sigma;
  return -0.5 * z * z - std::log(x * sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double LogNormalPrior::dlog_density(double x) const {
  return -(std::log(x) - mu) / (sigma * sigma * x) - 1.0 / x;
}

double BetaPrior::log_density(double x) const {
  if (!(x > 0.0 && x < 1.0)) return -std::numeric_limits<double>::infinity();
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(x) +
         (b - 1.0) * std::log1p(-x);
}

double BetaPrior::dlog_density(double x) const { return (a - 1.0) / x - (b - 1.0) / (1.0 - x); }

double NormalPrior::log_density(double x) const {
  const double z = (x - mu) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double NormalPrior::dlog_density(double x) const { return -(x - mu) / (sigma * sigma); }

std::vector<std::string> PriorSpec::violations() const {
  std::vector<std::string> out;
  if (!(lambda0_prior.sigma > 0.0)) out.push_back("lambda0_prior.sigma must be > 0");
  if (!(beta_prior.sigma > 0.0)) out.push_back("beta_prior.sigma must be > 0");
  if (!(kappa_level_prior.a > 0.0) || !(kappa_level_prior.b > 0.0)) {
    out.push_back("kappa_level_prior a, b must be > 0");
  }
  if (!(slope_prior.sigma > 0.0)) out.push_back("slope_prior.sigma must be > 0");
  if (!(rate_prior.sigma > 0.0)) out.push_back("rate_prior.sigma must be > 0");
  if (min_gap && !(*min_gap > 0.0)) out.push_back("min_gap must be > 0");
  return out;
}

double PriorSpec::resolved_min_gap(double beta) const { return min_gap ? *min_gap : 5.0 / beta; }

}  // namespace hawkes
