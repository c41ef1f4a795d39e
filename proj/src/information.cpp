#include "hawkes/information.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <fmt/format.h>

#include "hawkes/meanfield.hpp"
#include "hawkes/numerics.hpp"

namespace hawkes {

namespace {

void check_delta(double delta) {
  if (!(delta >= 0.0)) throw DomainError("delta must be >= 0");
}

}  // namespace

StepQuantities step_quantities(const StepConfig& s) {
  if (!(s.kappa1 >= 0.0 && s.kappa1 < 1.0) || !(s.kappa2 >= 0.0 && s.kappa2 < 1.0)) {
    throw DomainError(fmt::format("kappa1={}, kappa2={}: both must lie in [0, 1)", s.kappa1, s.kappa2));
  }
  if (!(s.lambda0 > 0.0) || !(s.beta > 0.0)) throw DomainError("lambda0 and beta must be > 0");
  StepQuantities q;
  q.steady_pre = s.lambda0 / (1.0 - s.kappa1);
  q.steady_post = s.lambda0 / (1.0 - s.kappa2);
  q.amplitude = q.steady_pre - q.steady_post;
  q.rate = s.beta * (1.0 - s.kappa2);
  q.lambda_jump = (s.kappa2 - s.kappa1) * q.steady_pre;
  q.slope_b = -s.beta * s.kappa2 * q.lambda_jump;
  return q;
}

double info_level_mf_quadrature(double lambda0, double beta, double kappa1, double kappa2, double delta) {
  const auto q = step_quantities({lambda0, beta, kappa1, kappa2});
  check_delta(delta);
  auto f = [&](double u) {
    const double dev = q.amplitude * std::exp(-q.rate * u);
    const double m = q.steady_post + dev;
    return m * m / (q.steady_post + kappa2 * dev);
  };
  if (std::isinf(delta)) return std::numeric_limits<double>::infinity();
  return numerics::integrate(f, 0.0, delta);
}

double info_level_mf(double lambda0, double beta, double kappa1, double kappa2, double delta) {
  const auto q = step_quantities({lambda0, beta, kappa1, kappa2});
  check_delta(delta);
  if (delta == 0.0) return 0.0;
  if (kappa2 < 1e-4) return info_level_mf_quadrature(lambda0, beta, kappa1, kappa2, delta);
  const double k = kappa2;
  const double r = q.rate;
  const double L2 = q.steady_post;
  const double Ak = q.amplitude * k;
  const double one_minus_y = -std::expm1(-r * delta);
  const double log_term = std::log1p(-Ak * one_minus_y / (Ak + L2));
  return (Ak * one_minus_y + L2 * k * k * r * delta + L2 * (1.0 - k) * (1.0 - k) * log_term) / (r * k * k);
}

double info_level_mf_plus(const StepConfig& step, double delta, bool zero_variance) {
  const auto q = step_quantities(step);
  check_delta(delta);
  if (delta == 0.0) return 0.0;
  const double v_star = stationary_variance(Variant::VariableSusceptibility, step.lambda0, step.beta, step.kappa1);
  auto f = [&](double u) {
    const MomentState ms = constant_kappa_moments(Variant::VariableSusceptibility, step.lambda0, step.beta,
                                                  step.kappa2, q.steady_pre, v_star, u);
    const double lb = step.lambda0 + step.kappa2 * ms.M;
    double val = ms.M * ms.M / lb;
    if (!zero_variance) val += step.lambda0 * step.lambda0 * ms.V / (lb * lb * lb);
    return val;
  };
  return numerics::integrate(f, 0.0, delta);
}

ChangeTimeInfo info_changetime(double lambda0, double beta, double kappa1, double kappa2, double delta) {
  const auto q = step_quantities({lambda0, beta, kappa1, kappa2});
  check_delta(delta);
  ChangeTimeInfo out;
  const double lb0 = lambda0 + kappa2 * q.steady_pre;
  out.jump = q.lambda_jump * q.lambda_jump / lb0;
  if (q.slope_b != 0.0 && delta > 0.0) {
    auto f = [&](double u) {
      const double y = std::exp(-q.rate * u);
      return q.slope_b * q.slope_b * y * y / (q.steady_post + kappa2 * q.amplitude * y);
    };
    out.smooth = numerics::integrate(f, 0.0, delta);
  }
  out.total = out.jump + out.smooth;
  const double lower = std::min(q.steady_pre, q.steady_post);
  out.bound = out.jump - q.slope_b * q.slope_b * std::expm1(-2.0 * q.rate * delta) / (2.0 * q.rate * lower);
  return out;
}

double info_boundary_lower_quadrature(double S, double lambda0, double beta, double kappa_max, double delta) {
  auto f = [&](double u) {
    const double b = S * std::exp(-beta * u);
    return b * b / (lambda0 + kappa_max * b);
  };
  return numerics::integrate(f, 0.0, delta, 1e-14);
}

double info_boundary_lower(double S, double lambda0, double beta, double kappa_max, double delta,
                           double weight_factor) {
  if (!(S >= 0.0) || !(kappa_max >= 0.0) || !(lambda0 > 0.0) || !(beta > 0.0)) {
    throw DomainError("info_boundary_lower: need S >= 0, kappa_max >= 0, lambda0 > 0, beta > 0");
  }
  check_delta(delta);
  if (S == 0.0 || delta == 0.0) return 0.0;
  const double one_minus_y = -std::expm1(-beta * delta);
  double value = 0.0;
  if (kappa_max == 0.0) {
    value = -S * S * std::expm1(-2.0 * beta * delta) / (2.0 * beta * lambda0);
  } else if (kappa_max * S / lambda0 < 1e-4) {
    value = info_boundary_lower_quadrature(S, lambda0, beta, kappa_max, delta);
  } else {
    const double ks = kappa_max * S;
    const double y = 1.0 - one_minus_y;
    const double log_term = std::log1p(ks * one_minus_y / (lambda0 + ks * y));
    value = (ks * one_minus_y - lambda0 * log_term) / (beta * kappa_max * kappa_max);
  }
  return weight_factor * value;
}

double info_boundary_lower_ramp_slope(double S, double lambda0, double beta, double kappa_max, double delta) {
  if (!(S >= 0.0) || !(kappa_max >= 0.0) || !(lambda0 > 0.0) || !(beta > 0.0)) {
    throw DomainError("info_boundary_lower_ramp_slope: need S >= 0, kappa_max >= 0, lambda0 > 0, beta > 0");
  }
  check_delta(delta);
  auto f = [&](double u) {
    const double b = S * std::exp(-beta * u);
    return u * u * b * b / (lambda0 + kappa_max * b);
  };
  return numerics::integrate(f, 0.0, delta, 1e-14);
}

RecommendedWindow recommended_window(double beta, double kappa2) {
  if (!(kappa2 < 1.0)) throw DomainError(fmt::format("recommended_window: kappa2={} >= 1", kappa2));
  if (!(beta > 0.0)) throw DomainError("recommended_window: beta must be > 0");
  RecommendedWindow w;
  w.tau2 = 1.0 / (beta * (1.0 - kappa2));
  w.delta_lo = 3.0 * w.tau2;
  w.delta_hi = 5.0 * w.tau2;
  return w;
}

RecommendedWindow recommended_window(const ProductivityProfile& profile, double beta, double t_star) {
  if (!(beta > 0.0)) throw DomainError("recommended_window: beta must be > 0");
  const double we = profile.window_end();
  if (!(t_star >= profile.window_start() && t_star < we)) {
    throw DomainError("recommended_window: t_star must lie inside the window");
  }
  const double k0 = profile.kappa_right(t_star);
  if (!(k0 < 1.0)) throw DomainError(fmt::format("recommended_window: kappa(t*+)={} >= 1", k0));
  RecommendedWindow w;
  w.tau2 = 1.0 / (beta * (1.0 - k0));
  auto solve = [&](double target) {
    auto g = [&](double d) { return beta * (d - profile.integral(t_star, t_star + d)) - target; };
    const double hi = we - t_star;
    if (g(hi) < 0.0) {
      throw DomainError(fmt::format("recommended_window: window ends before beta ∫(1-kappa) reaches {}", target));
    }
    return numerics::find_root(g, 0.0, hi, 1e-15);
  };
  w.delta_lo = solve(3.0);
  w.delta_hi = solve(5.0);
  return w;
}

std::string_view to_string(InfoKind kind) {
  switch (kind) {
    case InfoKind::LevelMF: return "level_mf";
    case InfoKind::LevelMFPlus: return "level_mf_plus";
    case InfoKind::ChangeTimeSmooth: return "changetime_smooth";
    case InfoKind::ChangeTimeTotal: return "changetime_total";
    case InfoKind::BoundaryLower: return "boundary_lower";
  }
  return "unknown";
}

InfoKind info_kind_from_string(std::string_view s) {
  for (auto k : {InfoKind::LevelMF, InfoKind::LevelMFPlus, InfoKind::ChangeTimeSmooth,
                 InfoKind::ChangeTimeTotal, InfoKind::BoundaryLower}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown information kind: " + std::string(s));
}

InfoCurve info_curve(const StepConfig& step, InfoKind kind, std::span<const double> delta_grid) {
  InfoCurve c;
  c.kind = kind;
  c.meta = step_quantities(step);
  c.delta_grid.assign(delta_grid.begin(), delta_grid.end());
  for (double d : delta_grid) {
    double v = 0.0;
    switch (kind) {
      case InfoKind::LevelMF:
        v = info_level_mf(step.lambda0, step.beta, step.kappa1, step.kappa2, d);
        break;
      case InfoKind::LevelMFPlus:
        v = info_level_mf_plus(step, d);
        break;
      case InfoKind::ChangeTimeSmooth:
        v = info_changetime(step.lambda0, step.beta, step.kappa1, step.kappa2, d).smooth;
        break;
      case InfoKind::ChangeTimeTotal:
        v = info_changetime(step.lambda0, step.beta, step.kappa1, step.kappa2, d).total;
        break;
      case InfoKind::BoundaryLower:
        v = info_boundary_lower(c.meta.steady_pre, step.lambda0, step.beta, step.kappa2, d);
        break;
    }
    c.values.push_back(v);
  }
  return c;
}

}  // namespace hawkes
