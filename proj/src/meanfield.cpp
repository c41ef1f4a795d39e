#include "hawkes/meanfield.hpp"

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <limits>
#include <string>

#include <fmt/format.h>

#include "hawkes/numerics.hpp"

namespace hawkes {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kExpCap = 700.0;

using State = std::array<double, 3>;

// expm1(x u) / x, continuous at x = 0.
double kfun(double x, double u) {
  if (x == 0.0) return u;
  return std::expm1(x * u) / x;
}

struct Coeffs {
  double a;   // M' = a + b M
  double b;
  double g0;  // V forcing = g0 + g1 M
  double g1;
};

Coeffs coeffs(Variant variant, double lambda0, double beta, double kappa) {
  Coeffs c{};
  c.b = beta * (kappa - 1.0);
  if (variant == Variant::VariableSusceptibility) {
    c.a = beta * lambda0;
    c.g0 = beta * beta * lambda0;
    c.g1 = beta * beta * kappa;
  } else {
    c.a = beta * kappa * lambda0;
    c.g0 = beta * beta * kappa * kappa * lambda0;
    c.g1 = beta * beta * kappa * kappa;
  }
  return c;
}

double lambda_bar_of(Variant variant, double lambda0, double kappa, double M) {
  return variant == Variant::VariableSusceptibility ? lambda0 + kappa * M : lambda0 + M;
}

void check_grid(const ProductivityProfile& prof, std::span<const double> grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= prof.window_start() && grid[i] <= prof.window_end())) {
      throw DomainError(fmt::format("grid[{}]={} outside window [{}, {}]", i, grid[i],
                                    prof.window_start(), prof.window_end()));
    }
    if (i > 0 && grid[i] < grid[i - 1]) throw DomainError("grid must be sorted");
  }
}

// Integrates M (and V) from times.front() through each of `times`, returning
// the state at each time.
std::vector<State> integrate_numeric(const HawkesParams& p, std::size_t seg, State x,
                                     const std::vector<double>& times, const MeanFieldOptions& opt) {
  namespace ode = boost::numeric::odeint;
  const auto& prof = p.profile;
  const double s0 = prof.segment_start(seg);
  const auto& shape = prof.segment(seg);
  auto rhs = [&](const State& y, State& dy, double t) {
    const Coeffs c = coeffs(p.variant, p.lambda0, p.beta, shape.value(t - s0));
    dy[0] = c.a + c.b * y[0];
    dy[1] = 2.0 * c.b * y[1] + c.g0 + c.g1 * y[0];
    dy[2] = 0.0;
  };
  std::vector<State> out;
  out.reserve(times.size());
  if (times.size() == 1) return {x};
  auto stepper = ode::make_dense_output(opt.abs_tol, opt.rel_tol, ode::runge_kutta_dopri5<State>());
  const double dt0 = std::min(0.01, (times.back() - times.front()) / 10.0);
  ode::integrate_times(stepper, rhs, x, times.begin(), times.end(), dt0,
                       [&](const State& y, double) { out.push_back(y); });
  return out;
}

MeanFieldPath solve_impl(const HawkesParams& p, double M0, double V0, std::span<const double> grid,
                         const MeanFieldOptions& opt, bool moments) {
  if (!(p.lambda0 > 0.0) || !(p.beta > 0.0)) throw DomainError("lambda0 and beta must be > 0");
  if (!(M0 >= 0.0)) throw DomainError("M0 must be >= 0");
  if (!(V0 >= 0.0)) throw DomainError("V0 must be >= 0");
  const auto& prof = p.profile;
  check_grid(prof, grid);

  MeanFieldPath path;
  path.grid.assign(grid.begin(), grid.end());
  path.M.resize(grid.size());
  path.lambda_bar.resize(grid.size());
  if (moments) path.V.resize(grid.size());

  for (std::size_t j = 0; j < prof.segment_count(); ++j) {
    SegmentMeta meta;
    meta.index = j;
    meta.start = prof.segment_start(j);
    meta.end = prof.segment_end(j);
    const auto& shape = prof.segment(j);
    if (shape.kind() == SegmentKind::Constant) {
      const double k = shape.value(0.0);
      if (k < 1.0) {
        meta.steady_state = p.lambda0 / (1.0 - k);
        meta.relaxation_time = 1.0 / (p.beta * (1.0 - k));
      }
    }
    path.segments.push_back(meta);
  }

  State x{M0, V0, 0.0};
  std::size_t gi = 0;
  auto store = [&](std::size_t i, const State& y, double kappa) {
    double m = y[0];
    double v = y[1];
    if (!std::isfinite(m) || m > std::exp(kExpCap)) {
      m = kInf;
      path.overflow = true;
    }
    if (!std::isfinite(v) || v > std::exp(kExpCap)) {
      v = kInf;
      path.overflow = true;
    }
    path.M[i] = m;
    path.lambda_bar[i] = lambda_bar_of(p.variant, p.lambda0, kappa, m);
    if (moments) path.V[i] = v;
  };
  while (gi < grid.size() && grid[gi] == prof.window_start()) {
    store(gi, x, prof.segment(0).value(0.0));
    ++gi;
  }

  for (std::size_t j = 0; j < prof.segment_count(); ++j) {
    const double s = prof.segment_start(j);
    const double e = prof.segment_end(j);
    const auto& shape = prof.segment(j);
    std::size_t gend = gi;
    while (gend < grid.size() && grid[gend] <= e) ++gend;

    if (shape.kind() == SegmentKind::Constant && !opt.force_numeric) {
      const double k = shape.value(0.0);
      for (std::size_t i = gi; i < gend; ++i) {
        const MomentState ms = constant_kappa_moments(p.variant, p.lambda0, p.beta, k, x[0], x[1], grid[i] - s);
        if (ms.overflow) path.overflow = true;
        store(i, {ms.M, ms.V, 0.0}, k);
      }
      const MomentState ms = constant_kappa_moments(p.variant, p.lambda0, p.beta, k, x[0], x[1], e - s);
      if (ms.overflow) path.overflow = true;
      x = {ms.M, ms.V, 0.0};
    } else if (std::isfinite(x[0]) && std::isfinite(x[1])) {
      std::vector<double> times{s};
      for (std::size_t i = gi; i < gend; ++i) {
        if (grid[i] > times.back()) times.push_back(grid[i]);
      }
      if (e > times.back()) times.push_back(e);
      const auto states = integrate_numeric(p, j, x, times, opt);
      std::size_t ti = 0;
      for (std::size_t i = gi; i < gend; ++i) {
        while (times[ti] < grid[i]) ++ti;
        store(i, states[ti], shape.value(grid[i] - s));
      }
      x = states.back();
    } else {
      for (std::size_t i = gi; i < gend; ++i) store(i, x, shape.value(grid[i] - s));
    }
    gi = gend;
  }
  return path;
}

}  // namespace

MomentState constant_kappa_moments(Variant variant, double lambda0, double beta, double kappa,
                                   double M0, double V0, double u) {
  const Coeffs c = coeffs(variant, lambda0, beta, kappa);
  MomentState out;
  if (2.0 * c.b * u > kExpCap) {
    // Only the exponential terms survive; report saturation.
    out.overflow = true;
    out.M = c.b * u > kExpCap ? kInf : M0 * std::exp(c.b * u) + c.a * kfun(c.b, u);
    out.V = kInf;
    return out;
  }
  const double E = std::exp(c.b * u);
  const double K1 = kfun(c.b, u);
  const double K2 = kfun(2.0 * c.b, u);
  // M(u) = M0 e^{bu} + a K1;
  // V(u) = V0 e^{2bu} + ∫ e^{2b(u-s)} (g0 + g1 M(s)) ds, the a-term reducing
  // to a K1^2 / 2.
  out.M = M0 * E + c.a * K1;
  out.V = V0 * E * E + c.g0 * K2 + c.g1 * (M0 * E * K1 + 0.5 * c.a * K1 * K1);
  return out;
}

double stationary_variance(Variant variant, double lambda0, double beta, double kappa) {
  if (!(kappa >= 0.0 && kappa < 1.0)) throw DomainError("stationary_variance: kappa must be in [0, 1)");
  const Coeffs c = coeffs(variant, lambda0, beta, kappa);
  const double m = -c.a / c.b;
  return -(c.g0 + c.g1 * m) / (2.0 * c.b);
}

MeanFieldPath solve_mean_ode(const HawkesParams& params, double M0, std::span<const double> grid,
                             const MeanFieldOptions& options) {
  return solve_impl(params, M0, 0.0, grid, options, false);
}

MeanFieldPath solve_moment_odes(const HawkesParams& params, double M0, double V0,
                                std::span<const double> grid, const MeanFieldOptions& options) {
  return solve_impl(params, M0, V0, grid, options, true);
}

StepChangePath step_change_path(double lambda0, double beta, double kappa1, double kappa2,
                                std::span<const double> u_grid) {
  if (!(kappa1 >= 0.0 && kappa1 < 1.0) || !(kappa2 >= 0.0 && kappa2 < 1.0)) {
    throw DomainError("step_change_path: kappa1 and kappa2 must lie in [0, 1)");
  }
  if (!(lambda0 > 0.0) || !(beta > 0.0)) throw DomainError("step_change_path: lambda0 and beta must be > 0");
  StepChangePath out;
  out.steady_pre = lambda0 / (1.0 - kappa1);
  out.steady_post = lambda0 / (1.0 - kappa2);
  out.amplitude = out.steady_pre - out.steady_post;
  out.rate = beta * (1.0 - kappa2);
  out.offset = kappa2 * out.amplitude;
  out.intensity_jump = (kappa2 - kappa1) * out.steady_pre;

  auto& path = out.path;
  path.grid.assign(u_grid.begin(), u_grid.end());
  for (double u : u_grid) {
    if (!(u >= 0.0)) throw DomainError("step_change_path: lags must be >= 0");
    const double dev = out.amplitude * std::exp(-out.rate * u);
    path.M.push_back(out.steady_post + dev);
    path.lambda_bar.push_back(out.steady_post + kappa2 * dev);
  }
  SegmentMeta meta;
  meta.index = 1;
  meta.start = 0.0;
  meta.end = u_grid.empty() ? 0.0 : u_grid.back();
  meta.steady_state = out.steady_post;
  meta.relaxation_time = 1.0 / out.rate;
  path.segments.push_back(meta);
  return out;
}

double slow_variation_index(const HawkesParams& params, double t) {
  const auto& prof = params.profile;
  if (!(t > prof.window_start() && t < prof.window_end())) {
    throw DomainError(fmt::format("slow_variation_index: t={} is not interior to the window", t));
  }
  for (double g : prof.change_points()) {
    if (t == g) throw DomainError(fmt::format("slow_variation_index: t={} is a change point", t));
  }
  const double k = prof.kappa(t);
  if (!(k < 1.0)) throw DomainError(fmt::format("slow_variation_index: kappa(t)={} >= 1", k));
  const double d = prof.kappa_derivative(t);
  return std::abs(d) / (params.beta * (1.0 - k) * (1.0 - k));
}

ForgettingBound forgetting_bound(const ProductivityProfile& profile, double beta, double L,
                                 double delta, double t) {
  if (!(beta > 0.0) || !(L > 0.0) || !(delta > 0.0)) {
    throw DomainError("forgetting_bound: beta, L and delta must be > 0");
  }
  const double ws = profile.window_start();
  const double we = profile.window_end();
  if (!(t >= ws && t <= we)) throw DomainError("forgetting_bound: t outside the window");
  if (we - ws < L) throw PreconditionError("forgetting_bound: window shorter than L");

  ForgettingBound out;
  out.worst_gap = kInf;
  double worst_start = ws;
  const double step = L / 100.0;
  const auto n = static_cast<std::size_t>(std::floor((we - L - ws) / step + 1e-9));
  for (std::size_t i = 0; i <= n + 1; ++i) {
    const double s = std::min(ws + step * static_cast<double>(i), we - L);
    const double gap = (L - profile.integral(s, s + L)) / L;
    if (gap < out.worst_gap) {
      out.worst_gap = gap;
      worst_start = s;
    }
  }
  if (out.worst_gap < delta * (1.0 - 1e-12)) {
    throw PreconditionError(fmt::format(
        "average-gap condition violated: window [{}, {}] has mean (1 - kappa) = {} < delta = {}",
        worst_start, worst_start + L, out.worst_gap, delta));
  }

  auto phi = [&](double x) { return std::exp(-beta * ((x - ws) - profile.integral(ws, x))); };
  // Phi is maximised on [ws, ws + L] at an endpoint, a boundary, or a point
  // where kappa crosses 1 downward.
  std::vector<double> cand{ws, ws + L};
  for (std::size_t j = 0; j < profile.segment_count(); ++j) {
    const double s = profile.segment_start(j);
    const double e = profile.segment_end(j);
    if (s > ws + L) break;
    cand.push_back(s);
    cand.push_back(std::min(e, ws + L));
    const auto& sh = profile.segment(j);
    double u = -1.0;
    if (const auto* r = std::get_if<RampShape>(&sh.data())) {
      if (r->slope != 0.0) u = (1.0 - r->intercept) / r->slope;
    } else if (const auto* x = std::get_if<ExponentialShape>(&sh.data())) {
      const double ratio = (1.0 - x->asymptote) / (x->initial - x->asymptote);
      if (ratio > 0.0 && ratio < 1.0) u = -std::log(ratio) / x->rate;
    }
    if (u > 0.0 && s + u < std::min(e, ws + L)) cand.push_back(s + u);
  }
  double sup = 0.0;
  for (double c : cand) sup = std::max(sup, phi(c));
  out.constant = sup * std::exp(beta * delta * L);
  out.phi = phi(t);
  out.bound = out.constant * std::exp(-beta * delta * (t - ws));
  return out;
}

FinitePopPath solve_finite_pop(const FinitePopSpec& spec, double N0, double M0,
                               std::span<const double> grid, const MeanFieldOptions& opt) {
  namespace ode = boost::numeric::odeint;
  const auto& p = spec.base;
  if (!(spec.n_pop > 0.0) || !std::isfinite(spec.n_pop)) throw DomainError("n_pop must be finite and > 0");
  if (!(N0 >= 0.0 && N0 < spec.n_pop)) throw DomainError("N0 must lie in [0, n_pop)");
  if (!(M0 >= 0.0)) throw DomainError("M0 must be >= 0");
  const auto& prof = p.profile;
  check_grid(prof, grid);

  FinitePopPath out;
  out.grid.assign(grid.begin(), grid.end());
  out.N.resize(grid.size());
  out.M.resize(grid.size());
  out.lambda_bar.resize(grid.size());

  auto lbar = [&](const State& y, double k) {
    const double sat = std::max(0.0, 1.0 - y[0] / spec.n_pop);
    return p.lambda0 + k * sat * y[1];
  };
  State x{N0, M0, 0.0};
  std::size_t gi = 0;
  auto store = [&](std::size_t i, const State& y, double k) {
    out.N[i] = y[0];
    out.M[i] = y[1];
    out.lambda_bar[i] = lbar(y, k);
  };
  while (gi < grid.size() && grid[gi] == prof.window_start()) {
    store(gi, x, prof.segment(0).value(0.0));
    ++gi;
  }
  for (std::size_t j = 0; j < prof.segment_count(); ++j) {
    const double s = prof.segment_start(j);
    const double e = prof.segment_end(j);
    const auto& shape = prof.segment(j);
    std::size_t gend = gi;
    while (gend < grid.size() && grid[gend] <= e) ++gend;
    std::vector<double> times{s};
    for (std::size_t i = gi; i < gend; ++i) {
      if (grid[i] > times.back()) times.push_back(grid[i]);
    }
    if (e > times.back()) times.push_back(e);
    std::vector<State> states;
    if (times.size() == 1) {
      states.push_back(x);
    } else {
      auto rhs = [&](const State& y, State& dy, double t) {
        const double l = lbar(y, shape.value(t - s));
        dy[0] = l;
        dy[1] = p.beta * (l - y[1]);
        dy[2] = 0.0;
      };
      auto stepper = ode::make_dense_output(opt.abs_tol, opt.rel_tol, ode::runge_kutta_dopri5<State>());
      ode::integrate_times(stepper, rhs, x, times.begin(), times.end(),
                           std::min(0.01, (times.back() - s) / 10.0),
                           [&](const State& y, double) { states.push_back(y); });
    }
    std::size_t ti = 0;
    for (std::size_t i = gi; i < gend; ++i) {
      while (times[ti] < grid[i]) ++ti;
      store(i, states[ti], shape.value(grid[i] - s));
    }
    x = states.back();
    gi = gend;
  }
  return out;
}

}  // namespace hawkes
