#include "hawkes/likelihood.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "hawkes/numerics.hpp"
#include "hawkes/parallel.hpp"

namespace hawkes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// c * u^p * e^{-q u}
struct Term {
  double c;
  int p;
  double q;
};

// Fixed-capacity term list; no shape needs more than two terms.
struct Terms {
  std::array<Term, 2> t{};
  int n = 0;
  void add(double c, int p, double q) { t[n++] = {c, p, q}; }
};

// kappa(x0 + u) as a sum of terms in u.
Terms kappa_terms(const SegmentShape& sh, double x0) {
  Terms out;
  if (const auto* c = std::get_if<ConstantShape>(&sh.data())) {
    out.add(c->level, 0, 0.0);
  } else if (const auto* r = std::get_if<RampShape>(&sh.data())) {
    out.add(r->intercept + r->slope * x0, 0, 0.0);
    out.add(r->slope, 1, 0.0);
  } else {
    const auto& e = std::get<ExponentialShape>(sh.data());
    out.add(e.asymptote, 0, 0.0);
    out.add((e.initial - e.asymptote) * std::exp(-e.rate * x0), 0, e.rate);
  }
  return out;
}

// d kappa(x0 + u) / d params()[k] as terms in u.
Terms kappa_param_terms(const SegmentShape& sh, std::size_t k, double x0) {
  Terms out;
  switch (sh.kind()) {
    case SegmentKind::Constant:
      out.add(1.0, 0, 0.0);
      break;
    case SegmentKind::Ramp:
      if (k == 0) {
        out.add(1.0, 0, 0.0);
      } else {
        out.add(x0, 0, 0.0);
        out.add(1.0, 1, 0.0);
      }
      break;
    case SegmentKind::Exponential: {
      const auto& e = std::get<ExponentialShape>(sh.data());
      const double d = std::exp(-e.rate * x0);
      if (k == 0) {
        out.add(1.0, 0, 0.0);
        out.add(-d, 0, e.rate);
      } else if (k == 1) {
        out.add(d, 0, e.rate);
      } else {
        const double amp = e.initial - e.asymptote;
        out.add(-amp * x0 * d, 0, e.rate);
        out.add(-amp * d, 1, e.rate);
      }
      break;
    }
  }
  return out;
}

// ∫_0^h terms(u) u^extra e^{-beta u} du
double term_integral(const Terms& terms, double beta, double h, int extra = 0) {
  double s = 0.0;
  for (int i = 0; i < terms.n; ++i) {
    const auto& t = terms.t[i];
    if (t.c != 0.0) s += t.c * numerics::exp_moment(t.p + extra, beta + t.q, h);
  }
  return s;
}

void check_params(const HawkesParams& p) {
  if (!std::isfinite(p.lambda0) || !(p.lambda0 > 0.0)) throw DomainError("loglik: lambda0 must be finite and > 0");
  if (!std::isfinite(p.beta) || !(p.beta > 0.0)) throw DomainError("loglik: beta must be finite and > 0");
}

void check_window(const EventSeq& ev, const HawkesParams& p) {
  if (ev.window_start() != p.profile.window_start() || ev.window_end() != p.profile.window_end()) {
    throw DomainError(fmt::format("loglik: event window ({}, {}] differs from profile window ({}, {}]",
                                  ev.window_start(), ev.window_end(), p.profile.window_start(),
                                  p.profile.window_end()));
  }
}

std::vector<std::size_t> param_offsets(const HawkesParams& p) {
  std::vector<std::size_t> off;
  std::size_t o = 2;
  for (const auto& s : p.profile.segments()) {
    off.push_back(o);
    o += s.param_count();
  }
  off.push_back(o);
  return off;
}

// Full sweep. With Grad, g receives derivatives in smooth_param_ids order.
template <bool Grad>
double sweep_susceptibility(const EventSeq& ev, const HawkesParams& p, const CarryState& c0,
                            std::vector<double>* g) {
  const auto& prof = p.profile;
  const double beta = p.beta;
  const auto times = ev.times();
  std::vector<std::size_t> off;
  if constexpr (Grad) {
    off = param_offsets(p);
    g->assign(off.back(), 0.0);
    (*g)[0] = -ev.length();
  }
  double value = -p.lambda0 * ev.length();
  double z = c0.S;
  double zb = 0.0;  // dz / dbeta
  std::size_t i = 0;
  double pos = prof.window_start();
  for (std::size_t j = 0; j < prof.segment_count(); ++j) {
    const double s = prof.segment_start(j);
    const double e = prof.segment_end(j);
    const auto& sh = prof.segment(j);
    auto piece = [&](double b) {
      const double h = b - pos;
      if (h <= 0.0) return;
      const Terms terms = kappa_terms(sh, pos - s);
      const double I = term_integral(terms, beta, h);
      value -= z * I;
      if constexpr (Grad) {
        (*g)[1] -= zb * I - z * term_integral(terms, beta, h, 1);
        for (std::size_t k = 0; k < sh.param_count(); ++k) {
          (*g)[off[j] + k] -= z * term_integral(kappa_param_terms(sh, k, pos - s), beta, h);
        }
      }
      const double d = std::exp(-beta * h);
      if constexpr (Grad) zb = d * (zb - h * z);
      z *= d;
      pos = b;
    };
    for (; i < times.size() && times[i] <= e; ++i) {
      piece(times[i]);
      const double k = sh.value(times[i] - s);
      const double lam = p.lambda0 + k * z;
      if (!(lam > 0.0)) return kNegInf;
      value += std::log(lam);
      if constexpr (Grad) {
        (*g)[0] += 1.0 / lam;
        (*g)[1] += k * zb / lam;
        const auto vg = sh.value_gradient(times[i] - s);
        for (std::size_t q = 0; q < vg.size(); ++q) (*g)[off[j] + q] += vg[q] * z / lam;
        zb += 1.0;
      }
      z += beta;
    }
    piece(e);
  }
  return value;
}

template <bool Grad>
double sweep_infectivity(const EventSeq& ev, const HawkesParams& p, const CarryState& c0,
                         std::vector<double>* g) {
  const auto& prof = p.profile;
  const double beta = p.beta;
  const double T = prof.window_end();
  const double L = ev.length();
  const auto times = ev.times();
  std::vector<std::size_t> off;
  std::vector<double> zeta;  // d zfix / d segment params
  if constexpr (Grad) {
    off = param_offsets(p);
    g->assign(off.back(), 0.0);
    zeta.assign(off.back(), 0.0);
  }
  // carry contribution to the compensator
  const double eL = std::exp(-beta * L);
  double value = -p.lambda0 * L - c0.S * (-std::expm1(-beta * L)) / beta;
  if constexpr (Grad) {
    (*g)[0] = -L;
    (*g)[1] = -c0.S * (L * eL / beta + std::expm1(-beta * L) / (beta * beta));
  }
  double z = c0.S;
  double zb = 0.0;
  double pos = prof.window_start();
  for (double t : times) {
    const double h = t - pos;
    const double d = std::exp(-beta * h);
    if constexpr (Grad) {
      zb = d * (zb - h * z);
      for (std::size_t q = 2; q < zeta.size(); ++q) zeta[q] *= d;
    }
    z *= d;
    pos = t;
    const double lam = p.lambda0 + z;
    if (!(lam > 0.0)) return kNegInf;
    value += std::log(lam);
    const std::size_t j = prof.segment_index(t);
    const double s = prof.segment_start(j);
    const auto& sh = prof.segment(j);
    const double k = sh.value(t - s);
    const double tail = -std::expm1(-beta * (T - t));
    value -= k * tail;
    if constexpr (Grad) {
      (*g)[0] += 1.0 / lam;
      (*g)[1] += zb / lam - k * (T - t) * std::exp(-beta * (T - t));
      for (std::size_t q = 2; q < zeta.size(); ++q) (*g)[q] += zeta[q] / lam;
      const auto vg = sh.value_gradient(t - s);
      for (std::size_t q = 0; q < vg.size(); ++q) {
        (*g)[off[j] + q] -= vg[q] * tail;
        zeta[off[j] + q] += beta * vg[q];
      }
      zb += k;
    }
    z += beta * k;
  }
  return value;
}

template <bool Grad>
double sweep(const EventSeq& ev, const HawkesParams& p, const CarryState& c0, std::vector<double>* g) {
  return p.variant == Variant::VariableSusceptibility ? sweep_susceptibility<Grad>(ev, p, c0, g)
                                                      : sweep_infectivity<Grad>(ev, p, c0, g);
}

}  // namespace

CarryState CarryState::advanced(double t, double beta) const {
  if (t < boundary_time) throw DomainError("CarryState: cannot advance backwards");
  return {S * std::exp(-beta * (t - boundary_time)), t};
}

CarryState initial_carry(const EventSeq& events, const std::optional<CarryState>& initial) {
  if (!initial) return {0.0, events.window_start()};
  if (!(initial->S >= 0.0) || !std::isfinite(initial->S)) throw DomainError("CarryState: S must be finite and >= 0");
  if (initial->boundary_time > events.window_start()) {
    throw DomainError("CarryState: initial boundary_time after window_start");
  }
  return *initial;
}

double loglik(const EventSeq& events, const HawkesParams& params, const std::optional<CarryState>& initial) {
  check_params(params);
  check_window(events, params);
  const CarryState c0 = initial_carry(events, initial).advanced(events.window_start(), params.beta);
  return sweep<false>(events, params, c0, nullptr);
}

SegmentLoglik segment_loglik(const EventSeq& events, const HawkesParams& params, std::size_t j,
                             const CarryState& carry_in) {
  check_params(params);
  check_window(events, params);
  const auto& prof = params.profile;
  const double s = prof.segment_start(j);
  const double e = prof.segment_end(j);
  const auto& sh = prof.segment(j);
  const double beta = params.beta;
  const bool vs = params.variant == Variant::VariableSusceptibility;
  CarryState c = carry_in.advanced(s, beta);
  double z = c.S;
  double pos = s;
  double value = -params.lambda0 * (e - s);
  // compensator of the filtered term over [pos, b]
  auto piece = [&](double b) {
    const double h = b - pos;
    if (h <= 0.0) return;
    value -= vs ? z * term_integral(kappa_terms(sh, pos - s), beta, h) : z * (-std::expm1(-beta * h)) / beta;
    z *= std::exp(-beta * h);
    pos = b;
  };
  const auto times = events.times();
  auto it = std::upper_bound(times.begin(), times.end(), s);
  bool ok = true;
  for (; it != times.end() && *it <= e; ++it) {
    piece(*it);
    const double k = sh.value(*it - s);
    const double lam = params.lambda0 + (vs ? k * z : z);
    if (!(lam > 0.0)) ok = false;
    if (ok) value += std::log(lam);
    z += vs ? beta : beta * k;
  }
  piece(e);
  return {ok ? value : kNegInf, {z, e}};
}

double loglik_by_segments(const EventSeq& events, const HawkesParams& params,
                          const std::optional<CarryState>& initial) {
  CarryState c = initial_carry(events, initial);
  double total = 0.0;
  for (std::size_t j = 0; j < params.profile.segment_count(); ++j) {
    const auto r = segment_loglik(events, params, j, c);
    total += r.value;
    c = r.carry_out;
  }
  return total;
}

CarryState carry_at(const EventSeq& events, const HawkesParams& params, double t,
                    const std::optional<CarryState>& initial) {
  const auto& prof = params.profile;
  if (!(t >= prof.window_start() && t <= prof.window_end())) throw DomainError("carry_at: t outside window");
  CarryState c = initial_carry(events, initial).advanced(events.window_start(), params.beta);
  double z = c.S;
  double pos = events.window_start();
  for (double ti : events.times()) {
    if (ti > t) break;
    z = z * std::exp(-params.beta * (ti - pos));
    pos = ti;
    z += params.variant == Variant::VariableSusceptibility ? params.beta : params.beta * prof.kappa(ti);
  }
  return {z * std::exp(-params.beta * (t - pos)), t};
}

std::string ParamId::name(const HawkesParams& params) const {
  switch (kind) {
    case ParamKind::Lambda0:
      return "lambda0";
    case ParamKind::Beta:
      return "beta";
    case ParamKind::Segment:
      return fmt::format("seg{}.{}", segment, params.profile.segment(segment).param_names().at(index));
    case ParamKind::ChangePoint:
      return fmt::format("gamma{}", segment + 1);
  }
  return "?";
}

std::vector<ParamId> smooth_param_ids(const HawkesParams& params) {
  std::vector<ParamId> ids{ParamId::lambda0(), ParamId::beta()};
  for (std::size_t j = 0; j < params.profile.segment_count(); ++j) {
    for (std::size_t k = 0; k < params.profile.segment(j).param_count(); ++k) {
      ids.push_back(ParamId::segment_param(j, k));
    }
  }
  return ids;
}

LoglikGrad loglik_grad(const EventSeq& events, const HawkesParams& params, std::span<const ParamId> which,
                       const std::optional<CarryState>& initial) {
  check_params(params);
  check_window(events, params);
  const auto all = smooth_param_ids(params);
  std::vector<ParamId> ids(which.begin(), which.end());
  if (ids.empty()) ids = all;
  for (const auto& id : ids) {
    if (id.kind == ParamKind::ChangePoint) {
      throw UnsupportedParameter("loglik_grad: change points are not smooth parameters");
    }
  }
  const CarryState c0 = initial_carry(events, initial).advanced(events.window_start(), params.beta);
  std::vector<double> g;
  LoglikGrad out;
  out.value = sweep<true>(events, params, c0, &g);
  const auto off = param_offsets(params);
  for (const auto& id : ids) {
    switch (id.kind) {
      case ParamKind::Lambda0:
        out.grad.push_back(g[0]);
        break;
      case ParamKind::Beta:
        out.grad.push_back(g[1]);
        break;
      case ParamKind::Segment:
        if (id.segment >= params.profile.segment_count() ||
            id.index >= params.profile.segment(id.segment).param_count()) {
          throw UnsupportedParameter("loglik_grad: segment parameter out of range");
        }
        out.grad.push_back(g[off[id.segment] + id.index]);
        break;
      case ParamKind::ChangePoint:
        break;
    }
  }
  return out;
}

std::vector<ProfilePoint> profile_changepoint(const EventSeq& events, const HawkesParams& params,
                                              std::span<const double> grid, std::size_t index, double min_gap,
                                              std::optional<int> threads, const std::optional<CarryState>& initial) {
  const auto& prof = params.profile;
  const auto cps = prof.change_points();
  if (index >= cps.size()) throw DomainError("profile_changepoint: change-point index out of range");
  const double lo = (index == 0 ? prof.window_start() : cps[index - 1]) + min_gap;
  const double hi = (index + 1 == cps.size() ? prof.window_end() : cps[index + 1]) - min_gap;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0 && !(grid[i] > grid[i - 1])) throw DomainError("profile_changepoint: grid must be strictly increasing");
    if (!(grid[i] > lo && grid[i] < hi) && !(min_gap > 0.0 && (grid[i] == lo || grid[i] == hi))) {
      throw DomainError(fmt::format("profile_changepoint: grid value {} outside admissible range ({}, {})",
                                    grid[i], lo, hi));
    }
  }
  std::vector<ProfilePoint> out(grid.size());
  const std::vector<double> base(cps.begin(), cps.end());
  parallel_for(grid.size(), resolve_threads(threads), [&](std::size_t i) {
    auto c = base;
    c[index] = grid[i];
    HawkesParams q = params;
    q.profile = prof.with_change_points(std::move(c));
    out[i] = {grid[i], loglik(events, q, initial)};
  });
  return out;
}

}  // namespace hawkes
