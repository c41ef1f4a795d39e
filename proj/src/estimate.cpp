#include "hawkes/estimate.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "hawkes/numerics.hpp"
#include "hawkes/parallel.hpp"

namespace hawkes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Prior on kappa levels when supercritical values are admissible.
const LogNormalPrior kSupercriticalLevelPrior{std::log(0.5), 1.0};

// Log-normal priors are normal densities of log x: the MAP is taken in the
// log coordinates the prior is stated in.
double log_scale_density(const LogNormalPrior& p, double x) { return p.log_density(x) + std::log(x); }
double dlog_scale_density(const LogNormalPrior& p, double x) { return p.dlog_density(x) + 1.0 / x; }

double sigmoid(double y) { return y >= 0.0 ? 1.0 / (1.0 + std::exp(-y)) : std::exp(y) / (1.0 + std::exp(y)); }

std::vector<double> linspace(double a, double b, std::size_t n) {
  if (n == 1) return {0.5 * (a + b)};
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  g.back() = b;
  return g;
}

// Offsets of each segment's parameters in smooth_param_ids order.
std::vector<std::size_t> segment_offsets(const ProductivityProfile& prof) {
  std::vector<std::size_t> off;
  std::size_t o = 2;
  for (const auto& s : prof.segments()) {
    off.push_back(o);
    o += s.param_count();
  }
  return off;
}

bool eliminated(const ProductivityProfile& prof, std::size_t j, std::size_t k) {
  return j > 0 && prof.continuity_flags()[j - 1] && k == prof.segment(j).intercept_index();
}

}  // namespace

// ---------------------------------------------------------------- shapes

ModelShape ModelShape::parse(std::string_view name) {
  ModelShape s;
  std::optional<std::size_t> k;
  const auto pos = name.find("_CP_");
  std::string_view kinds = name;
  if (pos != std::string_view::npos) {
    const auto head = name.substr(0, pos);
    if (head.empty() || !std::all_of(head.begin(), head.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      throw DomainError(fmt::format("model shape '{}': expected '<K>_CP_<kinds>'", name));
    }
    k = std::stoul(std::string(head));
    kinds = name.substr(pos + 4);
  }
  if (kinds.empty()) throw DomainError(fmt::format("model shape '{}': no segment kinds", name));
  for (char c : kinds) {
    if (c != 'C' && c != 'R' && c != 'E') {
      throw DomainError(fmt::format("model shape '{}': unknown segment kind '{}'", name, c));
    }
  }
  s.kinds = std::string(kinds);
  if (k && *k != s.kinds.size() - 1) {
    throw DomainError(fmt::format("model shape '{}': {} change points need {} segment kinds", name, *k, *k + 1));
  }
  return s;
}

std::string ModelShape::name() const {
  const auto k = change_point_count();
  return k == 0 ? kinds : fmt::format("{}_CP_{}", k, kinds);
}

std::vector<bool> ModelShape::resolved_continuity() const {
  const auto k = change_point_count();
  if (!continuity.empty()) {
    if (continuity.size() != k) throw DomainError("model shape: continuity needs one flag per change point");
    return continuity;
  }
  std::vector<bool> out(k);
  for (std::size_t b = 0; b < k; ++b) out[b] = kinds[b] != 'C' || kinds[b + 1] != 'C';
  return out;
}

// ---------------------------------------------------------------- packer

ParamPacker::ParamPacker(const HawkesParams& layout, bool allow_supercritical, std::span<const ParamId> held)
    : layout_(layout), allow_supercritical_(allow_supercritical) {
  auto is_held = [&](const ParamId& id) { return std::find(held.begin(), held.end(), id) != held.end(); };
  for (const auto& id : {ParamId::lambda0(), ParamId::beta()}) {
    if (!is_held(id)) free_.push_back(id);
  }
  const auto& prof = layout_.profile;
  for (std::size_t j = 0; j < prof.segment_count(); ++j) {
    for (std::size_t k = 0; k < prof.segment(j).param_count(); ++k) {
      const auto id = ParamId::segment_param(j, k);
      if (!eliminated(prof, j, k) && !is_held(id)) free_.push_back(id);
    }
  }
}

std::vector<std::string> ParamPacker::names() const {
  std::vector<std::string> out;
  for (const auto& id : free_) out.push_back(id.name(layout_));
  return out;
}

bool ParamPacker::kappa_valued(const ParamId& id) const {
  if (id.kind != ParamKind::Segment) return false;
  switch (layout_.profile.segment(id.segment).kind()) {
    case SegmentKind::Constant:
      return true;
    case SegmentKind::Ramp:
      return id.index == 0;
    case SegmentKind::Exponential:
      return id.index != 2;
  }
  return false;
}

ParamPacker::Transform ParamPacker::transform(const ParamId& id) const {
  if (id.kind != ParamKind::Segment) return Transform::Log;
  if (kappa_valued(id)) return allow_supercritical_ ? Transform::Log : Transform::Logit;
  const auto kind = layout_.profile.segment(id.segment).kind();
  return kind == SegmentKind::Exponential ? Transform::Log : Transform::Identity;
}

std::vector<double> ParamPacker::natural(const HawkesParams& params) const {
  std::vector<double> x;
  x.reserve(free_.size());
  for (const auto& id : free_) {
    switch (id.kind) {
      case ParamKind::Lambda0:
        x.push_back(params.lambda0);
        break;
      case ParamKind::Beta:
        x.push_back(params.beta);
        break;
      default:
        x.push_back(params.profile.segment(id.segment).params().at(id.index));
    }
  }
  return x;
}

HawkesParams ParamPacker::from_natural(std::span<const double> x) const {
  if (x.size() != free_.size()) throw DomainError("ParamPacker: wrong coordinate count");
  HawkesParams p = layout_;
  const auto& prof = layout_.profile;
  std::vector<std::vector<double>> seg(prof.segment_count());
  for (std::size_t j = 0; j < prof.segment_count(); ++j) seg[j] = prof.segment(j).params();
  for (std::size_t i = 0; i < free_.size(); ++i) {
    const auto& id = free_[i];
    if (id.kind == ParamKind::Lambda0) {
      p.lambda0 = x[i];
    } else if (id.kind == ParamKind::Beta) {
      p.beta = x[i];
    } else {
      seg[id.segment][id.index] = x[i];
    }
  }
  std::vector<SegmentShape> shapes;
  for (std::size_t j = 0; j < prof.segment_count(); ++j) {
    shapes.push_back(SegmentShape::from_params(prof.segment(j).kind(), seg[j]));
  }
  p.profile = prof.with_segments(std::move(shapes));
  return p;
}

std::vector<double> ParamPacker::pack(const HawkesParams& params) const {
  auto x = natural(params);
  for (std::size_t i = 0; i < x.size(); ++i) {
    switch (transform(free_[i])) {
      case Transform::Log:
        x[i] = std::log(x[i]);
        break;
      case Transform::Logit:
        x[i] = std::log(x[i]) - std::log1p(-x[i]);
        break;
      case Transform::Identity:
        break;
    }
  }
  return x;
}

std::vector<double> ParamPacker::jacobian(std::span<const double> y) const {
  std::vector<double> d(y.size(), 1.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    switch (transform(free_[i])) {
      case Transform::Log:
        d[i] = std::exp(y[i]);
        break;
      case Transform::Logit: {
        const double s = sigmoid(y[i]);
        d[i] = s * (1.0 - s);
        break;
      }
      case Transform::Identity:
        break;
    }
  }
  return d;
}

HawkesParams ParamPacker::unpack(std::span<const double> y) const {
  std::vector<double> x(y.begin(), y.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    switch (transform(free_[i])) {
      case Transform::Log:
        x[i] = std::exp(x[i]);
        break;
      case Transform::Logit:
        x[i] = sigmoid(x[i]);
        break;
      case Transform::Identity:
        break;
    }
  }
  return from_natural(x);
}

bool ParamPacker::admissible(const HawkesParams& params) const {
  if (!(params.lambda0 > 0.0) || !(params.beta > 0.0) || !std::isfinite(params.lambda0) ||
      !std::isfinite(params.beta)) {
    return false;
  }
  const auto& prof = params.profile;
  for (std::size_t j = 0; j < prof.segment_count(); ++j) {
    const auto& s = prof.segment(j);
    const double len = prof.segment_length(j);
    if (!(s.min_over(0.0, len) >= 0.0)) return false;
    if (!allow_supercritical_ && !(s.max_over(0.0, len) < 1.0)) return false;
  }
  return true;
}

double ParamPacker::log_prior(const HawkesParams& params, const PriorSpec& priors) const {
  const auto x = natural(params);
  double lp = 0.0;
  for (std::size_t i = 0; i < free_.size(); ++i) {
    const auto& id = free_[i];
    if (id.kind == ParamKind::Lambda0) {
      lp += log_scale_density(priors.lambda0_prior, x[i]);
    } else if (id.kind == ParamKind::Beta) {
      lp += log_scale_density(priors.beta_prior, x[i]);
    } else if (kappa_valued(id)) {
      lp += allow_supercritical_ ? log_scale_density(kSupercriticalLevelPrior, x[i])
                                 : priors.kappa_level_prior.log_density(x[i]);
    } else if (layout_.profile.segment(id.segment).kind() == SegmentKind::Ramp) {
      lp += priors.slope_prior.log_density(x[i]);
    } else {
      // normal truncated to rate > 0
      const auto& r = priors.rate_prior;
      const double mass = 0.5 * std::erfc(-r.mu / (r.sigma * std::numbers::sqrt2));
      lp += x[i] > 0.0 ? r.log_density(x[i]) - std::log(mass) : kNegInf;
    }
  }
  return lp;
}

double ParamPacker::objective(const EventSeq& events, const HawkesParams& params, const PriorSpec& priors,
                              std::vector<double>* grad_natural) const {
  if (!admissible(params)) return kNegInf;
  const double lp = log_prior(params, priors);
  if (!std::isfinite(lp)) return kNegInf;
  if (grad_natural == nullptr) return loglik(events, params) + lp;

  const auto full = loglik_grad(events, params);
  if (!std::isfinite(full.value)) return kNegInf;
  auto g = full.grad;
  const auto& prof = params.profile;
  const auto off = segment_offsets(prof);
  // eliminated intercept of segment j equals segment j-1 at its end; walk
  // backwards so chained eliminations accumulate
  for (std::size_t j = prof.segment_count(); j-- > 1;) {
    if (!prof.continuity_flags()[j - 1]) continue;
    const double gj = g[off[j] + prof.segment(j).intercept_index()];
    const auto dv = prof.segment(j - 1).value_gradient(prof.segment_length(j - 1));
    for (std::size_t k = 0; k < dv.size(); ++k) g[off[j - 1] + k] += gj * dv[k];
  }
  const auto x = natural(params);
  grad_natural->assign(free_.size(), 0.0);
  for (std::size_t i = 0; i < free_.size(); ++i) {
    const auto& id = free_[i];
    double gi = 0.0;
    double dp = 0.0;
    if (id.kind == ParamKind::Lambda0) {
      gi = g[0];
      dp = dlog_scale_density(priors.lambda0_prior, x[i]);
    } else if (id.kind == ParamKind::Beta) {
      gi = g[1];
      dp = dlog_scale_density(priors.beta_prior, x[i]);
    } else {
      gi = g[off[id.segment] + id.index];
      if (kappa_valued(id)) {
        dp = allow_supercritical_ ? dlog_scale_density(kSupercriticalLevelPrior, x[i])
                                  : priors.kappa_level_prior.dlog_density(x[i]);
      } else if (prof.segment(id.segment).kind() == SegmentKind::Ramp) {
        dp = priors.slope_prior.dlog_density(x[i]);
      } else {
        dp = priors.rate_prior.dlog_density(x[i]);
      }
    }
    (*grad_natural)[i] = gi + dp;
  }
  return full.value + lp;
}

// ---------------------------------------------------------------- MAP

namespace {

// Symmetrised central-difference Hessian of the objective in natural
// coordinates; empty when a probe leaves the admissible set.
std::vector<double> laplace_sd(const ParamPacker& packer, const EventSeq& events, const HawkesParams& at,
                               const PriorSpec& priors) {
  const auto x = packer.natural(at);
  const std::size_t n = x.size();
  Eigen::MatrixXd H(n, n);
  std::vector<double> gp, gm;
  for (std::size_t i = 0; i < n; ++i) {
    const double h = 1e-5 * std::max(std::abs(x[i]), 1e-2);
    auto xp = x;
    auto xm = x;
    xp[i] += h;
    xm[i] -= h;
    double fp = kNegInf;
    double fm = kNegInf;
    try {
      fp = packer.objective(events, packer.from_natural(xp), priors, &gp);
      fm = packer.objective(events, packer.from_natural(xm), priors, &gm);
    } catch (const std::exception&) {
      return {};
    }
    if (!std::isfinite(fp) || !std::isfinite(fm)) return {};
    for (std::size_t k = 0; k < n; ++k) H(k, i) = (gp[k] - gm[k]) / (2.0 * h);
  }
  const Eigen::MatrixXd A = -0.5 * (H + H.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) return {};
  const Eigen::MatrixXd cov = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                              eig.eigenvectors().transpose();
  std::vector<double> sd(n);
  for (std::size_t i = 0; i < n; ++i) sd[i] = std::sqrt(cov(i, i));
  return sd;
}

}  // namespace

MapResult map_step(const EventSeq& events, const HawkesParams& params, const PriorSpec& priors,
                   const MapOptions& opt) {
  const ParamPacker packer(params, opt.allow_supercritical, opt.held);
  const double start = packer.objective(events, params, priors);
  if (!std::isfinite(start)) {
    throw DomainError("map_step: objective is not finite at the starting point");
  }
  std::vector<double> gnat;
  auto f = [&](std::span<const double> y, std::span<double> g) -> double {
    HawkesParams p;
    try {
      p = packer.unpack(y);
    } catch (const std::exception&) {
      return std::numeric_limits<double>::infinity();
    }
    const double v = packer.objective(events, p, priors, &gnat);
    if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
    const auto jac = packer.jacobian(y);
    for (std::size_t i = 0; i < y.size(); ++i) g[i] = -gnat[i] * jac[i];
    return -v;
  };
  numerics::LbfgsOptions lo;
  lo.max_iterations = opt.max_iterations;
  const auto r = numerics::minimize_lbfgs(f, packer.pack(params), lo);

  MapResult out;
  out.params = packer.unpack(r.x);
  out.objective = -r.value;
  if (out.objective < start) {
    // the optimiser only accepts descent steps; guard against round-off
    out.params = params;
    out.objective = start;
  }
  out.loglik = loglik(events, out.params);
  out.converged = r.converged;
  out.iterations = r.iterations;
  out.names = packer.names();
  if (opt.laplace) out.laplace_sd = laplace_sd(packer, events, out.params, priors);
  return out;
}

// ---------------------------------------------------------------- CoM

PosteriorGrid normalise_grid(std::vector<double> candidates, std::vector<double> log_posterior) {
  if (candidates.empty() || candidates.size() != log_posterior.size()) {
    throw DomainError("posterior grid: candidates and values must be nonempty and aligned");
  }
  const std::size_t n = candidates.size();
  std::vector<double> lw(n);
  for (std::size_t i = 0; i < n; ++i) {
    double w = 1.0;
    if (n > 1) {
      if (i == 0) {
        w = candidates[1] - candidates[0];
      } else if (i + 1 == n) {
        w = candidates[n - 1] - candidates[n - 2];
      } else {
        w = 0.5 * (candidates[i + 1] - candidates[i - 1]);
      }
    }
    lw[i] = log_posterior[i] + std::log(w);
  }
  const double z = numerics::log_sum_exp(lw);
  if (!std::isfinite(z)) {
    throw DomainError("posterior grid: every weight underflows (grid too far from the posterior support)");
  }
  PosteriorGrid g;
  g.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.weights[i] = std::exp(lw[i] - z);
  g.candidates = std::move(candidates);
  g.log_posterior = std::move(log_posterior);
  return g;
}

double centre_of_mass(const PosteriorGrid& grid) {
  double c = 0.0;
  double w = 0.0;
  for (std::size_t i = 0; i < grid.candidates.size(); ++i) {
    c += grid.candidates[i] * grid.weights[i];
    w += grid.weights[i];
  }
  const double com = c / w;
  return std::clamp(com, grid.candidates.front(), grid.candidates.back());
}

namespace {

// Conditional log-posterior of change point `index` at each candidate, up to
// a constant: the uniform change-point prior and the smooth-parameter prior
// do not vary along the grid.
std::vector<double> conditional_log_posterior(const EventSeq& events, const HawkesParams& params,
                                              const ParamPacker& packer, std::vector<double> cps,
                                              std::size_t index, std::span<const double> candidates,
                                              int threads) {
  std::vector<double> out(candidates.size(), kNegInf);
  parallel_for(candidates.size(), threads, [&](std::size_t i) {
    auto c = cps;
    c[index] = candidates[i];
    HawkesParams q = params;
    try {
      q.profile = params.profile.with_change_points(std::move(c));
    } catch (const DomainError&) {
      return;
    }
    if (!packer.admissible(q)) return;
    const double v = loglik(events, q);
    out[i] = std::isnan(v) ? kNegInf : v;
  });
  return out;
}

}  // namespace

ComResult com_step(const EventSeq& events, const HawkesParams& params, const PriorSpec& priors,
                   const GridSpec& spec) {
  if (spec.points < 1) throw DomainError("com_step: grid needs at least one point");
  const auto& prof = params.profile;
  std::vector<double> cps(prof.change_points().begin(), prof.change_points().end());
  const std::size_t m = cps.size();
  const double gap = spec.min_gap ? *spec.min_gap : priors.resolved_min_gap(params.beta);
  const int threads = resolve_threads(spec.threads);
  const ParamPacker packer(params, spec.allow_supercritical);

  ComResult res;
  HawkesParams cur = params;
  for (std::size_t k = 0; k < m; ++k) {
    const double lo = (k == 0 ? prof.window_start() : cps[k - 1]) + gap;
    const double hi = (k + 1 == m ? prof.window_end() : cps[k + 1]) - gap;
    if (!(lo <= hi)) {
      throw DomainError(fmt::format("com_step: no admissible range for change point {} with min_gap {}", k + 1, gap));
    }
    auto cand = linspace(lo, hi, spec.points);
    auto lp = conditional_log_posterior(events, cur, packer, cps, k, cand, threads);
    const double step = cand.size() > 1 ? cand[1] - cand[0] : 0.0;
    auto grid = normalise_grid(cand, lp);
    if (spec.refine && cand.size() > 1) {
      const double c0 = centre_of_mass(grid);
      auto fine = linspace(std::max(lo, c0 - 5.0 * step), std::min(hi, c0 + 5.0 * step), spec.points);
      const auto flp = conditional_log_posterior(events, cur, packer, cps, k, fine, threads);
      std::vector<std::pair<double, double>> all;
      for (std::size_t i = 0; i < cand.size(); ++i) all.emplace_back(cand[i], lp[i]);
      for (std::size_t i = 0; i < fine.size(); ++i) all.emplace_back(fine[i], flp[i]);
      std::sort(all.begin(), all.end());
      // drop coincident candidates, keeping the first
      std::vector<double> mc, ml;
      for (const auto& [t, v] : all) {
        if (!mc.empty() && t - mc.back() <= 1e-12 * std::max(1.0, std::abs(t))) continue;
        mc.push_back(t);
        ml.push_back(v);
      }
      grid = normalise_grid(std::move(mc), std::move(ml));
    }
    const double com = centre_of_mass(grid);
    const auto best = std::max_element(grid.log_posterior.begin(), grid.log_posterior.end());
    res.cp_map.push_back(grid.candidates[static_cast<std::size_t>(best - grid.log_posterior.begin())]);
    res.cp_com.push_back(com);
    res.grid_step.push_back(step);
    res.grids.push_back(std::move(grid));
    cps[k] = spec.move_to_argmax ? res.cp_map.back() : com;
    cur.profile = prof.with_change_points(cps);
  }
  return res;
}

// ---------------------------------------------------------------- fit

double initial_beta(const EventSeq& events) {
  const std::size_t n = events.size();
  if (n < 2) return 1.0;
  const double b = static_cast<double>(n - 1) / (events[n - 1] - events[0]);
  return std::isfinite(b) && b > 0.0 ? b : 1.0;
}

double default_min_gap(const EventSeq& events, const PriorSpec& priors) {
  return priors.resolved_min_gap(initial_beta(events));
}

HawkesParams initial_params(const EventSeq& events, const ModelShape& shape, const PriorSpec& priors,
                            Variant variant) {
  const double T = events.length();
  const std::size_t n = events.size();
  const std::size_t K = shape.change_point_count();
  HawkesParams p;
  p.variant = variant;
  p.lambda0 = n > 0 ? static_cast<double>(n) / T * 0.5 : 0.5 / T;
  p.beta = initial_beta(events);

  const double gap = priors.resolved_min_gap(p.beta);
  const double ws = events.window_start();
  const double we = events.window_end();
  if (K > 0 && !(ws + static_cast<double>(K + 1) * gap < we)) {
    throw DomainError(fmt::format("initial_params: window of length {} cannot hold {} change points with min_gap {}",
                                  T, K, gap));
  }
  std::vector<double> cps(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double q = static_cast<double>(k + 1) / static_cast<double>(K + 1);
    double c = ws + q * T;
    if (n >= 2) {
      const double pos = q * static_cast<double>(n - 1);
      const auto i = static_cast<std::size_t>(pos);
      const double frac = pos - static_cast<double>(i);
      c = i + 1 < n ? events[i] + frac * (events[i + 1] - events[i]) : events[n - 1];
    }
    const double lo = (k == 0 ? ws : cps[k - 1]) + gap;
    const double hi = we - static_cast<double>(K - k) * gap;
    cps[k] = std::clamp(c, lo, hi);
  }

  std::vector<SegmentShape> segs;
  for (std::size_t j = 0; j < shape.kinds.size(); ++j) {
    const double len = (j == K ? we : cps[j]) - (j == 0 ? ws : cps[j - 1]);
    switch (segment_kind_from_char(shape.kinds[j])) {
      case SegmentKind::Constant:
        segs.push_back(SegmentShape::constant(0.5));
        break;
      case SegmentKind::Ramp:
        segs.push_back(SegmentShape::ramp(0.5, 0.0));
        break;
      case SegmentKind::Exponential:
        segs.push_back(SegmentShape::exponential(0.5, 0.5, 5.0 / len));
        break;
    }
  }
  p.profile = ProductivityProfile(ws, we, cps, segs, shape.resolved_continuity()).with_continuity_applied();
  return p;
}

namespace {

double max_relative_change(const std::vector<double>& a, const std::vector<double>& b) {
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(a[i])));
  return r;
}

// No events: MAP of lambda0 alone with kappa and beta at their inputs.
FitResult fit_empty(const EventSeq& events, const ModelShape& shape, const PriorSpec& priors, HawkesParams start) {
  auto f = [&](std::span<const double> y, std::span<double> g) {
    HawkesParams p = start;
    p.lambda0 = std::exp(y[0]);
    const auto lg = loglik_grad(events, p, std::vector<ParamId>{ParamId::lambda0()});
    const double v = lg.value + log_scale_density(priors.lambda0_prior, p.lambda0);
    g[0] = -(lg.grad[0] + dlog_scale_density(priors.lambda0_prior, p.lambda0)) * p.lambda0;
    return -v;
  };
  const auto r = numerics::minimize_lbfgs(f, {std::log(start.lambda0)});
  FitResult out;
  out.shape = shape;
  out.theta_hat = start;
  out.theta_hat.lambda0 = std::exp(r.x[0]);
  out.loglik = loglik(events, out.theta_hat);
  out.objective = -r.value;
  out.converged = r.converged;
  out.iterations = 1;
  out.cp_com.assign(start.profile.change_points().begin(), start.profile.change_points().end());
  out.cp_map = out.cp_com;
  out.param_names = {"lambda0"};
  out.trace.push_back({out.loglik, out.objective, out.theta_hat});
  out.warnings.push_back("no events in the window: only lambda0 was fitted");
  return out;
}

}  // namespace

FitResult fit(const EventSeq& events, const ModelShape& shape, const PriorSpec& priors, const FitOptions& opt) {
  if (shape.kinds.empty()) throw DomainError("fit: empty model shape");
  const auto bad = priors.violations();
  if (!bad.empty()) throw DomainError("fit: invalid priors: " + bad.front());
  const std::size_t K = shape.change_point_count();

  HawkesParams cur = opt.warm_start ? *opt.warm_start : initial_params(events, shape, priors, opt.variant);
  if (opt.warm_start) {
    const auto& prof = cur.profile;
    bool ok = prof.segment_count() == shape.kinds.size();
    for (std::size_t j = 0; ok && j < prof.segment_count(); ++j) {
      ok = segment_kind_char(prof.segment(j).kind()) == shape.kinds[j];
    }
    if (!ok) throw DomainError(fmt::format("fit: warm start does not match shape {}", shape.name()));
    cur.variant = opt.variant;
  }
  if (opt.fixed_change_points) {
    if (opt.fixed_change_points->size() != K) {
      throw DomainError(fmt::format("fit: shape {} needs {} fixed change points, got {}", shape.name(), K,
                                    opt.fixed_change_points->size()));
    }
    cur.profile = cur.profile.with_change_points(*opt.fixed_change_points);
  }
  if (events.empty()) return fit_empty(events, shape, priors, cur);

  FitResult out;
  out.shape = shape;
  if (opt.allow_supercritical && K > 0 && !opt.fixed_change_points) {
    out.warnings.push_back("supercritical levels with unknown change points: the fit is weakly identified");
  }
  MapOptions mo;
  mo.max_iterations = opt.map_iterations;
  mo.allow_supercritical = opt.allow_supercritical;
  mo.laplace = false;
  mo.held = opt.held;
  GridSpec gs = opt.grid;
  gs.allow_supercritical = opt.allow_supercritical;
  if (!gs.min_gap) gs.min_gap = default_min_gap(events, priors);

  const bool move_cps = K > 0 && !opt.fixed_change_points;
  std::optional<std::vector<double>> prev_theta;
  double prev_objective = 0.0;
  std::vector<double> prev_cps(cur.profile.change_points().begin(), cur.profile.change_points().end());
  std::vector<double> step(K, 0.0);
  MapResult map;
  int outer = 0;
  for (;;) {
    map = map_step(events, cur, priors, mo);
    ++outer;
    out.trace.push_back({map.loglik, map.objective, map.params});
    const ParamPacker packer(map.params, opt.allow_supercritical, opt.held);
    const auto theta = packer.natural(map.params);
    if (!move_cps) {
      out.converged = map.converged;
      break;
    }
    // change points here are the previous CoM; compare with the one before
    if (prev_theta) {
      const auto now = map.params.profile.change_points();
      bool cps_settled = true;
      for (std::size_t k = 0; k < K; ++k) cps_settled = cps_settled && std::abs(now[k] - prev_cps[k]) < step[k];
      // objective stability makes a refit from the result a fixed point
      const double dobj = std::abs(map.objective - prev_objective) / std::max(1.0, std::abs(map.objective));
      if (cps_settled && max_relative_change(*prev_theta, theta) < 1e-6 && dobj < 1e-10) {
        out.converged = true;
        break;
      }
    }
    if (outer >= opt.max_outer) break;
    prev_theta = theta;
    prev_objective = map.objective;
    prev_cps.assign(map.params.profile.change_points().begin(), map.params.profile.change_points().end());
    const auto com = com_step(events, map.params, priors, gs);
    out.cp_map = com.cp_map;
    out.posterior_grid = com.grids;
    step = com.grid_step;
    cur = map.params;
    try {
      cur.profile = map.params.profile.with_change_points(gs.move_to_argmax ? com.cp_map : com.cp_com);
    } catch (const DomainError&) {
      cur.profile = map.params.profile.with_change_points(com.cp_map);
    }
    if (!ParamPacker(cur, opt.allow_supercritical).admissible(cur)) {
      cur.profile = map.params.profile.with_change_points(com.cp_map);
    }
  }
  out.iterations = outer;
  out.theta_hat = map.params;
  out.loglik = map.loglik;
  out.objective = map.objective;
  out.cp_com.assign(map.params.profile.change_points().begin(), map.params.profile.change_points().end());
  if (!move_cps) out.cp_map = out.cp_com;
  const ParamPacker packer(map.params, opt.allow_supercritical, opt.held);
  out.param_names = packer.names();
  if (opt.laplace) out.laplace_sd = laplace_sd(packer, events, map.params, priors);
  return out;
}

}  // namespace hawkes
