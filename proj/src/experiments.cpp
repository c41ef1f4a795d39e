#include "hawkes/experiments.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "hawkes/evidence.hpp"
#include "hawkes/likelihood.hpp"
#include "hawkes/parallel.hpp"
#include "hawkes/rng.hpp"
#include "hawkes/simulate.hpp"

namespace hawkes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // unbiased
  double m4 = 0.0;   // central fourth moment
};

// Index-ordered sums, so results never depend on scheduling.
Moments moments(const std::vector<double>& x) {
  Moments m;
  const double n = static_cast<double>(x.size());
  if (x.empty()) return m;
  for (double v : x) m.mean += v;
  m.mean /= n;
  double s2 = 0.0;
  double s4 = 0.0;
  for (double v : x) {
    const double d = v - m.mean;
    s2 += d * d;
    s4 += d * d * d * d;
  }
  m.var = x.size() > 1 ? s2 / (n - 1.0) : 0.0;
  m.m4 = s4 / n;
  return m;
}

double tau_post(double beta, double kappa2) { return 1.0 / (beta * (1.0 - kappa2)); }

HawkesParams step_on(double lambda0, double beta, double k1, double k2, double t_star, double end) {
  return {lambda0, beta,
          ProductivityProfile(0.0, end, {t_star}, {SegmentShape::constant(k1), SegmentShape::constant(k2)})};
}

double max_of(std::span<const double> v) { return *std::max_element(v.begin(), v.end()); }

// Cell centres of n equal cells on (a, b).
std::vector<double> cell_centres(double a, double b, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = a + (b - a) * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  return g;
}

double skewness(const std::vector<double>& x, const std::vector<double>& w) {
  double s = 0.0;
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += w[i];
    m += w[i] * x[i];
  }
  m /= s;
  double m2 = 0.0;
  double m3 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - m;
    m2 += w[i] * d * d;
    m3 += w[i] * d * d * d;
  }
  m2 /= s;
  m3 /= s;
  return m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
}

}  // namespace

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::HighToLow:
      return "high_to_low";
    case Scenario::LowToHigh:
      return "low_to_high";
    case Scenario::RampUp:
      return "ramp_up";
    case Scenario::RampDown:
      return "ramp_down";
  }
  return "?";
}

Scenario scenario_from_string(std::string_view s) {
  for (auto c : {Scenario::HighToLow, Scenario::LowToHigh, Scenario::RampUp, Scenario::RampDown}) {
    if (to_string(c) == s) return c;
  }
  throw DomainError(fmt::format("unknown scenario '{}'", s));
}

bool is_step(Scenario s) { return s == Scenario::HighToLow || s == Scenario::LowToHigh; }

std::pair<double, double> step_levels(Scenario s) {
  if (s == Scenario::HighToLow) return {0.75, 0.25};
  if (s == Scenario::LowToHigh) return {0.25, 0.75};
  throw DomainError(fmt::format("scenario {} is not a step", to_string(s)));
}

HawkesParams scenario_params(Scenario s, double lambda0, double beta, double t_star, double horizon) {
  if (is_step(s)) {
    const auto [k1, k2] = step_levels(s);
    return step_on(lambda0, beta, k1, k2, t_star, horizon);
  }
  const double k0 = s == Scenario::RampUp ? 0.25 : 0.75;
  const double slope = s == Scenario::RampUp ? 0.005 : -0.005;
  return {lambda0, beta,
          ProductivityProfile(0.0, horizon, {t_star}, {SegmentShape::constant(k0), SegmentShape::ramp(k0, slope)},
                              {true})};
}

std::vector<std::string> StudySpec::violations() const {
  std::vector<std::string> v;
  if (replicates < 1) v.emplace_back("replicates must be >= 1");
  if (lambda0_set.empty()) v.emplace_back("lambda0_set must be nonempty");
  for (double l : lambda0_set) {
    if (!(l > 0.0)) v.emplace_back("lambda0_set entries must be > 0");
  }
  for (double d : delta_grid_in_tau) {
    if (!(d > 0.0)) v.emplace_back("delta_grid_in_tau entries must be > 0");
  }
  if (!(beta > 0.0)) v.emplace_back("beta must be > 0");
  if (!(t_star > 0.0 && t_star < horizon)) v.emplace_back("t_star must lie inside (0, horizon)");
  if (grid_points < 2) v.emplace_back("grid_points must be >= 2");
  return v;
}

namespace {

void require_spec(const StudySpec& spec) {
  const auto v = spec.violations();
  if (!v.empty()) throw DomainError("study spec: " + v.front());
}

}  // namespace

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

// ---------------------------------------------------------------- info

InfoStudyResult run_info_study(const StudySpec& spec) {
  require_spec(spec);
  if (spec.delta_grid_in_tau.empty()) throw DomainError("info study: empty delta grid");
  const auto [k1, k2] = step_levels(spec.scenario);
  const double tau2 = tau_post(spec.beta, k2);
  const double t_star = spec.t_star;
  const double sim_end = t_star + max_of(spec.delta_grid_in_tau) * tau2;
  const std::size_t R = spec.replicates;
  const std::size_t D = spec.delta_grid_in_tau.size();
  const int threads = resolve_threads(spec.threads);
  const std::vector<ParamId> which{ParamId::segment_param(1, 0)};

  InfoStudyResult out;
  out.spec = spec;
  for (std::size_t li = 0; li < spec.lambda0_set.size(); ++li) {
    const double lambda0 = spec.lambda0_set[li];
    SimConfig cfg;
    cfg.params = step_on(lambda0, spec.beta, k1, k2, t_star, sim_end);
    cfg.seed = stream_seed(spec.seed, li);
    std::vector<std::vector<double>> score(D, std::vector<double>(R));
    std::vector<std::vector<double>> argmax(D, std::vector<double>(R));
    parallel_for(R, threads, [&](std::size_t r) {
      const EventSeq path = simulate(cfg, r);
      for (std::size_t d = 0; d < D; ++d) {
        const double end = t_star + spec.delta_grid_in_tau[d] * tau2;
        const EventSeq ev = path.restricted(0.0, end);
        const HawkesParams p = step_on(lambda0, spec.beta, k1, k2, t_star, end);
        score[d][r] = loglik_grad(ev, p, which).grad[0];
        const auto grid = cell_centres(0.5 * t_star, end, spec.grid_points);
        const auto prof = profile_changepoint(ev, p, grid, 0, 0.0, 1);
        double best = kNegInf;
        for (const auto& q : prof) {
          if (q.loglik > best) {
            best = q.loglik;
            argmax[d][r] = q.gamma;
          }
        }
      }
    });
    for (std::size_t d = 0; d < D; ++d) {
      InfoRow row;
      row.lambda0 = lambda0;
      row.delta_in_tau = spec.delta_grid_in_tau[d];
      row.delta = row.delta_in_tau * tau2;
      row.replicates = R;
      const auto ms = moments(score[d]);
      row.score_mean = ms.mean;
      row.level_info = ms.var;
      row.level_info_se = std::sqrt(std::max(0.0, ms.m4 - ms.var * ms.var) / static_cast<double>(R));
      const auto mt = moments(argmax[d]);
      row.tstar_sd = std::sqrt(mt.var);
      row.tstar_precision = mt.var > 0.0 ? 1.0 / mt.var : std::numeric_limits<double>::infinity();
      row.level_mf = info_level_mf(lambda0, spec.beta, k1, k2, row.delta);
      row.level_mf_plus = info_level_mf_plus({lambda0, spec.beta, k1, k2}, row.delta);
      row.changetime = info_changetime(lambda0, spec.beta, k1, k2, row.delta);
      out.rows.push_back(row);
    }
  }
  return out;
}

// ---------------------------------------------------------------- recovery

RecoveryStudyResult run_recovery_study(const StudySpec& spec, const RecoveryOptions& options) {
  require_spec(spec);
  const ModelShape shape = ModelShape::parse(is_step(spec.scenario) ? "CC" : "CR");
  const PriorSpec priors;
  const std::size_t R = spec.replicates;
  const int threads = resolve_threads(spec.threads);

  RecoveryStudyResult out;
  out.spec = spec;
  out.options = options;
  {
    const auto truth = scenario_params(spec.scenario, spec.lambda0_set.front(), spec.beta, spec.t_star, spec.horizon);
    out.names = ParamPacker(truth).names();
    out.names.emplace_back("t_com");
    out.names.emplace_back("t_map");
    out.names.emplace_back("t_mle");
  }
  for (std::size_t li = 0; li < spec.lambda0_set.size(); ++li) {
    const double lambda0 = spec.lambda0_set[li];
    HawkesParams truth = scenario_params(spec.scenario, lambda0, spec.beta, spec.t_star, spec.horizon);
    truth.variant = options.variant;
    const ParamPacker packer(truth);
    auto tv = packer.natural(truth);
    for (int k = 0; k < 3; ++k) tv.push_back(spec.t_star);
    out.truth.push_back(tv);

    SimConfig cfg;
    cfg.params = truth;
    cfg.seed = stream_seed(spec.seed, li);
    std::vector<RecoveryRow> rows(R);
    parallel_for(R, threads, [&](std::size_t r) {
      auto& row = rows[r];
      row.lambda0 = lambda0;
      row.replicate = r;
      try {
        const EventSeq ev = simulate(cfg, r);
        row.events = ev.size();
        FitOptions fo;
        fo.variant = options.variant;
        fo.max_outer = options.max_outer;
        fo.laplace = false;
        fo.grid.points = spec.grid_points;
        fo.grid.threads = 1;
        if (options.fix_change_point) fo.fixed_change_points = std::vector<double>{spec.t_star};
        const FitResult f = fit(ev, shape, priors, fo);
        row.estimates = ParamPacker(f.theta_hat).natural(f.theta_hat);
        const double cp = f.theta_hat.profile.change_points()[0];
        row.estimates.push_back(f.cp_com.empty() ? cp : f.cp_com[0]);
        row.estimates.push_back(f.cp_map.empty() ? cp : f.cp_map[0]);
        row.converged = f.converged;
        if (options.fix_change_point) {
          row.estimates.push_back(cp);
        } else {
          fo.grid.move_to_argmax = true;
          const FitResult g = fit(ev, shape, priors, fo);
          row.estimates.push_back(g.cp_com[0]);
          row.converged = row.converged && g.converged;
        }
      } catch (const std::exception& e) {
        row.error = e.what();
        row.estimates.clear();
      }
    });
    for (std::size_t k = 0; k < out.names.size(); ++k) {
      std::vector<double> vals;
      for (const auto& row : rows) {
        if (!row.error) vals.push_back(row.estimates[k]);
      }
      QuantileSummary q;
      q.lambda0 = lambda0;
      q.name = out.names[k];
      q.truth = tv[k];
      q.n = vals.size();
      if (!vals.empty()) {
        const auto m = moments(vals);
        q.mean = m.mean;
        q.sd = std::sqrt(m.var);
        q.q05 = quantile(vals, 0.05);
        q.q25 = quantile(vals, 0.25);
        q.median = quantile(vals, 0.5);
        q.q75 = quantile(vals, 0.75);
        q.q95 = quantile(vals, 0.95);
      }
      out.summary.push_back(q);
    }
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  }
  return out;
}

// ---------------------------------------------------------------- surface

SurfaceStudyResult run_surface_study(const StudySpec& spec, const SurfaceOptions& options) {
  require_spec(spec);
  if (spec.delta_grid_in_tau.empty()) throw DomainError("surface study: empty window list");
  if (options.kappa_points < 2 || options.tstar_points < 2) throw DomainError("surface study: grids need >= 2 points");
  const auto [k1, k2] = step_levels(spec.scenario);
  const double lambda0 = spec.lambda0_set.front();
  const double tau2 = tau_post(spec.beta, k2);
  const double t0 = spec.t_star;
  const double sim_end = t0 + max_of(spec.delta_grid_in_tau) * tau2;
  const std::size_t R = spec.replicates;
  const std::size_t NK = options.kappa_points;
  const std::size_t NT = options.tstar_points;
  const int threads = resolve_threads(spec.threads);

  SimConfig cfg;
  cfg.params = step_on(lambda0, spec.beta, k1, k2, t0, sim_end);
  cfg.seed = spec.seed;
  std::vector<EventSeq> paths(R, EventSeq({}, 0.0, 1.0));
  parallel_for(R, threads, [&](std::size_t r) { paths[r] = simulate(cfg, r); });

  SurfaceStudyResult out;
  out.spec = spec;
  out.options = options;
  for (double w : spec.delta_grid_in_tau) {
    SurfaceWindow win;
    win.window_in_tau = w;
    win.delta = w * tau2;
    const double end = t0 + win.delta;
    const double h = std::min(win.delta, options.tstar_half_width_max);
    for (std::size_t i = 0; i < NK; ++i) {
      win.kappa_grid.push_back(options.kappa_lo + (options.kappa_hi - options.kappa_lo) * static_cast<double>(i) /
                                                      static_cast<double>(NK - 1));
    }
    win.tstar_grid = cell_centres(t0 - h, t0 + h, NT);
    std::vector<double> prior(NK * NT);
    for (std::size_t i = 0; i < NK; ++i) {
      for (std::size_t j = 0; j < NT; ++j) {
        const double zk = (win.kappa_grid[i] - k2) / options.prior_sd_kappa;
        const double zt = (win.tstar_grid[j] - t0) / options.prior_sd_tstar;
        prior[i * NT + j] = -0.5 * (zk * zk + zt * zt);
      }
    }

    std::vector<std::vector<double>> surf(R, std::vector<double>(NK * NT));
    win.mle.resize(R);
    win.map.resize(R);
    win.com.resize(R);
    parallel_for(R, threads, [&](std::size_t r) {
      const EventSeq ev = paths[r].restricted(0.0, end);
      auto& s = surf[r];
      for (std::size_t i = 0; i < NK; ++i) {
        const HawkesParams p = step_on(lambda0, spec.beta, k1, win.kappa_grid[i], t0, end);
        const auto prof = profile_changepoint(ev, p, win.tstar_grid, 0, 0.0, 1);
        for (std::size_t j = 0; j < NT; ++j) s[i * NT + j] = prof[j].loglik;
      }
      const double top = max_of(s);
      for (double& v : s) v -= top;
      std::size_t imle = 0;
      std::size_t imap = 0;
      for (std::size_t q = 0; q < s.size(); ++q) {
        if (s[q] > s[imle]) imle = q;
        if (s[q] + prior[q] > s[imap] + prior[imap]) imap = q;
      }
      const double ptop = s[imap] + prior[imap];
      double z = 0.0, ck = 0.0, ct = 0.0;
      for (std::size_t q = 0; q < s.size(); ++q) {
        const double wq = std::exp(s[q] + prior[q] - ptop);
        z += wq;
        ck += wq * win.kappa_grid[q / NT];
        ct += wq * win.tstar_grid[q % NT];
      }
      win.mle[r] = {win.kappa_grid[imle / NT], win.tstar_grid[imle % NT]};
      win.map[r] = {win.kappa_grid[imap / NT], win.tstar_grid[imap % NT]};
      win.com[r] = {ck / z, ct / z};
    });

    win.mean_surface.assign(NK * NT, 0.0);
    for (const auto& s : surf) {
      for (std::size_t q = 0; q < s.size(); ++q) win.mean_surface[q] += s[q];
    }
    for (double& v : win.mean_surface) v /= static_cast<double>(R);

    std::vector<double> pk(NK, kNegInf);
    std::vector<double> pt(NT, kNegInf);
    for (std::size_t i = 0; i < NK; ++i) {
      for (std::size_t j = 0; j < NT; ++j) {
        pk[i] = std::max(pk[i], win.mean_surface[i * NT + j]);
        pt[j] = std::max(pt[j], win.mean_surface[i * NT + j]);
      }
    }
    const double top = max_of(pk);
    auto expd = [top](std::vector<double> v) {
      for (double& x : v) x = std::exp(x - top);
      return v;
    };
    win.skew_kappa = skewness(win.kappa_grid, expd(pk));
    win.skew_tstar = skewness(win.tstar_grid, expd(pt));
    {
      std::size_t row = 0;
      for (std::size_t i = 1; i < NK; ++i) {
        if (std::abs(win.kappa_grid[i] - k2) < std::abs(win.kappa_grid[row] - k2)) row = i;
      }
      const double* slice = win.mean_surface.data() + row * NT;
      // the t* grid is symmetric about the truth
      const double centre = std::max(slice[NT / 2], slice[(NT - 1) / 2]);
      const double left = centre - slice[0];
      const double right = centre - slice[NT - 1];
      win.tail_asymmetry_tstar = left + right > 0.0 ? (left - right) / (left + right) : 0.0;
    }
    for (std::size_t r = 0; r < R; ++r) {
      win.mean_abs_com_map_kappa += std::abs(win.com[r].kappa2 - win.map[r].kappa2) / static_cast<double>(R);
      win.mean_abs_com_map_tstar += std::abs(win.com[r].tstar - win.map[r].tstar) / static_cast<double>(R);
    }
    out.windows.push_back(std::move(win));
  }
  return out;
}

// ---------------------------------------------------------------- selection

SelectionStudyResult run_selection_study(const StudySpec& spec, const SelectionOptions& options) {
  require_spec(spec);
  if (options.candidates.empty()) throw DomainError("selection study: no candidates");
  std::vector<ModelShape> cands;
  for (const auto& c : options.candidates) cands.push_back(ModelShape::parse(c));
  const double lambda0 = spec.lambda0_set.front();
  const std::size_t R = spec.replicates;
  const int threads = resolve_threads(spec.threads);
  const PriorSpec priors;

  SelectionStudyResult out;
  out.spec = spec;
  out.options = options;
  out.rows.resize(2 * R);
  parallel_for(2 * R, threads, [&](std::size_t idx) {
    const std::size_t arm = idx / R;
    const std::size_t r = idx % R;
    auto& row = out.rows[idx];
    row.arm = arm;
    row.replicate = r;
    try {
      SimConfig cfg;
      cfg.params = arm == 0 ? HawkesParams{lambda0, spec.beta,
                                           ProductivityProfile::constant(0.0, spec.horizon, options.no_change_level)}
                            : step_on(lambda0, spec.beta, options.kappa1, options.kappa2, spec.t_star, spec.horizon);
      cfg.seed = stream_seed(spec.seed, arm);
      const EventSeq ev = simulate(cfg, r);
      row.events = ev.size();
      EvidenceOptions eo;
      eo.mc_samples = options.mc_samples;
      eo.seed = stream_seed(spec.seed + 1, idx);
      eo.threads = 1;
      const auto table = select(ev, cands, priors, eo);
      row.log_evidence.assign(cands.size(), kNegInf);
      row.mc_std_err.assign(cands.size(), 0.0);
      std::vector<bool> used(table.records.size(), false);
      for (std::size_t c = 0; c < cands.size(); ++c) {
        const std::string name = cands[c].name();
        for (std::size_t k = 0; k < table.records.size(); ++k) {
          if (!used[k] && table.records[k].name == name) {
            used[k] = true;
            row.log_evidence[c] = table.records[k].log_evidence;
            row.mc_std_err[c] = table.records[k].mc_std_err;
            break;
          }
        }
      }
      if (table.records.front().error) throw DomainError("every candidate failed: " + *table.records.front().error);
      row.best = table.records.front().name;
      row.best_K = table.records.front().K;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });
  std::size_t hit[2] = {0, 0};
  for (const auto& row : out.rows) {
    if (!row.error && row.best_K == row.arm) ++hit[row.arm];
  }
  out.accuracy_no_change = static_cast<double>(hit[0]) / static_cast<double>(R);
  out.accuracy_one_step = static_cast<double>(hit[1]) / static_cast<double>(R);
  return out;
}

// ---------------------------------------------------------------- short regime

std::vector<ShortRegimeRow> run_short_regime_study(const StudySpec& spec, const ShortRegimeOptions& options) {
  require_spec(spec);
  const double lambda0 = spec.lambda0_set.front();
  const double tau = tau_post(spec.beta, options.middle_level);
  const double T = spec.horizon;
  const std::size_t R = spec.replicates;
  const int threads = resolve_threads(spec.threads);
  const PriorSpec& priors = options.priors;
  const ModelShape shape = ModelShape::parse("CCC");

  std::vector<ShortRegimeRow> out;
  for (std::size_t wi = 0; wi < options.widths_in_tau.size(); ++wi) {
    const double w = options.widths_in_tau[wi] * tau;
    if (!(w < T)) {
      throw DomainError(fmt::format("short-regime study: width {} does not fit in horizon {}", w, T));
    }
    const std::vector<double> cps{0.5 * (T - w), 0.5 * (T + w)};
    SimConfig cfg;
    cfg.params = {lambda0, spec.beta,
                  ProductivityProfile(0.0, T, cps,
                                      {SegmentShape::constant(options.outer_level),
                                       SegmentShape::constant(options.middle_level),
                                       SegmentShape::constant(options.outer_level)})};
    cfg.seed = stream_seed(spec.seed, wi);
    std::vector<double> est(R, std::numeric_limits<double>::quiet_NaN());
    parallel_for(R, threads, [&](std::size_t r) {
      try {
        const EventSeq ev = simulate(cfg, r);
        FitOptions fo;
        fo.fixed_change_points = cps;
        fo.laplace = false;
        const auto f = fit(ev, shape, priors, fo);
        est[r] = f.theta_hat.profile.segment(1).params()[0];
      } catch (const std::exception&) {
      }
    });
    ShortRegimeRow row;
    row.width_in_tau = options.widths_in_tau[wi];
    row.replicates = R;
    std::vector<double> ok;
    for (double v : est) {
      if (std::isfinite(v)) ok.push_back(v);
    }
    row.failures = R - ok.size();
    if (!ok.empty()) {
      const auto m = moments(ok);
      row.mean = m.mean;
      row.sd = std::sqrt(m.var);
      row.iqr = quantile(ok, 0.75) - quantile(ok, 0.25);
    }
    out.push_back(row);
  }
  return out;
}

}  // namespace hawkes
