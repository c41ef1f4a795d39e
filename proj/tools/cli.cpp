#include "hawkes/cli.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "CLI11.hpp"

#include "hawkes/evidence.hpp"
#include "hawkes/experiments.hpp"
#include "hawkes/information.hpp"
#include "hawkes/io.hpp"
#include "hawkes/likelihood.hpp"
#include "hawkes/meanfield.hpp"
#include "hawkes/parallel.hpp"
#include "hawkes/simulate.hpp"

namespace hawkes {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("'" + item + "' is not a number");
    }
  }
  return v;
}

std::vector<std::string> split_strings(const std::string& s) {
  std::vector<std::string> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) v.push_back(item);
  }
  return v;
}

// Writes to `path`, or to `out` when path is empty or "-".
template <class F>
void emit(const std::string& path, std::ostream& out, F&& write) {
  if (path.empty() || path == "-") {
    write(out);
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  write(f);
}

void emit_json(const std::string& path, std::ostream& out, const Json& j) {
  emit(path, out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

std::vector<double> grid_from_spec(const std::string& spec) {
  const auto parts = split_doubles([&] {
    std::string s = spec;
    std::replace(s.begin(), s.end(), ':', ',');
    return s;
  }());
  if (parts.size() != 3 || !(parts[2] > 0.0) || !(parts[1] >= parts[0])) {
    throw UsageError("grid must be a:b:step with a <= b and step > 0");
  }
  std::vector<double> g;
  const auto n = static_cast<std::size_t>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) g.push_back(parts[0] + parts[2] * static_cast<double>(i));
  return g;
}

struct EventFlags {
  std::string path;
  std::optional<double> window_start;
  std::optional<double> window_end;

  void add(CLI::App* cmd) {
    cmd->add_option("--events", path, "Event CSV (header 'time')")->required();
    cmd->add_option("--window-start", window_start, "Observation window start (default 0 or the model's)");
    cmd->add_option("--window-end", window_end, "Observation window end (default last event or the model's)");
  }
  EventSeq load(const std::optional<HawkesParams>& model = std::nullopt) const {
    auto ws = window_start;
    auto we = window_end;
    if (model) {
      if (!ws) ws = model->profile.window_start();
      if (!we) we = model->profile.window_end();
    }
    return read_events_csv_file(path, ws, we);
  }
};

// ---------------------------------------------------------------- study config

Json to_json(const StudySpec& s) {
  Json j{{"scenario", std::string(to_string(s.scenario))},
         {"replicates", s.replicates},
         {"lambda0_set", s.lambda0_set},
         {"delta_grid_in_tau", s.delta_grid_in_tau},
         {"seed", s.seed},
         {"beta", s.beta},
         {"t_star", s.t_star},
         {"horizon", s.horizon},
         {"grid_points", s.grid_points}};
  j["threads"] = s.threads ? Json(*s.threads) : Json(nullptr);
  return j;
}

template <class T>
void take(const Json& j, const char* key, T& x) {
  if (j.contains(key) && !j.at(key).is_null()) x = j.at(key).get<T>();
}

StudySpec study_spec_from_json(const Json& j, const std::string& name) {
  StudySpec s;
  // selection and short-regime designs differ from the single-change default
  if (name == "selection") {
    s.horizon = 200.0;
    s.t_star = 100.0;
    s.replicates = 50;
    s.lambda0_set = {1.0};
  }
  if (name == "short_regime") s.lambda0_set = {1.0};
  if (j.contains("scenario")) s.scenario = scenario_from_string(j.at("scenario").get<std::string>());
  take(j, "replicates", s.replicates);
  take(j, "lambda0_set", s.lambda0_set);
  take(j, "delta_grid_in_tau", s.delta_grid_in_tau);
  take(j, "seed", s.seed);
  take(j, "beta", s.beta);
  take(j, "t_star", s.t_star);
  take(j, "horizon", s.horizon);
  take(j, "grid_points", s.grid_points);
  if (j.contains("threads") && !j.at("threads").is_null()) s.threads = j.at("threads").get<int>();
  return s;
}

template <class Row>
void write_csv(const std::string& path, const std::vector<std::string>& header, const std::vector<Row>& rows) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  for (std::size_t i = 0; i < header.size(); ++i) f << (i ? "," : "") << header[i];
  f << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) f << (i ? "," : "") << r[i];
    f << '\n';
  }
}

std::string cell(double x) { return fmt::format("{}", x); }
std::string cell(std::size_t x) { return fmt::format("{}", x); }

using Rows = std::vector<std::vector<std::string>>;

Json run_study(const std::string& name, const Json& config, const std::filesystem::path& dir, Json& resolved) {
  StudySpec spec = study_spec_from_json(config, name);
  resolved = to_json(spec);
  Json results = Json::object();
  if (name == "info") {
    const auto r = run_info_study(spec);
    Rows rows;
    Json jr = Json::array();
    for (const auto& x : r.rows) {
      auto add = [&](const char* series, double v, double se) {
        rows.push_back({cell(x.lambda0), cell(x.delta_in_tau), cell(x.delta), series, cell(v), cell(se)});
      };
      add("level_info_empirical", x.level_info, x.level_info_se);
      add("level_mf", x.level_mf, 0.0);
      add("level_mf_plus", x.level_mf_plus, 0.0);
      add("tstar_precision_empirical", x.tstar_precision, 0.0);
      add("changetime_total", x.changetime.total, 0.0);
      add("changetime_jump", x.changetime.jump, 0.0);
      add("changetime_smooth", x.changetime.smooth, 0.0);
      add("changetime_bound", x.changetime.bound, 0.0);
      jr.push_back({{"lambda0", x.lambda0},
                    {"delta_in_tau", x.delta_in_tau},
                    {"delta", x.delta},
                    {"replicates", x.replicates},
                    {"score_mean", x.score_mean},
                    {"level_info", x.level_info},
                    {"level_info_se", x.level_info_se},
                    {"tstar_sd", x.tstar_sd},
                    {"tstar_precision", x.tstar_precision},
                    {"level_mf", x.level_mf},
                    {"level_mf_plus", x.level_mf_plus},
                    {"changetime_total", x.changetime.total}});
    }
    write_csv((dir / "info_study.csv").string(), {"lambda0", "delta_in_tau", "delta", "series", "value", "se"}, rows);
    results["rows"] = jr;
  } else if (name == "recovery") {
    RecoveryOptions opt;
    take(config, "fix_change_point", opt.fix_change_point);
    take(config, "max_outer", opt.max_outer);
    if (config.contains("variant")) opt.variant = variant_from_string(config.at("variant").get<std::string>());
    resolved["fix_change_point"] = opt.fix_change_point;
    resolved["max_outer"] = opt.max_outer;
    resolved["variant"] = std::string(to_string(opt.variant));
    const auto r = run_recovery_study(spec, opt);
    Rows rows;
    std::size_t li = 0;
    for (const auto& row : r.rows) {
      while (r.spec.lambda0_set[li] != row.lambda0) ++li;
      for (std::size_t k = 0; k < r.names.size(); ++k) {
        rows.push_back({cell(row.lambda0), cell(row.replicate), cell(row.events), row.converged ? "1" : "0",
                        r.names[k], row.error ? "" : cell(row.estimates[k]), cell(r.truth[li][k]),
                        row.error ? *row.error : ""});
      }
    }
    write_csv((dir / "recovery_estimates.csv").string(),
              {"lambda0", "replicate", "events", "converged", "param", "value", "truth", "error"}, rows);
    Rows srows;
    Json js = Json::array();
    for (const auto& q : r.summary) {
      srows.push_back({cell(q.lambda0), q.name, cell(q.truth), cell(q.n), cell(q.mean), cell(q.sd), cell(q.q05),
                       cell(q.q25), cell(q.median), cell(q.q75), cell(q.q95)});
      js.push_back({{"lambda0", q.lambda0}, {"param", q.name},   {"truth", q.truth}, {"n", q.n},
                    {"mean", q.mean},       {"sd", q.sd},        {"q05", q.q05},     {"median", q.median},
                    {"q95", q.q95}});
    }
    write_csv((dir / "recovery_summary.csv").string(),
              {"lambda0", "param", "truth", "n", "mean", "sd", "q05", "q25", "median", "q75", "q95"}, srows);
    results["summary"] = js;
  } else if (name == "surface") {
    SurfaceOptions opt;
    take(config, "kappa_points", opt.kappa_points);
    take(config, "tstar_points", opt.tstar_points);
    take(config, "tstar_half_width_max", opt.tstar_half_width_max);
    take(config, "prior_sd_kappa", opt.prior_sd_kappa);
    take(config, "prior_sd_tstar", opt.prior_sd_tstar);
    resolved["kappa_points"] = opt.kappa_points;
    resolved["tstar_points"] = opt.tstar_points;
    resolved["tstar_half_width_max"] = opt.tstar_half_width_max;
    resolved["prior_sd_kappa"] = opt.prior_sd_kappa;
    resolved["prior_sd_tstar"] = opt.prior_sd_tstar;
    const auto r = run_surface_study(spec, opt);
    Rows grid;
    Rows est;
    Json jw = Json::array();
    for (const auto& w : r.windows) {
      const std::size_t NT = w.tstar_grid.size();
      for (std::size_t i = 0; i < w.kappa_grid.size(); ++i) {
        for (std::size_t j = 0; j < NT; ++j) {
          grid.push_back({cell(w.window_in_tau), cell(w.kappa_grid[i]), cell(w.tstar_grid[j]),
                          cell(w.mean_surface[i * NT + j])});
        }
      }
      for (std::size_t k = 0; k < w.mle.size(); ++k) {
        est.push_back({cell(w.window_in_tau), cell(k), "mle", cell(w.mle[k].kappa2), cell(w.mle[k].tstar)});
        est.push_back({cell(w.window_in_tau), cell(k), "map", cell(w.map[k].kappa2), cell(w.map[k].tstar)});
        est.push_back({cell(w.window_in_tau), cell(k), "com", cell(w.com[k].kappa2), cell(w.com[k].tstar)});
      }
      jw.push_back({{"window_in_tau", w.window_in_tau},
                    {"delta", w.delta},
                    {"skew_tstar", w.skew_tstar},
                    {"skew_kappa", w.skew_kappa},
                    {"tail_asymmetry_tstar", w.tail_asymmetry_tstar},
                    {"mean_abs_com_map_kappa", w.mean_abs_com_map_kappa},
                    {"mean_abs_com_map_tstar", w.mean_abs_com_map_tstar}});
    }
    write_csv((dir / "surface_grid.csv").string(), {"window_in_tau", "kappa2", "tstar", "mean_centred_loglik"}, grid);
    write_csv((dir / "surface_estimates.csv").string(), {"window_in_tau", "replicate", "estimator", "kappa2", "tstar"},
              est);
    results["windows"] = jw;
  } else if (name == "selection") {
    SelectionOptions opt;
    take(config, "candidates", opt.candidates);
    take(config, "mc_samples", opt.mc_samples);
    take(config, "no_change_level", opt.no_change_level);
    take(config, "kappa1", opt.kappa1);
    take(config, "kappa2", opt.kappa2);
    resolved["candidates"] = opt.candidates;
    resolved["mc_samples"] = opt.mc_samples;
    resolved["no_change_level"] = opt.no_change_level;
    resolved["kappa1"] = opt.kappa1;
    resolved["kappa2"] = opt.kappa2;
    const auto r = run_selection_study(spec, opt);
    Rows rows;
    for (const auto& row : r.rows) {
      for (std::size_t c = 0; c < opt.candidates.size(); ++c) {
        rows.push_back({cell(row.arm), cell(row.replicate), cell(row.events), row.best, cell(row.best_K),
                        opt.candidates[c], row.error ? "" : cell(row.log_evidence[c]),
                        row.error ? "" : cell(row.mc_std_err[c]), row.error ? *row.error : ""});
      }
    }
    write_csv((dir / "selection.csv").string(),
              {"arm", "replicate", "events", "best", "best_K", "candidate", "log_evidence", "mc_std_err", "error"},
              rows);
    results["accuracy_no_change"] = r.accuracy_no_change;
    results["accuracy_one_step"] = r.accuracy_one_step;
  } else if (name == "short_regime") {
    ShortRegimeOptions opt;
    take(config, "widths_in_tau", opt.widths_in_tau);
    take(config, "outer_level", opt.outer_level);
    take(config, "middle_level", opt.middle_level);
    resolved["widths_in_tau"] = opt.widths_in_tau;
    resolved["outer_level"] = opt.outer_level;
    resolved["middle_level"] = opt.middle_level;
    const auto r = run_short_regime_study(spec, opt);
    Rows rows;
    Json jr = Json::array();
    for (const auto& x : r) {
      rows.push_back({cell(x.width_in_tau), cell(x.replicates), cell(x.failures), cell(x.mean), cell(x.sd),
                      cell(x.iqr)});
      jr.push_back({{"width_in_tau", x.width_in_tau}, {"sd", x.sd}, {"iqr", x.iqr}, {"failures", x.failures}});
    }
    write_csv((dir / "short_regime.csv").string(), {"width_in_tau", "replicates", "failures", "mean", "sd", "iqr"},
              rows);
    results["rows"] = jr;
  } else {
    throw UsageError("unknown study '" + name + "'");
  }
  return results;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Variable-productivity Hawkes processes: simulation, mean-field dynamics, information "
               "surrogates, change-point estimation and model selection",
               "hawkes-cpd"};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<int> threads;
  app.add_option("--threads", threads, "Worker cap (default: HAWKES_CPD_THREADS, else all cores)")
      ->check(CLI::PositiveNumber);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Sample event times from a model");
  std::string sim_model, sim_out;
  std::uint64_t sim_seed = 0;
  std::size_t sim_reps = 1;
  std::size_t sim_cap = 1'000'000;
  sim->add_option("--model", sim_model, "HawkesParams JSON")->required();
  sim->add_option("--seed", sim_seed, "Random seed")->required();
  sim->add_option("--out", sim_out, "Output CSV (default stdout)");
  sim->add_option("--replicates", sim_reps, "Replicates; more than one gives columns replicate,time")
      ->check(CLI::PositiveNumber);
  sim->add_option("--max-events", sim_cap, "Event cap per replicate");

  // ingest
  auto* ing = app.add_subcommand("ingest", "Daily counts (date,count) to event times in days");
  std::string ing_counts, ing_out;
  std::uint64_t ing_seed = 0;
  ing->add_option("--counts", ing_counts, "Daily counts CSV")->required();
  ing->add_option("--seed", ing_seed, "Seed for within-day placement")->required();
  ing->add_option("--out", ing_out, "Output event CSV (default stdout)");

  // meanfield
  auto* mf = app.add_subcommand("meanfield", "Mean-field path M, lambda_bar and optionally V");
  std::string mf_model, mf_out;
  double mf_step = 0.1;
  bool mf_moments = false;
  double mf_m0 = 0.0, mf_v0 = 0.0;
  mf->add_option("--model", mf_model, "HawkesParams JSON")->required();
  mf->add_option("--grid-step", mf_step, "Output spacing")->check(CLI::PositiveNumber);
  mf->add_flag("--moments", mf_moments, "Also solve for the variance V");
  mf->add_option("--m0", mf_m0, "M at the window start");
  mf->add_option("--v0", mf_v0, "V at the window start");
  mf->add_option("--out", mf_out, "Output CSV (default stdout)");

  // info
  auto* inf = app.add_subcommand("info", "Information surrogates for a single step");
  std::string inf_model, inf_out, inf_units = "tau";
  double inf_k1 = 0.0, inf_k2 = 0.0, inf_dmax = 8.0;
  std::size_t inf_points = 50;
  inf->add_option("--model", inf_model, "HawkesParams JSON supplying lambda0 and beta")->required();
  inf->add_option("--kappa1", inf_k1, "Pre-change productivity")->required();
  inf->add_option("--kappa2", inf_k2, "Post-change productivity")->required();
  inf->add_option("--delta-max", inf_dmax, "Largest post-change window")->check(CLI::PositiveNumber);
  inf->add_option("--units", inf_units, "Units of --delta-max")->check(CLI::IsMember({"tau", "time"}));
  inf->add_option("--points", inf_points, "Grid points")->check(CLI::PositiveNumber);
  inf->add_option("--out", inf_out, "Output CSV (default stdout)");

  // profile
  auto* prof = app.add_subcommand("profile", "Change-time profile log-likelihood");
  EventFlags prof_ev;
  prof_ev.add(prof);
  std::string prof_model, prof_param, prof_grid, prof_out;
  prof->add_option("--model", prof_model, "HawkesParams or FitResult JSON")->required();
  prof->add_option("--param", prof_param, "Change point to profile, gamma1, gamma2, ...")->required();
  prof->add_option("--grid", prof_grid, "a:b:step")->required();
  prof->add_option("--out", prof_out, "Output CSV (default stdout)");

  // fit
  auto* fitc = app.add_subcommand("fit", "Alternating MAP / centre-of-mass fit");
  EventFlags fit_ev;
  fit_ev.add(fitc);
  std::string fit_shape, fit_priors, fit_out, fit_fix, fit_variant = "VariableSusceptibility", fit_warm;
  std::optional<std::size_t> fit_k;
  int fit_outer = 50;
  bool fit_super = false;
  fitc->add_option("--shape", fit_shape, "Segment kinds, e.g. CRC or 2_CP_CRC")->required();
  fitc->add_option("--k", fit_k, "Change-point count (checked against --shape)");
  fitc->add_option("--priors", fit_priors, "PriorSpec JSON");
  fitc->add_option("--fix-cp", fit_fix, "Pinned change points t1,t2,...");
  fitc->add_option("--variant", fit_variant, "VariableSusceptibility or VariableInfectivity");
  fitc->add_option("--warm-start", fit_warm, "HawkesParams or FitResult JSON to start from");
  fitc->add_option("--max-outer", fit_outer, "Outer iteration cap")->check(CLI::PositiveNumber);
  fitc->add_flag("--allow-supercritical", fit_super, "Let levels exceed one");
  fitc->add_option("--out", fit_out, "Output FitResult JSON (default stdout)");

  // select
  auto* sel = app.add_subcommand("select", "Rank candidate shapes by integrated evidence");
  EventFlags sel_ev;
  sel_ev.add(sel);
  std::string sel_cands, sel_priors, sel_out, sel_warm, sel_mode = "total", sel_variant = "VariableSusceptibility";
  std::size_t sel_mc = 200;
  std::uint64_t sel_seed = 0;
  double sel_lambda = 1.0;
  sel->add_option("--candidates", sel_cands, "Comma-separated shapes, e.g. C,CC,CRC,2_CP_CRC")->required();
  sel->add_option("--mc-samples", sel_mc, "Monte-Carlo change-point draws")->check(CLI::PositiveNumber);
  sel->add_option("--seed", sel_seed, "Random seed")->required();
  sel->add_option("--priors", sel_priors, "PriorSpec JSON");
  sel->add_option("--warm-start", sel_warm, "FitResult or HawkesParams JSON for matching shapes");
  sel->add_option("--n-mode", sel_mode, "Penalty event count")->check(CLI::IsMember({"total", "per_segment_min"}));
  sel->add_option("--lambda-segs", sel_lambda, "Poisson rate of the segment-count prior");
  sel->add_option("--variant", sel_variant, "VariableSusceptibility or VariableInfectivity");
  sel->add_option("--out", sel_out, "Output EvidenceTable JSON (default stdout)");

  // study
  auto* st = app.add_subcommand("study", "Monte-Carlo studies writing CSV tables and a JSON summary");
  std::string st_name, st_config, st_dir;
  std::optional<std::uint64_t> st_seed;
  std::optional<std::size_t> st_reps;
  st->add_option("--name", st_name, "Study")
      ->required()
      ->check(CLI::IsMember({"info", "recovery", "surface", "selection", "short_regime"}));
  st->add_option("--config", st_config, "Study JSON config");
  st->add_option("--out-dir", st_dir, "Output directory")->required();
  st->add_option("--seed", st_seed, "Overrides the config seed");
  st->add_option("--replicates", st_reps, "Overrides the config replicate count");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*sim) {
      HawkesParams p = params_from_any_json(read_json_file(sim_model));
      require_valid(p);
      SimConfig cfg;
      cfg.params = p;
      cfg.seed = sim_seed;
      cfg.max_events = sim_cap;
      const auto reps = simulate_replicates(cfg, sim_reps, resolve_threads(threads));
      emit(sim_out, out, [&](std::ostream& o) {
        if (sim_reps == 1) {
          write_events_csv(o, reps[0]);
          return;
        }
        o << "replicate,time\n";
        for (std::size_t r = 0; r < reps.size(); ++r) {
          for (double t : reps[r].times()) o << fmt::format("{},{}\n", r, t);
        }
      });
    } else if (*ing) {
      const auto counts = read_daily_csv_file(ing_counts);
      const auto ev = ingest_daily(counts, ing_seed);
      emit(ing_out, out, [&](std::ostream& o) { write_events_csv(o, ev); });
      err << fmt::format("ingested {} events over ({}, {}] days from {}; seed {}\n", ev.size(), ev.window_start(),
                         ev.window_end(), counts.dates.front(), ing_seed);
    } else if (*mf) {
      const HawkesParams p = params_from_any_json(read_json_file(mf_model));
      require_valid(p);
      std::vector<double> grid;
      const double a = p.profile.window_start();
      const double b = p.profile.window_end();
      for (std::size_t i = 0;; ++i) {
        const double t = a + mf_step * static_cast<double>(i);
        if (t > b + 1e-12 * std::max(1.0, std::abs(b))) break;
        grid.push_back(std::min(t, b));
      }
      const auto path = mf_moments ? solve_moment_odes(p, mf_m0, mf_v0, grid) : solve_mean_ode(p, mf_m0, grid);
      emit(mf_out, out, [&](std::ostream& o) {
        o << "t,M,lambda_bar,V\n";
        for (std::size_t i = 0; i < path.grid.size(); ++i) {
          o << fmt::format("{},{},{},{}\n", path.grid[i], path.M[i], path.lambda_bar[i],
                           path.V.empty() ? std::string() : fmt::format("{}", path.V[i]));
        }
      });
    } else if (*inf) {
      const HawkesParams p = params_from_any_json(read_json_file(inf_model));
      const StepConfig step{p.lambda0, p.beta, inf_k1, inf_k2};
      const auto q = step_quantities(step);
      const double tau2 = 1.0 / q.rate;
      const double dmax = inf_units == "tau" ? inf_dmax * tau2 : inf_dmax;
      emit(inf_out, out, [&](std::ostream& o) {
        o << "delta,delta_in_tau,level_mf,level_mf_plus,changetime_total,changetime_jump,changetime_smooth,"
             "changetime_bound,boundary_lower\n";
        for (std::size_t i = 0; i <= inf_points; ++i) {
          const double d = dmax * static_cast<double>(i) / static_cast<double>(inf_points);
          const auto ct = info_changetime(p.lambda0, p.beta, inf_k1, inf_k2, d);
          o << fmt::format("{},{},{},{},{},{},{},{},{}\n", d, d / tau2,
                           info_level_mf(p.lambda0, p.beta, inf_k1, inf_k2, d), info_level_mf_plus(step, d), ct.total,
                           ct.jump, ct.smooth, ct.bound,
                           info_boundary_lower(q.steady_pre, p.lambda0, p.beta, inf_k2, d));
        }
      });
    } else if (*prof) {
      const HawkesParams p = params_from_any_json(read_json_file(prof_model));
      require_valid(p);
      const auto ev = prof_ev.load(p);
      if (prof_param.rfind("gamma", 0) != 0) throw UsageError("--param must be gamma<k>");
      std::size_t k = 0;
      try {
        k = std::stoul(prof_param.substr(5));
      } catch (const std::exception&) {
        throw UsageError("--param must be gamma<k>");
      }
      if (k < 1 || k > p.profile.change_points().size()) {
        throw UsageError(fmt::format("--param {}: the model has {} change points", prof_param,
                                     p.profile.change_points().size()));
      }
      const auto grid = grid_from_spec(prof_grid);
      const auto pts = profile_changepoint(ev, p, grid, k - 1, 0.0, threads);
      emit(prof_out, out, [&](std::ostream& o) {
        o << "gamma,loglik\n";
        for (const auto& q : pts) o << fmt::format("{},{}\n", q.gamma, q.loglik);
      });
    } else if (*fitc) {
      ModelShape shape = ModelShape::parse(fit_shape);
      if (fit_k && *fit_k != shape.change_point_count()) {
        throw UsageError(fmt::format("--k {} disagrees with shape {}", *fit_k, shape.name()));
      }
      const PriorSpec priors = fit_priors.empty() ? PriorSpec{} : priors_from_json(read_json_file(fit_priors));
      FitOptions fo;
      fo.variant = variant_from_string(fit_variant);
      fo.max_outer = fit_outer;
      fo.allow_supercritical = fit_super;
      fo.grid.threads = threads;
      if (!fit_fix.empty()) fo.fixed_change_points = split_doubles(fit_fix);
      std::optional<HawkesParams> warm;
      if (!fit_warm.empty()) warm = params_from_any_json(read_json_file(fit_warm));
      fo.warm_start = warm;
      const auto ev = fit_ev.load(warm);
      const auto r = fit(ev, shape, priors, fo);
      emit_json(fit_out, out, to_json(r));
    } else if (*sel) {
      std::vector<ModelShape> cands;
      for (const auto& c : split_strings(sel_cands)) cands.push_back(ModelShape::parse(c));
      if (cands.empty()) throw UsageError("--candidates is empty");
      const PriorSpec priors = sel_priors.empty() ? PriorSpec{} : priors_from_json(read_json_file(sel_priors));
      EvidenceOptions eo;
      eo.mc_samples = sel_mc;
      eo.seed = sel_seed;
      eo.threads = threads;
      eo.lambda_segs = sel_lambda;
      eo.n_mode = penalty_count_from_string(sel_mode);
      eo.variant = variant_from_string(sel_variant);
      std::optional<HawkesParams> warm;
      if (!sel_warm.empty()) warm = params_from_any_json(read_json_file(sel_warm));
      eo.warm_start = warm;
      const auto ev = sel_ev.load(warm);
      Json j = to_json(select(ev, cands, priors, eo));
      j["seed"] = sel_seed;
      j["mc_samples"] = sel_mc;
      emit_json(sel_out, out, j);
    } else if (*st) {
      Json config = st_config.empty() ? Json::object() : read_json_file(st_config);
      if (st_seed) config["seed"] = *st_seed;
      if (st_reps) config["replicates"] = *st_reps;
      if (threads) config["threads"] = *threads;
      if (!config.contains("seed")) {
        // recorded in the summary so the run can be repeated
        config["seed"] = static_cast<std::uint64_t>(std::random_device{}());
      }
      const std::filesystem::path dir(st_dir);
      std::filesystem::create_directories(dir);
      Json resolved;
      Json results = run_study(st_name, config, dir, resolved);
      Json summary{{"schema_version", kSchemaVersion}, {"study", st_name}, {"config", resolved}, {"results", results}};
      write_json_file((dir / "summary.json").string(), summary);
      out << summary.dump(2) << '\n';
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace hawkes
