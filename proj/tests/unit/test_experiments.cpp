#include <cmath>

#include "doctest.h"
#include "hawkes/experiments.hpp"
#include "hawkes/information.hpp"

using namespace hawkes;

namespace {

const QuantileSummary& find(const RecoveryStudyResult& r, const std::string& name) {
  for (const auto& q : r.summary) {
    if (q.name == name) return q;
  }
  throw std::runtime_error("no summary row " + name);
}

}  // namespace

TEST_CASE("scenario designs") {
  const auto up = scenario_params(Scenario::RampUp, 1.0, 1.0, 50.0, 100.0);
  CHECK(eval_kappa(up.profile, 60.0) == doctest::Approx(0.30).epsilon(1e-14));
  CHECK(eval_kappa(up.profile, 50.0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(validate(up).empty());
  const auto down = scenario_params(Scenario::RampDown, 1.0, 1.0, 50.0, 100.0);
  CHECK(eval_kappa(down.profile, 100.0) == doctest::Approx(0.5).epsilon(1e-14));
  const auto step = scenario_params(Scenario::HighToLow, 2.0, 1.0, 50.0, 100.0);
  CHECK(eval_kappa(step.profile, 50.0) == 0.75);
  CHECK(eval_kappa(step.profile, 50.0 + 1e-9) == 0.25);
  CHECK(step.lambda0 == 2.0);
  CHECK_THROWS_AS(step_levels(Scenario::RampUp), DomainError);
  for (auto s : {Scenario::HighToLow, Scenario::LowToHigh, Scenario::RampUp, Scenario::RampDown}) {
    CHECK(scenario_from_string(to_string(s)) == s);
  }
  CHECK_THROWS_AS(scenario_from_string("sideways"), DomainError);
  StudySpec bad;
  bad.replicates = 0;
  CHECK_FALSE(bad.violations().empty());
  CHECK_THROWS_AS(run_info_study(bad), DomainError);
}

TEST_CASE("type-7 quantiles") {
  const std::vector<double> x{4.0, 1.0, 3.0, 2.0};
  CHECK(quantile(x, 0.0) == 1.0);
  CHECK(quantile(x, 1.0) == 4.0);
  CHECK(quantile(x, 0.25) == doctest::Approx(1.75));
  CHECK(quantile(x, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({7.0}, 0.3) == 7.0);
  CHECK_THROWS_AS(quantile({}, 0.5), DomainError);
}

TEST_CASE("info study is deterministic and carries the surrogates") {
  StudySpec s;
  s.scenario = Scenario::LowToHigh;
  s.replicates = 20;
  s.lambda0_set = {1.0, 2.0};
  s.delta_grid_in_tau = {1.0, 2.0};
  s.seed = 4;
  s.threads = 1;
  const auto a = run_info_study(s);
  s.threads = 3;
  const auto b = run_info_study(s);
  REQUIRE(a.rows.size() == 4);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].level_info == b.rows[i].level_info);
    CHECK(a.rows[i].tstar_precision == b.rows[i].tstar_precision);
    const auto& r = a.rows[i];
    CHECK(r.delta == doctest::Approx(r.delta_in_tau * 4.0));
    CHECK(r.level_mf == info_level_mf(r.lambda0, 1.0, 0.25, 0.75, r.delta));
    CHECK(r.changetime.total == info_changetime(r.lambda0, 1.0, 0.25, 0.75, r.delta).total);
    CHECK(r.level_info > 0.0);
    CHECK(r.level_info_se > 0.0);
  }
  CHECK(a.rows[0].lambda0 == 1.0);
  CHECK(a.rows[2].lambda0 == 2.0);
  s.seed = 5;
  CHECK(run_info_study(s).rows[0].level_info != a.rows[0].level_info);
}

TEST_CASE("empirical level information grows linearly while change-time precision saturates") {
  StudySpec s;
  s.replicates = 500;
  s.lambda0_set = {1.0};
  s.delta_grid_in_tau = {4.0, 8.0};
  s.seed = 21;
  s.scenario = Scenario::LowToHigh;
  const auto up = run_info_study(s);
  s.scenario = Scenario::HighToLow;
  const auto down = run_info_study(s);

  // the ratio of two independent estimates moves with both standard errors
  for (const auto* r : {&up, &down}) {
    const auto& a = r->rows[0];
    const auto& b = r->rows[1];
    const double ratio = b.level_info / a.level_info;
    const double rel_se = std::hypot(a.level_info_se / a.level_info, b.level_info_se / b.level_info);
    const double mf_ratio = b.level_mf / a.level_mf;
    CHECK(mf_ratio > 1.4);
    CHECK(std::abs(ratio - mf_ratio) <= 3.0 * rel_se * ratio);
  }
  // with little transient the mean-field ratio itself is close to a doubling
  CHECK(up.rows[1].level_mf / up.rows[0].level_mf == doctest::Approx(2.0).epsilon(0.15));

  CHECK(up.rows[1].tstar_precision / up.rows[0].tstar_precision < 1.3);
  CHECK(down.rows[1].tstar_precision / down.rows[0].tstar_precision < 1.3);
  CHECK(down.rows[1].tstar_precision > up.rows[1].tstar_precision);
}

TEST_CASE("recovery study calibration and estimator dispersion") {
  StudySpec s;
  s.scenario = Scenario::HighToLow;
  s.replicates = 100;
  s.lambda0_set = {1.0};
  s.seed = 31;
  const auto r = run_recovery_study(s);
  REQUIRE(r.rows.size() == 100);
  REQUIRE(r.names.size() == 7);
  CHECK(r.names[4] == "t_com");
  CHECK(r.names[6] == "t_mle");
  for (const auto& q : r.summary) {
    CHECK(q.n == 100);
    CHECK(q.q05 <= q.median);
    CHECK(q.median <= q.q95);
    if (q.name.rfind("t_", 0) != 0) {
      CHECK_MESSAGE(q.truth >= q.q05, q.name);
      CHECK_MESSAGE(q.truth <= q.q95, q.name);
    }
  }
  CHECK(find(r, "t_com").sd <= find(r, "t_mle").sd);

  // same paths with the change point pinned at the truth
  RecoveryOptions fixed;
  fixed.fix_change_point = true;
  const auto f = run_recovery_study(s, fixed);
  CHECK(find(f, "t_com").sd == 0.0);
  const auto& k_free = find(r, "seg1.level");
  const auto& k_fixed = find(f, "seg1.level");
  CHECK(k_fixed.q95 - k_fixed.q05 < k_free.q95 - k_free.q05);
}

TEST_CASE("ramp recovery uses a continuous constant-ramp shape") {
  StudySpec s;
  s.scenario = Scenario::RampUp;
  s.replicates = 4;
  s.lambda0_set = {1.0};
  s.seed = 2;
  const auto r = run_recovery_study(s);
  CHECK(r.names == std::vector<std::string>{"lambda0", "beta", "seg0.level", "seg1.slope", "t_com", "t_map", "t_mle"});
  CHECK(r.truth[0][3] == 0.005);
  for (const auto& row : r.rows) CHECK_FALSE(row.error.has_value());
}

TEST_CASE("likelihood surface skew follows the step direction") {
  StudySpec s;
  s.replicates = 25;
  s.lambda0_set = {1.0};
  s.delta_grid_in_tau = {1.0, 16.0};
  s.seed = 3;
  s.scenario = Scenario::HighToLow;
  const auto down = run_surface_study(s);
  s.scenario = Scenario::LowToHigh;
  const auto up = run_surface_study(s);
  REQUIRE(down.windows.size() == 2);
  const auto& w = down.windows[0];
  CHECK(w.mean_surface.size() == w.kappa_grid.size() * w.tstar_grid.size());
  CHECK(*std::max_element(w.mean_surface.begin(), w.mean_surface.end()) <= 0.0);
  CHECK(w.tstar_grid.front() - 50.0 == doctest::Approx(50.0 - w.tstar_grid.back()).epsilon(1e-12));
  CHECK(w.mle.size() == 25);

  CHECK(down.windows[0].tail_asymmetry_tstar > 0.0);
  CHECK(up.windows[0].tail_asymmetry_tstar < 0.0);
  for (const auto* res : {&down, &up}) {
    CHECK(res->windows[1].mean_abs_com_map_kappa < res->windows[0].mean_abs_com_map_kappa);
  }
  CHECK(std::abs(up.windows[1].skew_kappa) < 0.3);
}

TEST_CASE("selection study bookkeeping") {
  StudySpec s;
  s.replicates = 2;
  s.lambda0_set = {1.0};
  s.horizon = 200.0;
  s.t_star = 100.0;
  s.seed = 8;
  SelectionOptions o;
  o.candidates = {"C", "CC"};
  o.mc_samples = 8;
  const auto a = run_selection_study(s, o);
  s.threads = 2;
  const auto b = run_selection_study(s, o);
  REQUIRE(a.rows.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(a.rows[i].arm == i / 2);
    CHECK_FALSE(a.rows[i].error.has_value());
    CHECK(a.rows[i].log_evidence == b.rows[i].log_evidence);
    const auto& le = a.rows[i].log_evidence;
    CHECK(a.rows[i].best == (le[0] >= le[1] ? "C" : "1_CP_CC"));
  }
  CHECK(a.accuracy_no_change >= 0.0);
  CHECK(a.accuracy_one_step <= 1.0);
}

TEST_CASE("short-regime study") {
  StudySpec s;
  s.replicates = 10;
  s.lambda0_set = {1.0};
  s.seed = 9;
  const auto rows = run_short_regime_study(s);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(r.failures == 0);
    CHECK(r.sd > 0.0);
  }
  ShortRegimeOptions wide;
  wide.widths_in_tau = {60.0};
  CHECK_THROWS_AS(run_short_regime_study(s, wide), DomainError);
}
