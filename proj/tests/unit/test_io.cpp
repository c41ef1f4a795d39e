#include <cmath>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "hawkes/io.hpp"
#include "hawkes/rng.hpp"
#include "hawkes/simulate.hpp"

using namespace hawkes;

namespace {

HawkesParams random_params(Rng& rng) {
  const double T = rng.uniform(20.0, 200.0);
  const std::size_t K = static_cast<std::size_t>(rng.uniform() * 3.0);
  std::vector<double> cps;
  for (std::size_t k = 0; k < K; ++k) cps.push_back(T * static_cast<double>(k + 1) / static_cast<double>(K + 1));
  std::vector<SegmentShape> segs;
  for (std::size_t j = 0; j <= K; ++j) {
    const double u = rng.uniform();
    if (u < 0.4) {
      segs.push_back(SegmentShape::constant(rng.uniform(0.05, 0.9)));
    } else if (u < 0.7) {
      segs.push_back(SegmentShape::ramp(rng.uniform(0.2, 0.6), rng.uniform(-1e-3, 1e-3)));
    } else {
      segs.push_back(SegmentShape::exponential(rng.uniform(0.1, 0.8), rng.uniform(0.1, 0.8), rng.uniform(0.01, 2.0)));
    }
  }
  HawkesParams p{rng.uniform(0.1, 5.0), rng.uniform(0.1, 5.0), ProductivityProfile(0.0, T, cps, segs)};
  p.variant = rng.uniform() < 0.5 ? Variant::VariableSusceptibility : Variant::VariableInfectivity;
  return p;
}

void check_same(const HawkesParams& a, const HawkesParams& b) {
  CHECK(a.lambda0 == b.lambda0);
  CHECK(a.beta == b.beta);
  CHECK(a.variant == b.variant);
  REQUIRE(a.profile.segment_count() == b.profile.segment_count());
  CHECK(a.profile.window_start() == b.profile.window_start());
  CHECK(a.profile.window_end() == b.profile.window_end());
  for (std::size_t k = 0; k < a.profile.change_points().size(); ++k) {
    CHECK(a.profile.change_points()[k] == b.profile.change_points()[k]);
  }
  for (std::size_t j = 0; j < a.profile.segment_count(); ++j) {
    CHECK(a.profile.segment(j).kind() == b.profile.segment(j).kind());
    CHECK(a.profile.segment(j).params() == b.profile.segment(j).params());
  }
  CHECK(a.profile.continuity_flags() == b.profile.continuity_flags());
}

}  // namespace

TEST_CASE("params JSON round trip is the identity") {
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    const auto p = random_params(rng);
    const Json j = to_json(p);
    CHECK(j.at("schema_version") == "1");
    const auto q = params_from_json(Json::parse(j.dump()));
    check_same(p, q);
    CHECK(to_json(q).dump() == j.dump());
  }
  const HawkesParams c{1.0, 2.0,
                       ProductivityProfile(0.0, 10.0, {5.0}, {SegmentShape::constant(0.5), SegmentShape::ramp(0.5, 0.01)},
                                           {true})};
  check_same(c, params_from_json(to_json(c)));
  Json bad = to_json(c);
  bad["schema_version"] = "2";
  CHECK_THROWS_AS(params_from_json(bad), ParseError);
  Json missing = to_json(c);
  missing.erase("beta");
  CHECK_THROWS_AS(params_from_json(missing), ParseError);
}

TEST_CASE("priors JSON") {
  PriorSpec p;
  p.beta_prior.sigma = 0.7;
  p.min_gap = 3.0;
  const auto q = priors_from_json(to_json(p));
  CHECK(q.beta_prior.sigma == 0.7);
  CHECK(q.min_gap == 3.0);
  const auto d = priors_from_json(Json::parse(R"({"kappa_level_prior": {"a": 3}})"));
  CHECK(d.kappa_level_prior.a == 3.0);
  CHECK(d.kappa_level_prior.b == 2.0);
  CHECK_FALSE(d.min_gap.has_value());
  CHECK_THROWS_AS(priors_from_json(Json::parse(R"({"beta_prior": {"sigma": -1}})")), ParseError);
}

TEST_CASE("fit result and evidence table round trip") {
  SimConfig c;
  c.params = {1.0, 1.0,
              ProductivityProfile(0.0, 60.0, {30.0}, {SegmentShape::constant(0.2), SegmentShape::constant(0.7)})};
  c.seed = 3;
  const auto ev = simulate(c);
  FitOptions fo;
  fo.grid.points = 40;
  const auto f = fit(ev, ModelShape::parse("CC"), PriorSpec{}, fo);
  const Json j = to_json(f);
  const auto g = fit_result_from_json(Json::parse(j.dump()));
  CHECK(to_json(g).dump() == j.dump());
  CHECK(g.shape == f.shape);
  CHECK(g.cp_com == f.cp_com);
  CHECK(g.trace.size() == f.trace.size());
  check_same(params_from_any_json(j), f.theta_hat);

  EvidenceTable t;
  t.records.push_back({"1_CP_CC", 1, 4, -12.5, 20, 0.25, {"w"}, std::nullopt});
  t.records.push_back({"3_CP_CCCC", 3, 6, -std::numeric_limits<double>::infinity(), 0, 0.0, {}, "no room"});
  const Json tj = to_json(t);
  CHECK(tj.at("records")[1].at("log_evidence").is_null());
  const auto u = evidence_table_from_json(Json::parse(tj.dump()));
  REQUIRE(u.records.size() == 2);
  CHECK(u.records[0].log_evidence == -12.5);
  CHECK(u.records[0].warnings == std::vector<std::string>{"w"});
  CHECK(std::isinf(u.records[1].log_evidence));
  CHECK(u.records[1].error == std::optional<std::string>("no room"));
  CHECK(to_json(u).dump() == tj.dump());
}

TEST_CASE("event CSV") {
  const EventSeq ev({0.1, 0.30000000000000004, 2.5, 1e-300 + 7.0}, 0.0, 8.0);
  std::stringstream ss;
  write_events_csv(ss, ev);
  const auto back = read_events_csv(ss, 0.0, 8.0);
  REQUIRE(back.size() == ev.size());
  for (std::size_t i = 0; i < ev.size(); ++i) CHECK(back[i] == ev[i]);
  CHECK(back.window_end() == 8.0);

  std::stringstream dflt("time\n1\n2.5\n");
  const auto d = read_events_csv(dflt);
  CHECK(d.window_start() == 0.0);
  CHECK(d.window_end() == 2.5);

  auto fails_at = [](const std::string& text, const std::string& needle) {
    std::stringstream in(text);
    try {
      read_events_csv(in);
    } catch (const ParseError& e) {
      return std::string(e.what()).find(needle) != std::string::npos;
    }
    return false;
  };
  CHECK(fails_at("time\n1\n3\n2\n", "line 4"));
  CHECK(fails_at("t\n1\n", "line 1"));
  CHECK(fails_at("time\n1\nabc\n", "line 3"));
  CHECK(fails_at("time\n-1\n", "line 2"));
  CHECK(fails_at("", "header"));
}

TEST_CASE("ISO dates") {
  CHECK(days_from_iso("1970-01-01") == 0);
  CHECK(days_from_iso("1969-12-31") == -1);
  CHECK(days_from_iso("2000-03-01") == 11017);
  CHECK(days_from_iso("2024-02-29") == 19782);
  CHECK_THROWS_AS(days_from_iso("2023-02-29"), ParseError);
  CHECK_THROWS_AS(days_from_iso("2023-13-01"), ParseError);
  CHECK_THROWS_AS(days_from_iso("2023/01/01"), ParseError);
  CHECK_THROWS_AS(days_from_iso("2023-01-011"), ParseError);
}

TEST_CASE("daily counts ingestion") {
  std::stringstream in("date,count\n2020-01-01,0\n2020-01-02,0\n");
  const auto zero = ingest_daily(read_daily_csv(in), 1);
  CHECK(zero.empty());
  CHECK(zero.window_end() == 2.0);

  const DailyCounts one{{"2021-06-01"}, {3}};
  const auto e1 = ingest_daily(one, 5);
  REQUIRE(e1.size() == 3);
  for (double t : e1.times()) {
    CHECK(t > 0.0);
    CHECK(t < 1.0);
  }

  // 348 counts spread over seven years of days
  DailyCounts many;
  Rng rng(2);
  std::int64_t total = 0;
  const std::int64_t start = days_from_iso("2008-01-01");
  for (std::int64_t d = 0; d < 7 * 365; ++d) {
    std::int64_t c = rng.uniform() < 0.12 ? 1 : 0;
    if (total + c > 348) c = 0;
    if (d == 7 * 365 - 1) c = 348 - total;
    total += c;
    // civil date back from the day number
    const std::int64_t z = start + d + 719468;
    const std::int64_t era = z / 146097;
    const std::int64_t doe = z - era * 146097;
    const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const std::int64_t mp = (5 * doy + 2) / 153;
    const std::int64_t dd = doy - (153 * mp + 2) / 5 + 1;
    const std::int64_t mm = mp < 10 ? mp + 3 : mp - 9;
    const std::int64_t yy = yoe + era * 400 + (mm <= 2 ? 1 : 0);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04lld-%02lld-%02lld", static_cast<long long>(yy), static_cast<long long>(mm),
                  static_cast<long long>(dd));
    many.dates.emplace_back(buf);
    many.counts.push_back(c);
  }
  const auto ev = ingest_daily(many, 9);
  CHECK(ev.size() == 348);
  CHECK(ev.window_end() == 7.0 * 365.0);
  const auto again = ingest_daily(many, 9);
  CHECK(std::equal(ev.times().begin(), ev.times().end(), again.times().begin()));
  const auto other = ingest_daily(many, 10);
  CHECK_FALSE(std::equal(ev.times().begin(), ev.times().end(), other.times().begin()));
  // each event lands inside its own day
  std::size_t k = 0;
  for (std::size_t d = 0; d < many.counts.size(); ++d) {
    for (std::int64_t c = 0; c < many.counts[d]; ++c, ++k) {
      CHECK(std::floor(ev[k]) == static_cast<double>(d));
    }
  }

  const DailyCounts neg{{"2021-06-01"}, {-1}};
  CHECK_THROWS_AS(ingest_daily(neg, 1), DomainError);
  std::stringstream badorder("date,count\n2020-01-02,1\n2020-01-01,1\n");
  CHECK_THROWS_AS(read_daily_csv(badorder), ParseError);
}
