#include <cmath>

#include "doctest.h"
#include "hawkes/evidence.hpp"
#include "hawkes/simulate.hpp"
#include "oracles.hpp"

using namespace hawkes;

namespace {

EventSeq sample(const HawkesParams& p, std::uint64_t seed) {
  SimConfig c;
  c.params = p;
  c.seed = seed;
  return simulate(c);
}

}  // namespace

TEST_CASE("prior change-point draws respect the gaps and are uniform") {
  Rng rng(1);
  std::vector<double> first;
  for (int i = 0; i < 4000; ++i) {
    const auto c = sample_change_points(rng, 2, 0.0, 30.0, 5.0);
    REQUIRE(c.size() == 2);
    CHECK(c[0] >= 5.0);
    CHECK(c[1] - c[0] >= 5.0 - 1e-12);
    CHECK(c[1] <= 25.0);
    first.push_back(c[0]);
  }
  // oracle: rejection sampling from the unconstrained uniform square
  Rng r2(2);
  std::vector<double> ref;
  while (ref.size() < 4000) {
    double a = r2.uniform(0.0, 30.0);
    double b = r2.uniform(0.0, 30.0);
    if (a > b) std::swap(a, b);
    if (a >= 5.0 && b - a >= 5.0 && b <= 25.0) ref.push_back(a);
  }
  const double se = std::sqrt(oracle::variance(first) / 4000.0 + oracle::variance(ref) / 4000.0);
  CHECK(std::abs(oracle::mean(first) - oracle::mean(ref)) < 4.0 * se);
  CHECK_THROWS_AS(sample_change_points(rng, 3, 0.0, 10.0, 5.0), DomainError);
}

TEST_CASE("log-mean-exp is shift-equivariant and stable") {
  const std::vector<double> t{-1.0, 0.5, 2.0, -3.0};
  double direct = 0.0;
  for (double v : t) direct += std::exp(v);
  const auto e = log_mean_exp(t);
  CHECK(e.log_evidence == doctest::Approx(std::log(direct / 4.0)).epsilon(1e-14));
  CHECK(e.std_err >= 0.0);
  CHECK(e.c_max == 2.0);
  for (double c : {-1e4, 1e4, 37.5}) {
    std::vector<double> s;
    for (double v : t) s.push_back(v + c);
    const auto f = log_mean_exp(s);
    CHECK(std::isfinite(f.log_evidence));
    CHECK(f.log_evidence - c == doctest::Approx(e.log_evidence).epsilon(1e-12));
    CHECK(f.std_err == doctest::Approx(e.std_err).epsilon(1e-12));
  }
  const double ninf = -std::numeric_limits<double>::infinity();
  CHECK(log_mean_exp(std::vector<double>{ninf, 0.0}).log_evidence == doctest::Approx(std::log(0.5)));
  CHECK_THROWS_AS(log_mean_exp(std::vector<double>{ninf, ninf}), DomainError);
  CHECK(log_mean_exp(std::vector<double>{3.0}).std_err == 0.0);
  // a larger penalty on identical fits lowers the estimate
  std::vector<double> p1, p2;
  for (double v : t) {
    p1.push_back(v - 0.5 * 3 * std::log(200.0));
    p2.push_back(v - 0.5 * 4 * std::log(200.0));
  }
  CHECK(log_mean_exp(p2).log_evidence < log_mean_exp(p1).log_evidence);
}

TEST_CASE("structural prior") {
  CHECK(log_model_prior(1, 1.0) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(log_model_prior(3, 2.0) == doctest::Approx(std::log(std::exp(-2.0) * 8.0 / 6.0)).epsilon(1e-14));
  CHECK_THROWS_AS(log_model_prior(1, 0.0), DomainError);
}

TEST_CASE("evidence without change points needs no Monte Carlo") {
  const HawkesParams truth{1.0, 1.0, ProductivityProfile::constant(0.0, 200.0, 0.5)};
  const auto ev = sample(truth, 12);
  const PriorSpec pri;
  EvidenceOptions a;
  a.seed = 1;
  EvidenceOptions b;
  b.seed = 99;
  const auto ra = integrated_evidence(ev, ModelShape::parse("C"), pri, a);
  const auto rb = integrated_evidence(ev, ModelShape::parse("C"), pri, b);
  CHECK(ra.log_evidence == rb.log_evidence);
  CHECK(ra.mc_samples == 0);
  CHECK(ra.p_M == 3);
  MapOptions mo;
  mo.max_iterations = 50;
  mo.laplace = false;
  const auto m = map_step(ev, initial_params(ev, ModelShape::parse("C"), pri), pri, mo);
  CHECK(ra.log_evidence ==
        doctest::Approx(m.objective - 1.5 * std::log(static_cast<double>(ev.size())) + log_model_prior(1, 1.0))
            .epsilon(1e-12));
}

TEST_CASE("selection table is deterministic and thread-independent") {
  const HawkesParams truth{1.0, 1.0,
                           ProductivityProfile(0.0, 200.0, {100.0},
                                               {SegmentShape::constant(0.25), SegmentShape::constant(0.75)})};
  const auto ev = sample(truth, 8);
  const PriorSpec pri;
  const std::vector<ModelShape> cands{ModelShape::parse("C"), ModelShape::parse("CC"), ModelShape::parse("CC"),
                                      ModelShape::parse("CRC")};
  EvidenceOptions o;
  o.mc_samples = 20;
  o.seed = 5;
  o.threads = 1;
  const auto t1 = select(ev, cands, pri, o);
  o.threads = 3;
  const auto t3 = select(ev, cands, pri, o);
  REQUIRE(t1.records.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(t1.records[i].name == t3.records[i].name);
    CHECK(t1.records[i].log_evidence == t3.records[i].log_evidence);
    CHECK(t1.records[i].mc_std_err >= 0.0);
    if (i > 0) CHECK(t1.records[i - 1].log_evidence >= t1.records[i].log_evidence);
  }
  // duplicate candidates give identical rows
  std::vector<const EvidenceRecord*> cc;
  for (const auto& r : t1.records) {
    if (r.name == "1_CP_CC") cc.push_back(&r);
  }
  REQUIRE(cc.size() == 2);
  CHECK(cc[0]->log_evidence == cc[1]->log_evidence);
  // a clear step beats the single-regime model
  double c = 0.0, step = 0.0;
  for (const auto& r : t1.records) {
    if (r.name == "C") c = r.log_evidence;
    if (r.name == "1_CP_CC") step = r.log_evidence;
  }
  CHECK(step > c);

  // errors are recorded per row
  const EventSeq tiny({1.0, 2.0}, 0.0, 10.0);
  const auto te = select(tiny, std::vector<ModelShape>{ModelShape::parse("C"), ModelShape::parse("3_CP_CCCC")}, pri, o);
  CHECK_FALSE(te.records[0].error.has_value());
  CHECK(te.records[1].error.has_value());
}
