#include <cmath>

#include "doctest.h"
#include "hawkes/estimate.hpp"
#include "hawkes/numerics.hpp"
#include "hawkes/simulate.hpp"
#include "oracles.hpp"

using namespace hawkes;

namespace {

HawkesParams step_truth(double k1, double k2, double T = 100.0) {
  return {1.0, 1.0,
          ProductivityProfile(0.0, T, {T / 2}, {SegmentShape::constant(k1), SegmentShape::constant(k2)})};
}

EventSeq sample(const HawkesParams& p, std::uint64_t seed, std::uint64_t rep = 0) {
  SimConfig c;
  c.params = p;
  c.seed = seed;
  return simulate(c, rep);
}

}  // namespace

TEST_CASE("model shape names") {
  const auto s = ModelShape::parse("2_CP_CRC");
  CHECK(s.kinds == "CRC");
  CHECK(s.change_point_count() == 2);
  CHECK(s.name() == "2_CP_CRC");
  CHECK(ModelShape::parse("CRC") == s);
  CHECK(ModelShape::parse("C").name() == "C");
  CHECK(ModelShape::parse("CC").name() == "1_CP_CC");
  CHECK(s.resolved_continuity() == std::vector<bool>{true, true});
  CHECK(ModelShape::parse("CCE").resolved_continuity() == std::vector<bool>{false, true});
  CHECK_THROWS_AS(ModelShape::parse("1_CP_CRC"), DomainError);
  CHECK_THROWS_AS(ModelShape::parse("CXC"), DomainError);
  CHECK_THROWS_AS(ModelShape::parse(""), DomainError);
}

TEST_CASE("L-BFGS minimises the Rosenbrock function") {
  auto f = [](std::span<const double> x, std::span<double> g) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  numerics::LbfgsOptions o;
  o.max_iterations = 500;
  const auto r = numerics::minimize_lbfgs(f, {-1.2, 1.0}, o);
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("packer round trip and continuity elimination") {
  const ProductivityProfile prof(0.0, 100.0, {30.0, 70.0},
                                 {SegmentShape::constant(0.6), SegmentShape::ramp(0.6, -0.005), SegmentShape::constant(0.4)},
                                 {true, true});
  const HawkesParams p{1.3, 0.8, prof.with_continuity_applied()};
  const ParamPacker pk(p);
  CHECK(pk.names() == std::vector<std::string>{"lambda0", "beta", "seg0.level", "seg1.slope"});
  const auto y = pk.pack(p);
  const auto q = pk.unpack(y);
  CHECK(q.lambda0 == doctest::Approx(1.3).epsilon(1e-14));
  CHECK(q.profile.segment(2).params()[0] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(q.profile.kappa(70.0) == doctest::Approx(q.profile.kappa_right(70.0)).epsilon(1e-12));
  // ramp leaving (0, 1) is inadmissible
  auto bad = pk.natural(p);
  bad[3] = 0.02;
  CHECK_FALSE(pk.admissible(pk.from_natural(bad)));
  CHECK(std::isinf(pk.objective(EventSeq({1.0}, 0.0, 100.0), pk.from_natural(bad), PriorSpec{})));
}

TEST_CASE("objective gradient matches central differences through continuity") {
  Rng rng(8);
  const PriorSpec pri;
  for (const char* kinds : {"CRC", "CEC", "RE", "CC"}) {
    const auto shape = ModelShape::parse(kinds);
    const std::size_t K = shape.change_point_count();
    std::vector<double> cps;
    for (std::size_t k = 0; k < K; ++k) cps.push_back(60.0 * (k + 1) / (K + 1));
    std::vector<SegmentShape> segs;
    for (char c : shape.kinds) {
      if (c == 'C') segs.push_back(SegmentShape::constant(rng.uniform(0.2, 0.6)));
      if (c == 'R') segs.push_back(SegmentShape::ramp(rng.uniform(0.3, 0.5), rng.uniform(-0.004, 0.004)));
      if (c == 'E') segs.push_back(SegmentShape::exponential(rng.uniform(0.2, 0.5), rng.uniform(0.2, 0.5), 0.2));
    }
    const HawkesParams truth{1.0, 1.2,
                             ProductivityProfile(0.0, 60.0, cps, segs, shape.resolved_continuity()).with_continuity_applied()};
    const auto ev = sample(truth, 41);
    const ParamPacker pk(truth);
    std::vector<double> g;
    const double v = pk.objective(ev, truth, pri, &g);
    REQUIRE(std::isfinite(v));
    const auto x = pk.natural(truth);
    auto f = [&](const std::vector<double>& z) { return pk.objective(ev, pk.from_natural(z), pri); };
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double fd = oracle::central_diff(f, x, i);
      CHECK(std::abs(g[i] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("Poisson MLE under a flat prior") {
  const EventSeq ev = sample({2.0, 1.0, ProductivityProfile::constant(0.0, 50.0, 0.0)}, 3);
  PriorSpec flat;
  flat.lambda0_prior.sigma = 1e6;
  MapOptions o;
  o.held = {ParamId::beta(), ParamId::segment_param(0, 0)};
  const auto r = map_step(ev, {1.0, 1.0, ProductivityProfile::constant(0.0, 50.0, 0.0)}, flat, o);
  const double mle = static_cast<double>(ev.size()) / 50.0;
  // the lognormal density shifts the mode by O(1/sigma^2) only
  CHECK(std::abs(r.params.lambda0 - mle) < 1e-6);
  CHECK(r.names == std::vector<std::string>{"lambda0"});
}

TEST_CASE("MAP step never decreases the objective") {
  Rng rng(123);
  const PriorSpec pri;
  const auto truth = step_truth(0.25, 0.75);
  const auto ev = sample(truth, 9);
  MapOptions o;
  o.laplace = false;
  for (int rep = 0; rep < 100; ++rep) {
    HawkesParams start = truth;
    start.lambda0 = std::exp(rng.uniform(-1.5, 1.5));
    start.beta = std::exp(rng.uniform(-1.5, 1.5));
    start.profile = truth.profile.with_segments(
        {SegmentShape::constant(rng.uniform(0.05, 0.95)), SegmentShape::constant(rng.uniform(0.05, 0.95))});
    const ParamPacker pk(start);
    const double before = pk.objective(ev, start, pri);
    const auto r = map_step(ev, start, pri, o);
    CHECK(r.objective >= before);
    CHECK(r.objective == doctest::Approx(pk.objective(ev, r.params, pri)).epsilon(1e-12));
  }
}

TEST_CASE("MAP with a known change point is calibrated") {
  const auto truth = step_truth(0.25, 0.75);
  const PriorSpec pri;
  int covered = 0;
  int total = 0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    const auto ev = sample(truth, 2024, rep);
    const auto r = map_step(ev, truth, pri);
    REQUIRE(r.laplace_sd.size() == 4);
    const std::vector<double> x{r.params.lambda0, r.params.beta, r.params.profile.segment(0).params()[0],
                                r.params.profile.segment(1).params()[0]};
    const std::vector<double> t{1.0, 1.0, 0.25, 0.75};
    bool all = true;
    for (std::size_t i = 0; i < 4; ++i) all = all && std::abs(x[i] - t[i]) <= 3.0 * r.laplace_sd[i];
    covered += all ? 1 : 0;
    ++total;
  }
  CHECK(covered >= 90);
}

TEST_CASE("centre of mass on a grid") {
  const auto g = normalise_grid({1.0, 2.0, 3.0}, {0.0, 0.0, 0.0});
  CHECK(centre_of_mass(g) == doctest::Approx(2.0).epsilon(1e-15));
  const double ninf = -std::numeric_limits<double>::infinity();
  const auto d = normalise_grid({1.0, 2.0, 3.0}, {ninf, 5.0, ninf});
  CHECK(centre_of_mass(d) == 2.0);
  const auto a = normalise_grid({0.0, 0.4, 1.0, 2.5, 3.0}, {-1.0, 0.3, 2.0, -0.5, 1.0});
  const auto b = normalise_grid({0.0, 0.4, 1.0, 2.5, 3.0}, {1e4 - 1.0, 1e4 + 0.3, 1e4 + 2.0, 1e4 - 0.5, 1e4 + 1.0});
  CHECK(centre_of_mass(a) == doctest::Approx(centre_of_mass(b)).epsilon(1e-13));
  double s = 0.0;
  for (double w : a.weights) {
    CHECK(w >= 0.0);
    s += w;
  }
  CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(normalise_grid({1.0, 2.0}, {ninf, ninf}), DomainError);
}

TEST_CASE("CoM step stays inside the admissible range") {
  const auto truth = step_truth(0.75, 0.25);
  const auto ev = sample(truth, 5);
  GridSpec gs;
  gs.min_gap = 5.0;
  const auto r = com_step(ev, truth, PriorSpec{}, gs);
  REQUIRE(r.cp_com.size() == 1);
  CHECK(r.cp_com[0] >= 5.0);
  CHECK(r.cp_com[0] <= 95.0);
  CHECK(r.grids[0].candidates.size() > 200);
  CHECK(std::abs(r.cp_com[0] - 50.0) < 15.0);
  double s = 0.0;
  for (double w : r.grids[0].weights) s += w;
  CHECK(s == doctest::Approx(1.0));

  // two change points, Gauss-Seidel sweep keeps order and gaps
  const HawkesParams two{1.0, 1.0,
                         ProductivityProfile(0.0, 100.0, {30.0, 70.0},
                                             {SegmentShape::constant(0.2), SegmentShape::constant(0.7),
                                              SegmentShape::constant(0.3)})};
  const auto r2 = com_step(sample(two, 6), two, PriorSpec{}, gs);
  CHECK(r2.cp_com[1] - r2.cp_com[0] >= 5.0 - 1e-12);
  CHECK(r2.cp_com[0] >= 5.0);
}

TEST_CASE("fit with no change points is a single MAP step") {
  const HawkesParams truth{1.0, 1.0, ProductivityProfile::constant(0.0, 100.0, 0.5)};
  const auto ev = sample(truth, 17);
  const PriorSpec pri;
  const auto f = fit(ev, ModelShape::parse("C"), pri);
  const auto m = map_step(ev, initial_params(ev, ModelShape::parse("C"), pri), pri);
  CHECK(f.objective == m.objective);
  CHECK(f.theta_hat.lambda0 == m.params.lambda0);
  CHECK(f.iterations == 1);
  CHECK(f.cp_com.empty());
}

TEST_CASE("alternating fit recovers a step and is a fixed point") {
  const auto truth = step_truth(0.25, 0.75);
  const auto ev = sample(truth, 31);
  const PriorSpec pri;
  const auto f = fit(ev, ModelShape::parse("CC"), pri);
  CHECK(f.converged);
  REQUIRE(f.cp_com.size() == 1);
  CHECK(std::abs(f.cp_com[0] - 50.0) < 15.0);
  CHECK(f.theta_hat.profile.change_points()[0] == f.cp_com[0]);
  CHECK(f.trace.size() == static_cast<std::size_t>(f.iterations));
  CHECK(f.laplace_sd.size() == f.param_names.size());
  // MAP ascent along the trace: theta^{r+1} beats theta^r at the same change points
  for (std::size_t r = 1; r < f.trace.size(); ++r) {
    HawkesParams prev = f.trace[r - 1].params;
    prev.profile = prev.profile.with_change_points(
        {f.trace[r].params.profile.change_points().begin(), f.trace[r].params.profile.change_points().end()});
    const ParamPacker pk(prev);
    CHECK(f.trace[r].objective >= pk.objective(ev, prev, pri) - 1e-9);
  }
  FitOptions again;
  again.warm_start = f.theta_hat;
  const auto g = fit(ev, ModelShape::parse("CC"), pri, again);
  CHECK(std::abs(g.objective - f.objective) < 1e-8);

  FitOptions fixed;
  fixed.fixed_change_points = std::vector<double>{50.0};
  const auto h = fit(ev, ModelShape::parse("CC"), pri, fixed);
  CHECK(h.cp_com[0] == 50.0);
  CHECK(h.iterations == 1);
}

TEST_CASE("fit handles empty data and flags supercritical requests") {
  const EventSeq none({}, 0.0, 100.0);
  const PriorSpec pri;
  const auto f = fit(none, ModelShape::parse("CC"), pri);
  CHECK(f.param_names == std::vector<std::string>{"lambda0"});
  CHECK_FALSE(f.warnings.empty());
  CHECK(f.theta_hat.lambda0 > 0.0);

  const auto ev = sample(step_truth(0.4, 0.6), 3);
  FitOptions o;
  o.allow_supercritical = true;
  o.max_outer = 3;
  const auto s = fit(ev, ModelShape::parse("CC"), pri, o);
  CHECK_FALSE(s.warnings.empty());
  FitOptions vi;
  vi.variant = Variant::VariableInfectivity;
  vi.max_outer = 5;
  const auto v = fit(sample({1.0, 1.0, step_truth(0.4, 0.6).profile, Variant::VariableInfectivity}, 4),
                     ModelShape::parse("CC"), pri, vi);
  CHECK(v.theta_hat.variant == Variant::VariableInfectivity);
  CHECK(std::isfinite(v.objective));
}
