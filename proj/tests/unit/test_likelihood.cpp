#include <cmath>

#include "doctest.h"
#include "hawkes/likelihood.hpp"
#include "hawkes/simulate.hpp"
#include "oracles.hpp"

using namespace hawkes;

namespace {

HawkesParams random_params(Rng& rng, double T, Variant v) {
  return {rng.uniform(0.3, 2.0), rng.uniform(0.3, 3.0), oracle::random_profile(rng, T, 3, 0.85), v};
}

EventSeq sample(const HawkesParams& p, std::uint64_t seed) {
  SimConfig c;
  c.params = p;
  c.seed = seed;
  return simulate(c);
}

// Rebuilds params from the flat smooth vector [lambda0, beta, segment params...].
HawkesParams unflatten(const HawkesParams& base, const std::vector<double>& x) {
  HawkesParams p = base;
  p.lambda0 = x[0];
  p.beta = x[1];
  std::vector<SegmentShape> segs;
  std::size_t o = 2;
  for (const auto& s : base.profile.segments()) {
    std::vector<double> q(x.begin() + static_cast<long>(o), x.begin() + static_cast<long>(o + s.param_count()));
    segs.push_back(SegmentShape::from_params(s.kind(), q));
    o += s.param_count();
  }
  p.profile = ProductivityProfile(base.profile.window_start(), base.profile.window_end(),
                                  {base.profile.change_points().begin(), base.profile.change_points().end()}, segs);
  return p;
}

std::vector<double> flatten(const HawkesParams& p) {
  std::vector<double> x{p.lambda0, p.beta};
  for (const auto& s : p.profile.segments()) {
    for (double v : s.params()) x.push_back(v);
  }
  return x;
}

}  // namespace

TEST_CASE("Poisson reduction") {
  const EventSeq ev({0.5, 1.7, 3.2}, 0.0, 5.0);
  const HawkesParams p{2.0, 1.0, ProductivityProfile::constant(0.0, 5.0, 0.0)};
  CHECK(loglik(ev, p) == doctest::Approx(3 * std::log(2.0) - 10.0).epsilon(1e-14));
  const auto g = loglik_grad(ev, p, std::vector<ParamId>{ParamId::lambda0()});
  CHECK(g.grad[0] == doctest::Approx(3.0 / 2.0 - 5.0).epsilon(1e-14));
}

TEST_CASE("segment compensator with an initial carry") {
  const EventSeq ev({}, 0.0, 2.0);
  const HawkesParams p{1.0, 1.0, ProductivityProfile::constant(0.0, 2.0, 0.5)};
  const auto r = segment_loglik(ev, p, 0, {1.0, 0.0});
  CHECK(-r.value == doctest::Approx(2.0 + 0.5 * (1.0 - std::exp(-2.0))).epsilon(1e-14));
  CHECK(-r.value == doctest::Approx(2.432332).epsilon(1e-6));
  CHECK(r.carry_out.S == doctest::Approx(std::exp(-2.0)));
  const double quad = numerics::integrate([](double t) { return 1.0 + 0.5 * std::exp(-t); }, 0.0, 2.0);
  CHECK(-r.value == doctest::Approx(quad).epsilon(1e-12));
}

TEST_CASE("closed-form likelihood matches the quadrature oracle") {
  Rng rng(2024);
  for (int rep = 0; rep < 10; ++rep) {
    for (auto v : {Variant::VariableSusceptibility, Variant::VariableInfectivity}) {
      const auto p = random_params(rng, 40.0, v);
      const auto ev = sample(p, static_cast<std::uint64_t>(rep));
      CHECK(loglik(ev, p) == doctest::Approx(oracle::quadrature_loglik(ev, p)).epsilon(1e-9));
      const CarryState c0{0.8, 0.0};
      CHECK(loglik(ev, p, c0) == doctest::Approx(oracle::quadrature_loglik(ev, p, 0.8)).epsilon(1e-9));
    }
  }
}

TEST_CASE("segment chaining equals the whole-window sweep") {
  Rng rng(77);
  for (int rep = 0; rep < 10; ++rep) {
    for (auto v : {Variant::VariableSusceptibility, Variant::VariableInfectivity}) {
      const auto p = random_params(rng, 60.0, v);
      const auto ev = sample(p, 100 + static_cast<std::uint64_t>(rep));
      const double whole = loglik(ev, p);
      CHECK(std::abs(loglik_by_segments(ev, p) - whole) < 1e-10 * std::max(1.0, std::abs(whole)));
      // carry at a boundary reproduces the tail segment's contribution
      const double g = p.profile.change_points()[0];
      const auto c = carry_at(ev, p, g);
      double tail = 0.0;
      CarryState cc = c;
      for (std::size_t j = 1; j < p.profile.segment_count(); ++j) {
        const auto r = segment_loglik(ev, p, j, cc);
        tail += r.value;
        cc = r.carry_out;
      }
      CHECK(segment_loglik(ev, p, 0, {0.0, 0.0}).value + tail == doctest::Approx(whole).epsilon(1e-12));
    }
  }
}

TEST_CASE("shift invariance") {
  Rng rng(3);
  const auto p = random_params(rng, 30.0, Variant::VariableSusceptibility);
  const auto ev = sample(p, 1);
  HawkesParams q = p;
  std::vector<double> cps;
  for (double g : p.profile.change_points()) cps.push_back(g + 12.5);
  q.profile = ProductivityProfile(12.5, 42.5, cps, {p.profile.segments().begin(), p.profile.segments().end()});
  CHECK(loglik(ev.shifted(12.5), q) == doctest::Approx(loglik(ev, p)).epsilon(1e-11));
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng(555);
  for (int rep = 0; rep < 8; ++rep) {
    for (auto v : {Variant::VariableSusceptibility, Variant::VariableInfectivity}) {
      const auto p = random_params(rng, 40.0, v);
      const auto ev = sample(p, 300 + static_cast<std::uint64_t>(rep));
      const auto g = loglik_grad(ev, p);
      const auto x = flatten(p);
      REQUIRE(g.grad.size() == x.size());
      CHECK(g.value == doctest::Approx(loglik(ev, p)).epsilon(1e-13));
      auto f = [&](const std::vector<double>& y) { return loglik(ev, unflatten(p, y)); };
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double fd = oracle::central_diff(f, x, i);
        CHECK(std::abs(g.grad[i] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
      }
    }
  }
  const auto p = random_params(rng, 10.0, Variant::VariableSusceptibility);
  const std::vector<ParamId> cp{ParamId::change_point(0)};
  CHECK_THROWS_AS(loglik_grad(EventSeq({1.0}, 0.0, 10.0), p, cp), UnsupportedParameter);
  const std::vector<ParamId> sel{ParamId::beta(), ParamId::segment_param(1, 0)};
  const auto full = loglik_grad(EventSeq({1.0, 4.0}, 0.0, 10.0), p);
  const auto part = loglik_grad(EventSeq({1.0, 4.0}, 0.0, 10.0), p, sel);
  CHECK(part.grad[0] == full.grad[1]);
  CHECK(part.grad[1] == full.grad[2 + p.profile.segment(0).param_count()]);
}

TEST_CASE("change-point profile under both variants") {
  const EventSeq ev({1.0, 2.2, 3.1, 4.0, 5.5, 6.1, 7.4, 8.0, 9.3}, 0.0, 12.0);
  const ProductivityProfile prof(0.0, 12.0, {5.0}, {SegmentShape::constant(0.75), SegmentShape::constant(0.25)});
  const HawkesParams vs{1.0, 1.0, prof, Variant::VariableSusceptibility};
  const HawkesParams vi{1.0, 1.0, prof, Variant::VariableInfectivity};
  const double eps = 1e-9;
  // across the event at 5.5
  const std::vector<double> g{5.5 - eps, 5.5 + eps, 5.8 - eps, 5.8 + eps};
  const auto a = profile_changepoint(ev, vs, g, 0);
  CHECK(std::abs(a[1].loglik - a[0].loglik) > 1e-3);
  CHECK(std::abs(a[3].loglik - a[2].loglik) < 1e-6);
  const auto b = profile_changepoint(ev, vi, g, 0);
  // between events the infectivity profile does not move at all
  CHECK(std::abs(b[3].loglik - b[2].loglik) < 1e-12);
  const auto b2 = profile_changepoint(ev, vi, std::vector<double>{5.6, 5.7, 5.9}, 0);
  CHECK(b2[0].loglik == doctest::Approx(b2[2].loglik).epsilon(1e-14));
  // at an event it jumps: kappa(t_i) switches regime for that parent
  CHECK(std::abs(b[1].loglik - b[0].loglik) > 1e-3);

  const ProductivityProfile flat(0.0, 12.0, {5.0}, {SegmentShape::constant(0.4), SegmentShape::constant(0.4)});
  std::vector<double> grid;
  for (double x = 2.0; x < 10.0; x += 0.37) grid.push_back(x);
  const auto c = profile_changepoint(ev, HawkesParams{1.0, 1.0, flat}, grid, 0);
  for (const auto& pt : c) CHECK(pt.loglik == doctest::Approx(c[0].loglik).epsilon(1e-13));

  CHECK_THROWS_AS(profile_changepoint(ev, vs, std::vector<double>{6.0, 5.0}, 0), DomainError);
  CHECK_THROWS_AS(profile_changepoint(ev, vs, std::vector<double>{13.0}, 0), DomainError);
}

TEST_CASE("non-finite parameters are rejected") {
  const EventSeq ev({1.0}, 0.0, 2.0);
  HawkesParams p{std::nan(""), 1.0, ProductivityProfile::constant(0.0, 2.0, 0.3)};
  CHECK_THROWS_AS(loglik(ev, p), DomainError);
}
