#include <cmath>

#include "doctest.h"
#include "hawkes/meanfield.hpp"
#include "hawkes/simulate.hpp"
#include "oracles.hpp"

using namespace hawkes;

namespace {

SimConfig constant_config(double lambda0, double kappa, double T, Variant v = Variant::VariableSusceptibility) {
  SimConfig c;
  c.params = {lambda0, 1.0, ProductivityProfile::constant(0.0, T, kappa), v};
  c.seed = 20240611;
  return c;
}

}  // namespace

TEST_CASE("filtered_sum matches direct sums") {
  CHECK(filtered_sum(EventSeq({4.0}, 0.0, 10.0), 1.0, 5.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(filtered_sum(EventSeq({3.0, 4.0}, 0.0, 10.0), 1.0, 5.0) ==
        doctest::Approx(std::exp(-2.0) + std::exp(-1.0)).epsilon(1e-15));
  CHECK(filtered_sum(EventSeq({}, 0.0, 10.0), 1.0, 5.0) == 0.0);
  // t_i = t is excluded
  CHECK(filtered_sum(EventSeq({3.0, 5.0}, 0.0, 10.0), 2.0, 5.0) == doctest::Approx(2.0 * std::exp(-4.0)));
}

TEST_CASE("kappa = 0 reduces to a homogeneous Poisson process") {
  const auto ev = simulate(constant_config(2.0, 0.0, 1000.0));
  CHECK(std::abs(static_cast<double>(ev.size()) - 2000.0) < 3.0 * std::sqrt(2000.0));
}

TEST_CASE("simulation is deterministic per (seed, replicate)") {
  const auto c = constant_config(1.0, 0.5, 100.0);
  const auto a = simulate(c, 3);
  const auto b = simulate(c, 3);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  const auto reps1 = simulate_replicates(c, 6, 1);
  const auto reps3 = simulate_replicates(c, 6, 3);
  for (std::size_t r = 0; r < 6; ++r) {
    REQUIRE(reps1[r].size() == reps3[r].size());
    CHECK(reps1[r].size() == simulate(c, r).size());
  }
  CHECK(simulate(c, 0).size() != simulate(c, 1).size());
}

TEST_CASE("mean counts agree with the mean-field compensator") {
  const double T = 200.0;
  const auto c = constant_config(1.0, 0.5, T);
  const auto reps = simulate_replicates(c, 500, 1);
  std::vector<double> counts;
  for (const auto& r : reps) counts.push_back(static_cast<double>(r.size()));
  // ∫ lambda_bar with M(0) = 0, by quadrature of the exact mean path
  std::vector<double> grid;
  for (int i = 0; i <= 2000; ++i) grid.push_back(T * i / 2000.0);
  const auto path = solve_mean_ode(c.params, 0.0, grid);
  double integral = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    integral += 0.5 * (path.lambda_bar[i] + path.lambda_bar[i - 1]) * (grid[i] - grid[i - 1]);
  }
  const double se = std::sqrt(oracle::variance(counts) / counts.size());
  CHECK(std::abs(oracle::mean(counts) - integral) < 3.0 * se);
}

TEST_CASE("both variants agree for constant kappa") {
  const double T = 200.0;
  const auto vs = simulate_replicates(constant_config(1.0, 0.6, T), 300, 1);
  auto ci = constant_config(1.0, 0.6, T, Variant::VariableInfectivity);
  ci.seed = 99;
  const auto vi = simulate_replicates(ci, 300, 1);
  std::vector<double> a, b;
  for (const auto& r : vs) a.push_back(static_cast<double>(r.size()));
  for (const auto& r : vi) b.push_back(static_cast<double>(r.size()));
  const double se = std::sqrt(oracle::variance(a) / a.size() + oracle::variance(b) / b.size());
  CHECK(std::abs(oracle::mean(a) - oracle::mean(b)) < 3.5 * se);
}

TEST_CASE("filtered sum is non-degenerate across replicates") {
  const auto reps = simulate_replicates(constant_config(1.0, 0.5, 50.0), 200, 1);
  std::vector<double> z;
  for (const auto& r : reps) z.push_back(filtered_sum(r, 1.0, 50.0));
  CHECK(oracle::variance(z) > 0.0);
}

TEST_CASE("ramp and exponential profiles reproduce the mean-field count") {
  const double T = 100.0;
  SimConfig c;
  c.params = {1.0, 1.0,
              ProductivityProfile(0.0, T, {50.0},
                                  {SegmentShape::exponential(0.2, 0.7, 0.1), SegmentShape::ramp(0.25, 0.005)})};
  c.seed = 7;
  const auto reps = simulate_replicates(c, 400, 1);
  std::vector<double> counts;
  for (const auto& r : reps) counts.push_back(static_cast<double>(r.size()));
  std::vector<double> grid;
  for (int i = 0; i <= 4000; ++i) grid.push_back(T * i / 4000.0);
  const auto path = solve_mean_ode(c.params, 0.0, grid);
  double integral = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    integral += 0.5 * (path.lambda_bar[i] + path.lambda_bar[i - 1]) * (grid[i] - grid[i - 1]);
  }
  const double se = std::sqrt(oracle::variance(counts) / counts.size());
  CHECK(std::abs(oracle::mean(counts) - integral) < 3.0 * se);
}

TEST_CASE("history excites the window") {
  auto c = constant_config(0.5, 0.5, 5.0);
  c.history = EventSeq({-0.3, -0.2, -0.1}, -1.0, 0.0);
  std::vector<double> with, without;
  for (std::uint64_t r = 0; r < 300; ++r) with.push_back(static_cast<double>(simulate(c, r).size()));
  c.history.reset();
  for (std::uint64_t r = 0; r < 300; ++r) without.push_back(static_cast<double>(simulate(c, r).size()));
  CHECK(oracle::mean(with) > oracle::mean(without) + 1.0);
}

TEST_CASE("supercritical runs hit the event cap") {
  auto c = constant_config(1.0, 2.0, 100.0);
  c.max_events = 100000;
  int exploded = 0;
  for (std::uint64_t r = 0; r < 10; ++r) {
    try {
      simulate(c, r);
    } catch (const ExplosionError& e) {
      ++exploded;
      CHECK(e.time_reached() < 100.0);
      CHECK(e.events() > 100000);
    }
  }
  CHECK(exploded >= 9);
}
