#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace hawkes::numerics {

using ScalarFn = std::function<double(double)>;

// Adaptive Gauss-Kronrod (61-point) on [a, b]; b may be +infinity.
double integrate(const ScalarFn& f, double a, double b, double abs_tol = 1e-12);

// log(sum(exp(x))); -inf for all -inf inputs.
double log_sum_exp(std::span<const double> x);

// Root of f on [lo, hi] with a sign change.
double find_root(const ScalarFn& f, double lo, double hi, double tol = 1e-13);

// ∫_0^h u^p e^{-q u} du for p in {0,1,2,3}, q > 0, accurate for small q*h.
double exp_moment(int p, double q, double h);

struct LbfgsOptions {
  int max_iterations = 200;
  int memory = 8;
  double gradient_tolerance = 1e-8;   // on max |g| / max(1, |f|)
  double function_tolerance = 1e-14;  // relative decrease over `past` iterations
  int past = 3;
};

struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

// Minimises f. The objective writes its gradient into the second argument and
// may return +inf/NaN to reject a trial point.
using Objective = std::function<double(std::span<const double>, std::span<double>)>;

LbfgsResult minimize_lbfgs(const Objective& f, std::vector<double> x0, const LbfgsOptions& opt = {});

}  // namespace hawkes::numerics
