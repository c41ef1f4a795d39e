#include "hawkes/numerics.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace hawkes::numerics {

namespace {

double integrate_impl(const ScalarFn& f, double a, double b, double abs_tol, int depth) {
  using boost::math::quadrature::gauss_kronrod;
  double error = 0.0;
  double l1 = 0.0;
  const double value = gauss_kronrod<double, 61>::integrate(f, a, b, 8, 1e-10, &error, &l1);
  // Boost's target is relative to the L1 norm; bisect when the absolute
  // target is missed as well. Pieces narrower than the abscissa roundoff
  // scale cannot improve.
  const bool resolvable = (b - a) > 1e-6 * std::max(1.0, std::abs(a));
  if (depth < 6 && std::isfinite(b) && resolvable && error > abs_tol && error > 1e-10 * l1) {
    const double mid = 0.5 * (a + b);
    return integrate_impl(f, a, mid, 0.5 * abs_tol, depth + 1) +
           integrate_impl(f, mid, b, 0.5 * abs_tol, depth + 1);
  }
  return value;
}

}  // namespace

double integrate(const ScalarFn& f, double a, double b, double abs_tol) {
  if (a == b) return 0.0;
  if (b < a) return -integrate(f, b, a, abs_tol);
  return integrate_impl(f, a, b, abs_tol, 0);
}

double log_sum_exp(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

double find_root(const ScalarFn& f, double lo, double hi, double tol) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0.0) == (fhi > 0.0)) throw std::domain_error("find_root: no sign change on bracket");
  boost::uintmax_t iters = 200;
  auto term = [tol](double a, double b) { return std::abs(b - a) <= tol * std::max(1.0, std::abs(a)); };
  auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, term, iters);
  return 0.5 * (r.first + r.second);
}

double exp_moment(int p, double q, double h) {
  const double x = q * h;
  if (x < 0.5) {
    // h^{p+1} * sum_k (-x)^k / (k! (p+k+1))
    double term = 1.0;
    double sum = 0.0;
    for (int k = 0; k < 40; ++k) {
      const double add = term / (p + k + 1);
      sum += add;
      if (std::abs(add) < 1e-18 * std::abs(sum)) break;
      term *= -x / (k + 1);
    }
    return std::pow(h, p + 1) * sum;
  }
  const double e = std::exp(-x);
  switch (p) {
    case 0:
      return -std::expm1(-x) / q;
    case 1:
      return (1.0 - e * (1.0 + x)) / (q * q);
    case 2:
      return (2.0 - e * (2.0 + 2.0 * x + x * x)) / (q * q * q);
    case 3:
      return (6.0 - e * (6.0 + 6.0 * x + 3.0 * x * x + x * x * x)) / (q * q * q * q);
    default:
      throw std::invalid_argument("exp_moment: p must be in 0..3");
  }
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

LbfgsResult minimize_lbfgs(const Objective& f, std::vector<double> x0, const LbfgsOptions& opt) {
  const std::size_t n = x0.size();
  LbfgsResult res;
  res.x = std::move(x0);
  std::vector<double> g(n), gnew(n), xnew(n), d(n);
  double fx = f(res.x, g);
  res.evaluations = 1;
  if (!std::isfinite(fx)) throw std::domain_error("minimize_lbfgs: objective not finite at start");
  if (n == 0) {
    res.value = fx;
    res.converged = true;
    return res;
  }

  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::deque<double> f_hist{fx};

  for (int it = 0; it < opt.max_iterations; ++it) {
    if (max_abs(g) / std::max(1.0, std::abs(fx)) < opt.gradient_tolerance) {
      res.converged = true;
      break;
    }
    // two-loop recursion
    for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * dot(s_hist[k], d);
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[k] * y_hist[k][i];
    }
    if (!s_hist.empty()) {
      const auto& s = s_hist.back();
      const auto& y = y_hist.back();
      const double gamma = dot(s, y) / dot(y, y);
      for (double& v : d) v *= gamma;
    } else {
      const double gm = max_abs(g);
      if (gm > 0.0) {
        for (double& v : d) v /= std::max(1.0, gm);
      }
    }
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * dot(y_hist[k], d);
      for (std::size_t i = 0; i < n; ++i) d[i] += s_hist[k][i] * (alpha[k] - beta);
    }
    double dg = dot(d, g);
    if (!(dg < 0.0)) {
      // not a descent direction: restart from steepest descent
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i] / std::max(1.0, max_abs(g));
      dg = dot(d, g);
    }

    // backtracking line search, Armijo condition
    double step = 1.0;
    double fnew = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) xnew[i] = res.x[i] + step * d[i];
      fnew = f(xnew, gnew);
      ++res.evaluations;
      if (std::isfinite(fnew) && fnew <= fx + 1e-4 * step * dg) {
        accepted = true;
        break;
      }
      step *= std::isfinite(fnew) ? 0.5 : 0.1;
    }
    if (!accepted) break;

    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = xnew[i] - res.x[i];
      y[i] = gnew[i] - g[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opt.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    res.x = xnew;
    g = gnew;
    fx = fnew;
    res.iterations = it + 1;

    f_hist.push_back(fx);
    if (static_cast<int>(f_hist.size()) > opt.past + 1) f_hist.pop_front();
    if (static_cast<int>(f_hist.size()) == opt.past + 1) {
      const double rel = (f_hist.front() - fx) / std::max(1.0, std::abs(fx));
      if (rel < opt.function_tolerance) {
        res.converged = max_abs(g) / std::max(1.0, std::abs(fx)) < 1e3 * opt.gradient_tolerance;
        break;
      }
    }
  }
  if (!res.converged && max_abs(g) / std::max(1.0, std::abs(fx)) < opt.gradient_tolerance) {
    res.converged = true;
  }
  res.value = fx;
  return res;
}

}  // namespace hawkes::numerics
