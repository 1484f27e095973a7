#ifndef PROCUR_TESTS_ORACLES_HPP
#define PROCUR_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

// Independent reimplementations used to cross-check the library. Everything
// here is deliberately written against different formulas or algorithms than
// the code under test so agreement is evidence, not tautology.
namespace oracles {

// erf via its Maclaurin-style expansion around 0 and the Laplace continued
// fraction for the tail, instead of libm's erf/erfc.
inline double erf_series(double x) {
  // erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_{n>=0} (2x^2)^n * x / (2n+1)!!
  const double x2 = x * x;
  double term = x, sum = x;
  for (int n = 1; n < 200; ++n) {
    term *= 2.0 * x2 / (2.0 * n + 1.0);
    sum += term;
    if (std::fabs(term) < 1e-18 * std::fabs(sum)) break;
  }
  return 1.1283791670955125739 * std::exp(-x2) * sum;
}

inline double erfc_tail(double x) {
  // erfc(x) = exp(-x^2)/(x sqrt(pi)) * 1/(1 + u/(1 + 2u/(1 + 3u/(...)))),
  // u = 1/(2x^2), evaluated bottom-up at fixed depth (x >= 3 here).
  const double u = 0.5 / (x * x);
  double cf = 1.0;
  for (int n = 60; n >= 1; --n) cf = 1.0 + n * u / cf;
  return std::exp(-x * x) / (x * 1.7724538509055160273 * cf);
}

inline double erf(double x) {
  if (x < 0.0) return -erf(-x);
  if (x >= 3.0) return 1.0 - erfc_tail(x);
  return erf_series(x);
}

inline double norm_cdf(double z) {
  const double t = z * 0.70710678118654752440;
  if (t <= -3.0) return 0.5 * erfc_tail(-t);
  if (t >= 3.0) return 1.0 - 0.5 * erfc_tail(t);
  return 0.5 * (1.0 + erf_series(t));
}

inline double norm_pdf(double z) {
  return std::exp(-0.5 * z * z) / 2.5066282746310005024;
}

// Composite rules on lambdas; n intervals (Simpson needs n even).
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n < 2 || n % 2) throw std::invalid_argument("simpson: n must be even and >= 2");
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

inline double trapezoid(const std::function<double(double)>& f, double a, double b,
                        int n) {
  if (n < 1) throw std::invalid_argument("trapezoid: n must be >= 1");
  const double h = (b - a) / n;
  double s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n; ++i) s += f(a + i * h);
  return s * h;
}

// Kolmogorov-Smirnov statistic of samples against a cdf.
inline double ks_statistic(std::vector<double> samples,
                           const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double F = cdf(samples[i]);
    d = std::max(d, std::fabs((i + 1) / n - F));
    d = std::max(d, std::fabs(F - i / n));
  }
  return d;
}

// Least-squares slope of y on x.
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("ols_slope: need matching vectors of size >= 2");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Exhaustive 2-variable minimizer over a rectangle: objective and feasibility
// as lambdas, (n+1)^2 points. Independent of the library's grid oracle.
struct GridMin2 {
  double v1 = 0.0, v2 = 0.0;
  double objective = 0.0;
  bool found = false;
};
inline GridMin2 grid_min_2d(const std::function<double(double, double)>& obj,
                            const std::function<bool(double, double)>& feasible,
                            double hi1, double hi2, int n) {
  GridMin2 best;
  best.objective = 1e300;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      const double a = hi1 * i / n, b = hi2 * j / n;
      if (!feasible(a, b)) continue;
      const double o = obj(a, b);
      if (o < best.objective) {
        best = {a, b, o, true};
      }
    }
  return best;
}

// Two-level density on [0,1]: 0.4 below the midpoint, 1.6 above. The jump up
// in density makes the virtual cost drop from 1.0 to 0.625 at 0.5, a compact
// counterexample to screening regularity.
struct TwoLevelLaw {
  double lower() const { return 0.0; }
  double upper() const { return 1.0; }
  double pdf(double c) const { return c < 0.5 ? 0.4 : 1.6; }
  double cdf(double c) const {
    if (c <= 0.0) return 0.0;
    if (c >= 1.0) return 1.0;
    return c < 0.5 ? 0.4 * c : 0.2 + 1.6 * (c - 0.5);
  }
};

}  // namespace oracles

#endif
