#ifndef PROCUR_DISTRIBUTIONS_HPP
#define PROCUR_DISTRIBUTIONS_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <stdexcept>
#include <string>

#include "procur/rng.hpp"

namespace procur {

// Any bounded cost law exposing support and density/mass works with the
// regularity checker and the virtual cost helper; tests inject handcrafted
// laws through this concept.
template <typename D>
concept BoundedCostLaw = requires(const D& d, double c) {
  { d.lower() } -> std::convertible_to<double>;
  { d.upper() } -> std::convertible_to<double>;
  { d.pdf(c) } -> std::convertible_to<double>;
  { d.cdf(c) } -> std::convertible_to<double>;
};

namespace detail {

inline double norm_pdf(double z) {
  return 0.3989422804014326779 * std::exp(-0.5 * z * z);
}

inline double norm_cdf(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

}  // namespace detail

// The screening machinery prices creator k by its virtual cost
// c + F(c)/f(c); reverse-hazard monotonicity of the law makes it increasing.
template <BoundedCostLaw D>
double virtual_cost_of(const D& law, double c) {
  const double F = law.cdf(c);
  if (F <= 0.0) return c;
  const double f = law.pdf(c);
  if (f <= 0.0) return std::numeric_limits<double>::infinity();
  return c + F / f;
}

struct RegularityReport {
  bool monotone = false;
  double worst_violation = 0.0;  // largest adjacent decrease of virtual cost
  int grid_points = 0;
};

// Grid check that the virtual cost is nondecreasing over the support. A
// strictly positive worst_violation means the law fails the screening
// regularity requirement and payment monotonicity is not guaranteed.
template <BoundedCostLaw D>
RegularityReport check_regularity(const D& law, int grid_points = 1000) {
  if (grid_points < 2) throw std::invalid_argument("check_regularity: grid_points < 2");
  RegularityReport rep;
  rep.grid_points = grid_points;
  const double a = law.lower(), b = law.upper();
  double prev = virtual_cost_of(law, a);
  for (int i = 1; i < grid_points; ++i) {
    const double c = a + (b - a) * static_cast<double>(i) / (grid_points - 1);
    const double vc = virtual_cost_of(law, c);
    if (prev - vc > rep.worst_violation) rep.worst_violation = prev - vc;
    prev = vc;
  }
  rep.monotone = rep.worst_violation <= 1e-9;
  return rep;
}

// Private cost law of one creator. Uniform or normal truncated to [a, b];
// both keep full support on the interval so the quantile is well defined.
class CostDistribution {
 public:
  enum class Kind { uniform, trunc_normal };

  static CostDistribution uniform(double a, double b) {
    require(a < b, "uniform: requires a < b");
    require(std::isfinite(a) && std::isfinite(b), "uniform: bounds must be finite");
    CostDistribution d;
    d.kind_ = Kind::uniform;
    d.a_ = a;
    d.b_ = b;
    return d;
  }

  static CostDistribution truncated_normal(double mean, double sd, double a, double b) {
    require(a < b, "truncnorm: requires a < b");
    require(std::isfinite(a) && std::isfinite(b), "truncnorm: bounds must be finite");
    require(sd > 0.0 && std::isfinite(sd), "truncnorm: requires sd > 0");
    require(std::isfinite(mean), "truncnorm: mean must be finite");
    CostDistribution d;
    d.kind_ = Kind::trunc_normal;
    d.a_ = a;
    d.b_ = b;
    d.mean_param_ = mean;
    d.sd_ = sd;
    d.cdf_a_ = detail::norm_cdf((a - mean) / sd);
    d.mass_ = detail::norm_cdf((b - mean) / sd) - d.cdf_a_;
    require(d.mass_ > 0.0, "truncnorm: truncation interval carries no mass");
    return d;
  }

  Kind kind() const { return kind_; }
  double lower() const { return a_; }
  double upper() const { return b_; }
  double location() const { return mean_param_; }
  double scale() const { return sd_; }

  double pdf(double c) const {
    if (c < a_ || c > b_) throw std::domain_error("pdf: argument outside support");
    if (kind_ == Kind::uniform) return 1.0 / (b_ - a_);
    return detail::norm_pdf((c - mean_param_) / sd_) / (sd_ * mass_);
  }

  // Defined on the whole line (0 below, 1 above the support).
  double cdf(double c) const {
    if (c <= a_) return 0.0;
    if (c >= b_) return 1.0;
    if (kind_ == Kind::uniform) return (c - a_) / (b_ - a_);
    return (detail::norm_cdf((c - mean_param_) / sd_) - cdf_a_) / mass_;
  }

  double quantile(double u) const {
    if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("quantile: u outside [0,1]");
    if (kind_ == Kind::uniform) return a_ + u * (b_ - a_);
    // No closed form: bisect the cdf. The cdf is strictly increasing on the
    // support, so this converges to interval width 1e-10 in ~50 halvings.
    double lo = a_, hi = b_;
    while (hi - lo > 1e-10) {
      const double mid = 0.5 * (lo + hi);
      if (cdf(mid) < u) lo = mid;
      else hi = mid;
    }
    return 0.5 * (lo + hi);
  }

  double sample(RngStream& rng) const { return quantile(rng.uniform01()); }

  double mean() const {
    if (kind_ == Kind::uniform) return 0.5 * (a_ + b_);
    if (!mean_ready_) {
      mean_cache_ = integrate_mean();
      mean_ready_ = true;
    }
    return mean_cache_;
  }

  double virtual_cost(double c) const {
    if (c < a_ || c > b_) throw std::domain_error("virtual_cost: argument outside support");
    if (kind_ == Kind::uniform) return 2.0 * c - a_;
    return virtual_cost_of(*this, c);
  }

  RegularityReport regularity(int grid_points = 1000) const {
    return check_regularity(*this, grid_points);
  }

  bool operator==(const CostDistribution& o) const {
    return kind_ == o.kind_ && a_ == o.a_ && b_ == o.b_ &&
           mean_param_ == o.mean_param_ && sd_ == o.sd_;
  }

 private:
  CostDistribution() = default;

  static void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
  }

  // 64-panel Gauss-Legendre(16) of c*pdf(c); for these smooth densities the
  // result is exact to roundoff.
  double integrate_mean() const {
    // 16-point Gauss-Legendre nodes/weights on [-1,1], positive half.
    static const double xs[8] = {0.0950125098376374, 0.2816035507792589,
                                 0.4580167776572274, 0.6178762444026438,
                                 0.7554044083550030, 0.8656312023878318,
                                 0.9445750230732326, 0.9894009349916499};
    static const double ws[8] = {0.1894506104550685, 0.1826034150449236,
                                 0.1691565193950025, 0.1495959888165767,
                                 0.1246289712555339, 0.0951585116824928,
                                 0.0622535239386479, 0.0271524594117541};
    const int panels = 64;
    const double h = (b_ - a_) / panels;
    double acc = 0.0;
    for (int p = 0; p < panels; ++p) {
      const double mid = a_ + (p + 0.5) * h;
      for (int j = 0; j < 8; ++j) {
        const double dx = 0.5 * h * xs[j];
        const double c1 = mid - dx, c2 = mid + dx;
        acc += 0.5 * h * ws[j] * (c1 * pdf(c1) + c2 * pdf(c2));
      }
    }
    return acc;
  }

  Kind kind_ = Kind::uniform;
  double a_ = 0.0, b_ = 1.0;
  double mean_param_ = 0.0, sd_ = 1.0;
  double cdf_a_ = 0.0, mass_ = 1.0;
  mutable double mean_cache_ = 0.0;
  mutable bool mean_ready_ = false;
};

}  // namespace procur

#endif
