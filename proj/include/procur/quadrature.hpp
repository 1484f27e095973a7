#ifndef PROCUR_QUADRATURE_HPP
#define PROCUR_QUADRATURE_HPP

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace procur {

enum class QuadRule { gauss_legendre, composite_simpson };

struct QuadratureSpec {
  int panels = 4;
  int nodes_per_panel = 16;  // 8, 16 or 32
  QuadRule rule = QuadRule::gauss_legendre;
  // Gauss-Legendre panels whose bisection changes the result by more than a
  // width-proportional share of this budget get split further. The integrand
  // (an allocation coordinate along a cost axis) is piecewise smooth with
  // kinks where the active constraint set changes, so refinement concentrates
  // where it pays. Simpson runs the fixed composite rule as given.
  double target_abs_error = 1e-5;
  int max_panel_evals = 256;  // refinement budget per integral leg
};

inline void validate(const QuadratureSpec& q) {
  if (q.panels < 1) throw std::invalid_argument("quadrature: panels < 1");
  if (q.nodes_per_panel != 8 && q.nodes_per_panel != 16 && q.nodes_per_panel != 32)
    throw std::invalid_argument("quadrature: nodes_per_panel must be 8, 16 or 32");
  if (!(q.target_abs_error > 0.0))
    throw std::invalid_argument("quadrature: target_abs_error must be positive");
  if (q.max_panel_evals < q.panels)
    throw std::invalid_argument("quadrature: max_panel_evals below initial panel count");
}

namespace detail {

// Gauss-Legendre abscissas/weights on [-1,1] by Newton iteration on P_n;
// cached per order behind a mutex since payment engines may run concurrently.
inline const std::vector<std::pair<double, double>>& gauss_legendre(int n) {
  static std::map<int, std::vector<std::pair<double, double>>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  std::vector<std::pair<double, double>> nw(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    const double wgt = 2.0 / ((1.0 - x * x) * pp * pp);
    nw[i] = {-x, wgt};          // ascending order: negative root first
    nw[n - 1 - i] = {x, wgt};
  }
  return cache.emplace(n, std::move(nw)).first->second;
}

}  // namespace detail

struct QuadNodes {
  std::vector<double> t;       // ascending abscissas in [lo, hi]
  std::vector<double> weight;  // matching weights; sum == hi - lo
  std::vector<int> panel;      // panel index of each node
  double panel_width = 0.0;
};

// Node/weight layout for integrating over [lo, hi] with the given spec.
// Simpson shares panel endpoints, so its node count is panels*nodes + 1.
inline QuadNodes quadrature_nodes(const QuadratureSpec& q, double lo, double hi) {
  validate(q);
  if (!(hi >= lo)) throw std::invalid_argument("quadrature: hi < lo");
  QuadNodes out;
  const double span = hi - lo;
  out.panel_width = span / q.panels;
  if (span == 0.0) return out;

  if (q.rule == QuadRule::gauss_legendre) {
    const auto& nw = detail::gauss_legendre(q.nodes_per_panel);
    out.t.reserve(q.panels * q.nodes_per_panel);
    for (int p = 0; p < q.panels; ++p) {
      const double a = lo + p * out.panel_width;
      const double mid = a + 0.5 * out.panel_width;
      for (const auto& [xi, wi] : nw) {
        out.t.push_back(mid + 0.5 * out.panel_width * xi);
        out.weight.push_back(0.5 * out.panel_width * wi);
        out.panel.push_back(p);
      }
    }
    return out;
  }

  // Composite Simpson: nodes_per_panel subintervals per panel (even by
  // validation), endpoints shared between neighbours.
  const int sub = q.nodes_per_panel;
  const int total = q.panels * sub;
  const double h = span / total;
  out.t.resize(total + 1);
  out.weight.assign(total + 1, 0.0);
  out.panel.resize(total + 1);
  for (int j = 0; j <= total; ++j) {
    out.t[j] = lo + span * static_cast<double>(j) / total;
    out.panel[j] = std::min(j / sub, q.panels - 1);
    double c;
    if (j == 0 || j == total) c = 1.0;
    else if (j % 2 == 1) c = 4.0;
    else c = 2.0;
    out.weight[j] = c * h / 3.0;
  }
  return out;
}

}  // namespace procur

#endif
