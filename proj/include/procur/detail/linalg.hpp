#ifndef PROCUR_DETAIL_LINALG_HPP
#define PROCUR_DETAIL_LINALG_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace procur::detail {

// Dense symmetric positive definite solve, sized for the tiny Newton systems
// this library produces (a handful of market domains, at most a few dozen
// creators). Row-major storage.
class SymMatrix {
 public:
  explicit SymMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double at(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  std::size_t size() const { return n_; }

  void zero() { a_.assign(n_ * n_, 0.0); }

  void add_diag(std::size_t i, double v) { a_[i * n_ + i] += v; }

  // H += scale * g g^T
  void add_outer(const std::vector<double>& g, double scale) {
    for (std::size_t i = 0; i < n_; ++i) {
      if (g[i] == 0.0) continue;
      const double gi = scale * g[i];
      for (std::size_t j = 0; j <= i; ++j) a_[i * n_ + j] += gi * g[j];
    }
  }

  // Cholesky solve of (this) x = b using the lower triangle. The caller only
  // fills j <= i entries (add_outer above does). Returns false if the matrix
  // is not numerically positive definite.
  bool solve(const std::vector<double>& b, std::vector<double>& x) const {
    const std::size_t n = n_;
    std::vector<double> L(a_);
    for (std::size_t j = 0; j < n; ++j) {
      double d = L[j * n + j];
      for (std::size_t k = 0; k < j; ++k) d -= L[j * n + k] * L[j * n + k];
      if (!(d > 0.0) || !std::isfinite(d)) return false;
      const double lj = std::sqrt(d);
      L[j * n + j] = lj;
      for (std::size_t i = j + 1; i < n; ++i) {
        double s = L[i * n + j];
        for (std::size_t k = 0; k < j; ++k) s -= L[i * n + k] * L[j * n + k];
        L[i * n + j] = s / lj;
      }
    }
    x.assign(n, 0.0);
    // forward: L z = b
    for (std::size_t i = 0; i < n; ++i) {
      double s = b[i];
      for (std::size_t k = 0; k < i; ++k) s -= L[i * n + k] * x[k];
      x[i] = s / L[i * n + i];
    }
    // backward: L^T x = z
    for (std::size_t ii = n; ii-- > 0;) {
      double s = x[ii];
      for (std::size_t k = ii + 1; k < n; ++k) s -= L[k * n + ii] * x[k];
      x[ii] = s / L[ii * n + ii];
    }
    return true;
  }

 private:
  std::size_t n_;
  std::vector<double> a_;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace procur::detail

#endif
