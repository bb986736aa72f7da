#ifndef DERLAB_CORE_HPP
#define DERLAB_CORE_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace derlab {

using cplx = std::complex<double>;

template <class T>
using Field = std::vector<T>;

// ---------------------------------------------------------------------------
// threading

inline int thread_budget() {
  if (const char* env = std::getenv("DER_LAB_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Chunked parallel map over [0, n). Results must be written to preallocated
// storage inside fn; reductions happen elsewhere so the outcome does not
// depend on the thread count.
inline void parallel_for(std::int64_t n, const std::function<void(std::int64_t, std::int64_t)>& fn) {
  int nt = thread_budget();
  if (nt <= 1 || n < 2048) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::int64_t chunk = (n + nt - 1) / nt;
  for (int t = 0; t < nt; ++t) {
    std::int64_t lo = t * chunk;
    std::int64_t hi = std::min<std::int64_t>(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(fn, lo, hi);
  }
  for (auto& th : pool) th.join();
}

// ---------------------------------------------------------------------------
// deterministic reductions

// Fixed-order pairwise summation; independent of threading decisions.
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  std::size_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

// ---------------------------------------------------------------------------
// deterministic random numbers
//
// splitmix64 underneath; normal deviates via Box-Muller so the stream is
// identical across standard libraries.

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do { u1 = uniform(); } while (u1 <= 1e-300);
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  cplx cnormal() { return {normal(), normal()}; }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// symmetric matrix helpers

template <class Mat>
Mat symmetrize(const Mat& a) {
  return 0.5 * (a + a.transpose());
}

// Principal square root of a symmetric positive-definite matrix by the
// determinant-scaled Denman-Beavers iteration. Quadratic convergence; the
// symmetric branch is preserved by construction.
template <class Mat>
Mat spd_sqrt(const Mat& a, double tol = 1e-14, int max_iter = 60) {
  const int n = static_cast<int>(a.rows());
  Mat y = a;
  Mat z = Mat::Identity(n, n);
  for (int it = 0; it < max_iter; ++it) {
    double dety = y.determinant();
    double detz = z.determinant();
    if (!(dety > 0.0) || !std::isfinite(dety)) throw std::runtime_error("spd_sqrt: matrix not positive definite");
    double mu = std::pow(dety * detz, -1.0 / (2.0 * n));
    Mat yn = 0.5 * (mu * y + (1.0 / mu) * z.inverse());
    Mat zn = 0.5 * (mu * z + (1.0 / mu) * y.inverse());
    double delta = (yn - y).cwiseAbs().maxCoeff();
    y = yn;
    z = zn;
    if (delta < tol * std::max(1.0, y.cwiseAbs().maxCoeff())) break;
  }
  return symmetrize(Mat(y));
}

template <class Mat>
Mat spd_inv_sqrt(const Mat& a, double tol = 1e-14) {
  Mat r = spd_sqrt(a, tol);
  return symmetrize(Mat(r.inverse()));
}

// Solve b x + x b = rhs for symmetric b > 0 (Lyapunov form), via the
// eigendecomposition of b. Used for differentiating matrix square roots.
template <class Mat>
Mat sylvester_spd(const Mat& b, const Mat& rhs) {
  Eigen::SelfAdjointEigenSolver<Mat> es(b);
  const auto& q = es.eigenvectors();
  const auto& lam = es.eigenvalues();
  Mat m = q.transpose() * rhs * q;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) m(i, j) /= (lam(i) + lam(j));
  return Mat(q * m * q.transpose());
}

// ---------------------------------------------------------------------------
// Richardson extrapolation for centered finite differences in a parameter

struct DerivativeEstimate {
  double value = 0.0;
  double error = 0.0;          // consistency spread of the accepted entry
  double order_estimate = 0.0; // observed order of the base differences
  std::vector<double> steps;
};

namespace detail {

inline DerivativeEstimate richardson_table(const std::vector<double>& base, const std::vector<double>& steps) {
  const int levels = static_cast<int>(base.size());
  std::vector<std::vector<double>> r(levels);
  for (int k = 0; k < levels; ++k) {
    r[k].resize(k + 1);
    r[k][0] = base[k];
    for (int m = 1; m <= k; ++m) {
      double p = std::pow(4.0, m);
      r[k][m] = (p * r[k][m - 1] - r[k - 1][m - 1]) / (p - 1.0);
    }
  }
  DerivativeEstimate out;
  out.steps = steps;
  out.value = r[levels - 1][levels - 1];
  out.error = std::abs(r[levels - 1][levels - 1] - r[levels - 1][levels - 2]);
  // best-consistency scan over the deepest column entries
  double best = out.error;
  for (int k = 1; k < levels; ++k) {
    double spread = std::abs(r[k][k] - r[k][k - 1]);
    if (spread <= best) {
      best = spread;
      out.value = r[k][k];
      out.error = spread;
    }
  }
  if (levels >= 2) {
    double e0 = std::abs(base[0] - out.value);
    double e1 = std::abs(base[1] - out.value);
    if (e0 > 0 && e1 > 0) out.order_estimate = std::log2(e0 / e1);
  }
  return out;
}

} // namespace detail

// d/dt f at t=0 by centered differences with a 4-level Richardson table.
inline DerivativeEstimate richardson_first_derivative(const std::function<double(double)>& f, double t0 = 1e-2,
                                                      int levels = 4) {
  std::vector<double> base, steps;
  double t = t0;
  for (int k = 0; k < levels; ++k, t *= 0.5) {
    base.push_back((f(t) - f(-t)) / (2.0 * t));
    steps.push_back(t);
  }
  return detail::richardson_table(base, steps);
}

// d^2/dt^2 f at t=0 (f(0) supplied separately so it is evaluated once).
inline DerivativeEstimate richardson_second_derivative(const std::function<double(double)>& f, double f0,
                                                       double t0 = 1e-2, int levels = 4) {
  std::vector<double> base, steps;
  double t = t0;
  for (int k = 0; k < levels; ++k, t *= 0.5) {
    base.push_back((f(t) - 2.0 * f0 + f(-t)) / (t * t));
    steps.push_back(t);
  }
  return detail::richardson_table(base, steps);
}

// ---------------------------------------------------------------------------
// misc

inline double rel_error(double got, double want, double floor_ = 1e-14) {
  return std::abs(got - want) / std::max(std::abs(want), floor_);
}

inline double fitted_order(const std::vector<double>& h, const std::vector<double>& err) {
  // least squares slope of log(err) against log(h)
  if (h.size() != err.size() || h.size() < 2) throw std::invalid_argument("fitted_order: need >= 2 samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (err[i] <= 0) continue;
    double x = std::log(h[i]), y = std::log(err[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++n;
  }
  if (n < 2) return 0.0;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace derlab

#endif
