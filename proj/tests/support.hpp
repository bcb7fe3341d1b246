#pragma once

// Test-side oracles kept independent of the library code paths they check:
// dense linear algebra through Eigen, central finite differences, and
// adaptive Simpson quadrature.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace testsup {

// Dense (alpha*I + A) for the chain stencils; corner = 1 gives the free-ends
// matrix, corner = 2 the fixed-ends one.
inline Eigen::MatrixXd dense_shifted_chain(int n, double alpha, double corner) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = alpha + ((i == 0 || i == n - 1) ? corner : 2.0);
    if (i + 1 < n) {
      m(i, i + 1) = -1.0;
      m(i + 1, i) = -1.0;
    }
  }
  return m;
}

inline std::vector<double> dense_solve(const Eigen::MatrixXd& m, const std::vector<double>& b) {
  Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(b.data(), b.size());
  Eigen::VectorXd x = m.fullPivLu().solve(rhs);
  return std::vector<double>(x.data(), x.data() + x.size());
}

inline double dense_determinant(const Eigen::MatrixXd& m) { return m.fullPivLu().determinant(); }

// Central-difference gradient of f: R^d -> R.
template <class F>
std::vector<double> fd_gradient(F&& f, const std::vector<double>& x, double h = 1e-5) {
  std::vector<double> g(x.size());
  std::vector<double> w = x;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double step = h * std::max(1.0, std::abs(x[k]));
    w[k] = x[k] + step;
    const double fp = f(w);
    w[k] = x[k] - step;
    const double fm = f(w);
    w[k] = x[k];
    g[k] = (fp - fm) / (2.0 * step);
  }
  return g;
}

template <class F>
double relative_gradient_error(F&& f, const std::vector<double>& x,
                               const std::vector<double>& analytic, double h = 1e-5) {
  const std::vector<double> fd = fd_gradient(f, x, h);
  double worst = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k)
    worst = std::max(worst, std::abs(fd[k] - analytic[k]) / (1.0 + std::abs(analytic[k])));
  return worst;
}

// Adaptive Simpson quadrature.
namespace detail {
template <class F>
double simpson(F&& f, double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}
template <class F>
double adapt(F&& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
             int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(f, a, m, fa, flm, fm);
  const double right = simpson(f, m, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adapt(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adapt(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}
}  // namespace detail

template <class F>
double integrate(F&& f, double a, double b, double tol = 1e-12) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return detail::adapt(f, a, b, fa, fm, fb, detail::simpson(f, a, b, fa, fm, fb), tol, 48);
}

struct RunningStats {
  long n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / n : 0.0; }
};

}  // namespace testsup
