#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace minimax_lb {

// Stencil of the coupling matrix A: off-diagonals are -1, interior diagonal
// entries are 2, and the (1,1)/(n,n) entries are 1 (FreeEnds) or 2 (FixedEnds).
// FreeEnds is the path-graph Laplacian used inside the maximization blocks;
// FixedEnds is the classical strongly convex chain matrix.
enum class TridiagVariant { FreeEnds, FixedEnds };

// The shifted operator alpha*I + A.  Symmetric positive definite for
// alpha > 0, with spectral norm of A at most 4.
class TridiagOperator {
 public:
  TridiagOperator(int n, double alpha, TridiagVariant variant)
      : n_(n), alpha_(alpha), variant_(variant) {
    if (n < 1) throw std::invalid_argument("TridiagOperator: n must be >= 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("TridiagOperator: alpha must be > 0");
  }

  int size() const { return n_; }
  double alpha() const { return alpha_; }
  TridiagVariant variant() const { return variant_; }

  // Diagonal entry of alpha*I + A at 0-based index i.
  double diag(int i) const {
    const bool corner = (i == 0 || i == n_ - 1);
    const double a_ii = (corner && variant_ == TridiagVariant::FreeEnds) ? 1.0 : 2.0;
    return alpha_ + a_ii;
  }

  // y = (alpha*I + A) v
  std::vector<double> apply(std::span<const double> v) const {
    require_size(v.size(), "apply");
    std::vector<double> y(n_);
    for (int i = 0; i < n_; ++i) {
      double s = diag(i) * v[i];
      if (i > 0) s -= v[i - 1];
      if (i + 1 < n_) s -= v[i + 1];
      y[i] = s;
    }
    return y;
  }

  // Solves (alpha*I + A) y = b by elimination without pivoting (the operator
  // is SPD and diagonally dominant).  One refinement pass keeps the residual
  // at the eps*||y|| level even for alpha ~ 1/n^2 with n in the hundreds.
  std::vector<double> solve(std::span<const double> b) const {
    require_size(b.size(), "solve");
    std::vector<double> y = solve_once(b);
    std::vector<double> r = apply(y);
    for (int i = 0; i < n_; ++i) r[i] = b[i] - r[i];
    const std::vector<double> d = solve_once(r);
    for (int i = 0; i < n_; ++i) y[i] += d[i];
    return y;
  }

  // det(alpha*I + A) for the FreeEnds stencil, from the three-term
  // determinant recurrence: with p, q the roots of x^2 - (2+alpha)x + 1 = 0,
  //
  //   det = [ (alpha + alpha^2/2)(p^{n-1} - q^{n-1})
  //           + alpha*sqrt(alpha + alpha^2/4)(p^{n-1} + q^{n-1}) ]
  //         / (2 sqrt(alpha + alpha^2/4)).
  double determinant_closed_form() const {
    require_free_ends("determinant_closed_form");
    const double s = root_s();
    const double lp = std::log1p(alpha_ / 2.0 + s);  // log p; q = 1/p
    const double pn = std::exp(static_cast<double>(n_ - 1) * lp);
    const double qn = std::exp(-static_cast<double>(n_ - 1) * lp);
    return ((alpha_ + alpha_ * alpha_ / 2.0) * (pn - qn) + alpha_ * s * (pn + qn)) / (2.0 * s);
  }

  // First column of B = (alpha*I + A)^{-1} (FreeEnds, n >= 2) via the
  // cofactor recurrence B_{i,1} = M_{1,i}/det with
  //
  //   M_{1,i} = [ (alpha/2)(p^{n-i} - q^{n-i}) + sqrt(alpha + alpha^2/4)(p^{n-i} + q^{n-i}) ]
  //             / (2 sqrt(alpha + alpha^2/4)).
  //
  // Powers are evaluated in log space with the common factor p^{n-1}
  // cancelled between numerator and determinant, so the ratio stays finite
  // for any n even though p^{n-1} itself can overflow outside the
  // alpha = 1/n^2 regime.
  std::vector<double> first_column_closed_form() const {
    require_free_ends("first_column_closed_form");
    if (n_ < 2) throw std::invalid_argument("first_column_closed_form: requires n >= 2");
    const double s = root_s();
    const double lp = std::log1p(alpha_ / 2.0 + s);
    // denominator = det * 2s * p^{-(n-1)}
    const double den = (alpha_ + alpha_ * alpha_ / 2.0) * (1.0 - std::exp(-2.0 * (n_ - 1) * lp)) +
                       alpha_ * s * (1.0 + std::exp(-2.0 * (n_ - 1) * lp));
    std::vector<double> col(n_);
    for (int i = 1; i <= n_; ++i) {
      const double k = static_cast<double>(n_ - i);
      const double num = std::exp(-static_cast<double>(i - 1) * lp) *
                         ((alpha_ / 2.0) * (1.0 - std::exp(-2.0 * k * lp)) +
                          s * (1.0 + std::exp(-2.0 * k * lp)));
      col[i - 1] = num / den;
    }
    return col;
  }

 private:
  double root_s() const { return std::sqrt(alpha_ + alpha_ * alpha_ / 4.0); }

  std::vector<double> solve_once(std::span<const double> b) const {
    std::vector<double> c(n_), y(n_);
    double beta = diag(0);
    y[0] = b[0] / beta;
    for (int i = 1; i < n_; ++i) {
      c[i] = -1.0 / beta;
      beta = diag(i) + c[i];  // diag - (-1) * c
      y[i] = (b[i] + y[i - 1]) / beta;
    }
    for (int i = n_ - 2; i >= 0; --i) y[i] -= c[i + 1] * y[i + 1];
    return y;
  }

  void require_size(std::size_t m, const char* op) const {
    if (static_cast<int>(m) != n_)
      throw std::invalid_argument(std::string(op) + ": vector length " + std::to_string(m) +
                                  " does not match operator dimension " + std::to_string(n_));
  }
  void require_free_ends(const char* op) const {
    if (variant_ != TridiagVariant::FreeEnds)
      throw std::invalid_argument(std::string(op) + ": closed form implemented for FreeEnds only");
  }

  int n_;
  double alpha_;
  TridiagVariant variant_;
};

// Coefficients of the closed-form maximized coupling
//   h_m(x,z) = C*(a1/2 x^2 - a2/2 x z + a1/8 z^2),
// where a1 = B_{1,1}/n and a2 = B_{n,1}/n for B = (I/n^2 + A)^{-1}.
// With c1 = C(a2-a1)/2, c2 = C(a2-a1)/8 and C = 12/a2, the compensated sum
// h_m + c1 x^2 + c2 z^2 collapses to 6 (x - z/2)^2.
struct HmCoefficients {
  double a1;
  double a2;
  double C;   // 12/a2
  double c1;  // C(a2-a1)/2
  double c2;  // C(a2-a1)/8
};

// Valid for n >= 10 only: that is the regime where a1, a2 are pinned inside
// [0.1, 20], and extrapolating below it would construct instances outside
// the proven coefficient range.
inline HmCoefficients hm_coefficients(int n) {
  if (n < 10)
    throw std::domain_error("hm_coefficients: requires n >= 10, got n = " + std::to_string(n));
  const double alpha = 1.0 / (static_cast<double>(n) * n);
  const TridiagOperator op(n, alpha, TridiagVariant::FreeEnds);
  const std::vector<double> col = op.first_column_closed_form();
  HmCoefficients h;
  h.a1 = col.front() / n;
  h.a2 = col.back() / n;
  h.C = 12.0 / h.a2;
  h.c1 = h.C * (h.a2 - h.a1) / 2.0;
  h.c2 = h.C * (h.a2 - h.a1) / 8.0;
  return h;
}

}  // namespace minimax_lb
