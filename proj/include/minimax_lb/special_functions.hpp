#pragma once

#include <cmath>

namespace minimax_lb {

// Component functions of the nonconvex chain.
//
//   psi(x) = 0                      for x <= 1/2
//            exp(1 - 1/(2x-1)^2)    for x >  1/2
//   phi(x) = sqrt(2*pi*e) * N(x),   N the standard normal CDF
//
// psi is identically zero (all derivatives included) on (-inf, 1/2]; the
// branch below returns exact zeros there, which the zero-chain tests rely on.

inline double psi(double x) {
  if (x <= 0.5) return 0.0;
  const double u = 2.0 * x - 1.0;
  return std::exp(1.0 - 1.0 / (u * u));
}

// psi'(x) = psi(x) * 4 / (2x-1)^3 for x > 1/2, zero otherwise (including at
// the junction x = 1/2, where the function is infinitely flat).
inline double psi_prime(double x) {
  if (x <= 0.5) return 0.0;
  const double u = 2.0 * x - 1.0;
  return psi(x) * 4.0 / (u * u * u);
}

// The Gaussian CDF route through erfc is accurate in both tails; the
// defining integral is kept only as a test oracle.
inline double phi(double x) {
  static const double scale = std::sqrt(2.0 * 3.141592653589793238462643383279502884 * std::exp(1.0));
  return scale * 0.5 * std::erfc(-x / std::sqrt(2.0));
}

inline double phi_prime(double x) {
  static const double sqrt_e = std::sqrt(std::exp(1.0));
  return sqrt_e * std::exp(-0.5 * x * x);
}

// Tight suprema of the component functions and their first derivatives.
struct SmoothBounds {
  double psi_sup;        // e
  double psi_prime_sup;  // sqrt(54/e)
  double phi_sup;        // sqrt(2*pi*e)
  double phi_prime_sup;  // sqrt(e)
};

inline SmoothBounds smooth_bounds() {
  const double e = std::exp(1.0);
  const double pi = 3.141592653589793238462643383279502884;
  return SmoothBounds{e, std::sqrt(54.0 / e), std::sqrt(2.0 * pi * e), std::sqrt(e)};
}

// sup |psi''|.  With s = 1/(2x-1)^2 the second derivative is
// 8e * s^2 (2s-3) e^{-s}; its only interior critical points are
// s = (9 -+ sqrt(33))/4 and the magnitude peaks at the larger root.
inline double psi_second_sup() {
  const double e = std::exp(1.0);
  const double s_lo = (9.0 - std::sqrt(33.0)) / 4.0;
  const double s_hi = (9.0 + std::sqrt(33.0)) / 4.0;
  auto mag = [&](double s) { return std::abs(8.0 * e * s * s * (2.0 * s - 3.0) * std::exp(-s)); };
  return std::max(mag(s_lo), mag(s_hi));
}

// sup |phi''| = sqrt(e) * max |x| e^{-x^2/2} = sqrt(e) * e^{-1/2} = 1.
inline double phi_second_sup() { return 1.0; }

}  // namespace minimax_lb
