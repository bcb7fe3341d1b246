#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "minimax_lb/chain.hpp"
#include "minimax_lb/special_functions.hpp"
#include "minimax_lb/tridiagonal.hpp"

namespace minimax_lb {

// Thrown when requested parameters fall outside the regime in which the
// construction is valid (n >= 10, T >= 2, coefficient constraints).  The
// message names the offending derived quantity.
struct RegimeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Strongly convex chain (truncated): for condition number kappa,
//
//   f_sc(x) = mu(kappa-1)/8 * ((x_1-1)^2 + sum_i (x_i - x_{i+1})^2) + mu/2 ||x||^2
//
// truncated to d coordinates (x_{d+1} = 0).  The minimizer of the untruncated
// function is x*_i = q^i with q = (sqrt(kappa)-1)/(sqrt(kappa)+1); the default
// truncation keeps the tail below tail_tol so it is numerically irrelevant.
// ---------------------------------------------------------------------------
struct NesterovInstance {
  double mu = 1.0;
  double kappa = 1.0;
  int d = 2;
  double q = 0.0;

  static NesterovInstance make(double mu, double kappa, double tail_tol = 1e-12,
                               int max_dim = 4'000'000) {
    if (!(mu > 0.0) || !(kappa >= 1.0))
      throw std::invalid_argument("NesterovInstance: need mu > 0 and kappa >= 1");
    NesterovInstance inst;
    inst.mu = mu;
    inst.kappa = kappa;
    inst.q = (std::sqrt(kappa) - 1.0) / (std::sqrt(kappa) + 1.0);
    int d = 2;
    if (inst.q > 0.0) {
      d = std::max(2, static_cast<int>(std::ceil(std::log(tail_tol) / std::log(inst.q))));
      if (d > max_dim)
        throw std::invalid_argument("NesterovInstance: truncation dimension " + std::to_string(d) +
                                    " exceeds max_dim");
    }
    inst.d = d;
    return inst;
  }

  std::vector<double> minimizer() const {
    std::vector<double> xs(d);
    double qi = 1.0;
    for (int i = 0; i < d; ++i) {
      qi *= q;
      xs[i] = qi;
    }
    return xs;
  }
};

inline double eval_sc(const NesterovInstance& inst, std::span<const double> x,
                      std::vector<double>* grad = nullptr) {
  const int d = inst.d;
  if (static_cast<int>(x.size()) != d)
    throw std::invalid_argument("eval_sc: point length " + std::to_string(x.size()) +
                                " does not match truncation dimension " + std::to_string(d));
  const double c8 = inst.mu * (inst.kappa - 1.0) / 8.0;
  double chain = (x[0] - 1.0) * (x[0] - 1.0);
  for (int i = 0; i + 1 < d; ++i) chain += (x[i] - x[i + 1]) * (x[i] - x[i + 1]);
  chain += x[d - 1] * x[d - 1];
  double norm2 = 0.0;
  for (int i = 0; i < d; ++i) norm2 += x[i] * x[i];
  const double value = c8 * chain + 0.5 * inst.mu * norm2;
  if (grad) {
    grad->assign(d, 0.0);
    for (int i = 0; i < d; ++i) {
      double av = 2.0 * x[i];  // fixed-ends stencil: all diagonal entries 2
      if (i > 0) av -= x[i - 1];
      if (i + 1 < d) av -= x[i + 1];
      (*grad)[i] = 2.0 * c8 * av + inst.mu * x[i];
    }
    (*grad)[0] -= 2.0 * c8;
  }
  return value;
}

// ---------------------------------------------------------------------------
// Nonconvex chain over x in R^T:
//
//   f_nc(x) = -psi(1) phi(x_1) + sum_{i=2..T} [psi(-x_{i-1}) phi(-x_i)
//                                              - psi(x_{i-1}) phi(x_i)]
// ---------------------------------------------------------------------------
inline double eval_nc(std::span<const double> x, std::vector<double>* grad = nullptr) {
  const int T = static_cast<int>(x.size());
  if (T < 1) throw std::invalid_argument("eval_nc: empty point");
  double value = -psi(1.0) * phi(x[0]);
  if (grad) grad->assign(T, 0.0);
  if (grad) (*grad)[0] = -psi(1.0) * phi_prime(x[0]);
  for (int i = 1; i < T; ++i) {
    const double prev = x[i - 1];
    const double cur = x[i];
    value += psi(-prev) * phi(-cur) - psi(prev) * phi(cur);
    if (grad) {
      (*grad)[i] += -psi(-prev) * phi_prime(-cur) - psi(prev) * phi_prime(cur);
      (*grad)[i - 1] += -psi_prime(-prev) * phi(-cur) - psi_prime(prev) * phi(cur);
    }
  }
  return value;
}

// ---------------------------------------------------------------------------
// Joint min-max instances.  Two coupling flavours share one parameter pack:
//
//   Deterministic:  h(x,z;y)   = -1/2 y'(I/n^2 + A)y + sqrt(C/n) (x y_1 - z y_n / 2)
//   Stochastic:     h_sg(x,z;y)= (C/n) [-1/2 y'(I/n^2 + A)y + (x y_1 - z y_n / 2)]
//
// The stochastic flavour lives on the boxes |x_i|,|z_i| <= R1 and
// ||y^(i)||_inf <= n R2, which is what keeps its gradient uniformly bounded.
// ---------------------------------------------------------------------------
enum class InstanceVariant { Deterministic, Stochastic };

struct UnscaledParams {
  ChainLayout layout;
  HmCoefficients hm;
  InstanceVariant variant = InstanceVariant::Deterministic;
  double R1 = 2.0;
  double R2 = 60.0;
};

inline UnscaledParams make_unscaled_params(int T, int n, InstanceVariant variant,
                                           double R1 = 2.0, double R2 = 60.0) {
  if (T < 2) throw std::invalid_argument("make_unscaled_params: T must be >= 2");
  return UnscaledParams{ChainLayout{T, n}, hm_coefficients(n), variant, R1, R2};
}

namespace detail {

// Boundary roundoff tolerance: points projected onto the box and rescaled by
// 1/lambda may exceed the nominal radius by an ulp.
inline constexpr double kBoxSlack = 1.0 + 1e-9;

inline void require_in_box(const UnscaledParams& p, const ChainPoint& v) {
  const auto& L = p.layout;
  const double rxz = p.R1 * kBoxSlack;
  const double ry = static_cast<double>(L.n) * p.R2 * kBoxSlack;
  for (int i = 1; i <= L.T; ++i)
    if (std::abs(v.x(i)) > rxz)
      throw std::domain_error("point outside domain: |x_" + std::to_string(i) + "| = " +
                              std::to_string(std::abs(v.x(i))) + " > R1 = " + std::to_string(p.R1));
  for (int i = 2; i <= L.T; ++i)
    if (std::abs(v.z(i)) > rxz)
      throw std::domain_error("point outside domain: |z_" + std::to_string(i) + "| = " +
                              std::to_string(std::abs(v.z(i))) + " > R1 = " + std::to_string(p.R1));
  for (int i = 1; i <= L.T - 1; ++i)
    for (int j = 1; j <= L.n; ++j)
      if (std::abs(v.y(i, j)) > ry)
        throw std::domain_error("point outside domain: |y^(" + std::to_string(i) + ")_" +
                                std::to_string(j) + "| > n*R2");
}

inline void require_xz_in_box(const UnscaledParams& p, std::span<const double> x,
                              std::span<const double> z) {
  const double rxz = p.R1 * kBoxSlack;
  for (double v : x)
    if (std::abs(v) > rxz) throw std::domain_error("point outside domain: |x| > R1");
  for (double v : z)
    if (std::abs(v) > rxz) throw std::domain_error("point outside domain: |z| > R1");
}

// Shared chain body: value of the phi/psi links plus their gradient.
inline double chain_links(const UnscaledParams& p, const ChainPoint& v, ChainPoint* grad) {
  const int T = p.layout.T;
  double value = -psi(1.0) * phi(v.x(1));
  if (grad) grad->x(1) += -psi(1.0) * phi_prime(v.x(1));
  for (int i = 2; i <= T; ++i) {
    const double zi = v.z(i);
    const double xi = v.x(i);
    value += psi(-zi) * phi(-xi) - psi(zi) * phi(xi);
    if (grad) {
      grad->x(i) += -psi(-zi) * phi_prime(-xi) - psi(zi) * phi_prime(xi);
      grad->z(i) += -psi_prime(-zi) * phi(-xi) - psi_prime(zi) * phi(xi);
    }
  }
  return value;
}

}  // namespace detail

// f_ncsc(x,z;y): chain links + per-block h + compensating quadratics.
inline double eval_ncsc(const UnscaledParams& p, const ChainPoint& v, ChainPoint* grad = nullptr) {
  const int T = p.layout.T;
  const int n = p.layout.n;
  if (grad) grad->fill(0.0);
  double value = detail::chain_links(p, v, grad);
  const double sqc = std::sqrt(p.hm.C / n);
  const double alpha = 1.0 / (static_cast<double>(n) * n);
  for (int i = 1; i <= T - 1; ++i) {
    const double xi = v.x(i);
    const double zn = v.z(i + 1);
    double links = 0.0, norm2 = 0.0;
    for (int j = 1; j < n; ++j) {
      const double dyi = v.y(i, j) - v.y(i, j + 1);
      links += dyi * dyi;
    }
    for (int j = 1; j <= n; ++j) norm2 += v.y(i, j) * v.y(i, j);
    value += -0.5 * links - 0.5 * alpha * norm2 + sqc * (xi * v.y(i, 1) - 0.5 * zn * v.y(i, n));
    value += p.hm.c1 * xi * xi + p.hm.c2 * zn * zn;
    if (grad) {
      for (int j = 1; j <= n; ++j) {
        const double a_jj = (j == 1 || j == n) ? 1.0 : 2.0;
        double g = -(alpha + a_jj) * v.y(i, j);
        if (j > 1) g += v.y(i, j - 1);
        if (j < n) g += v.y(i, j + 1);
        grad->y(i, j) = g;
      }
      grad->y(i, 1) += sqc * xi;
      grad->y(i, n) += -0.5 * sqc * zn;
      grad->x(i) += sqc * v.y(i, 1) + 2.0 * p.hm.c1 * xi;
      grad->z(i + 1) += -0.5 * sqc * v.y(i, n) + 2.0 * p.hm.c2 * zn;
    }
  }
  return value;
}

// Boxed flavour with the (C/n)-scaled coupling; rejects out-of-domain points.
inline double eval_ncsc_sg(const UnscaledParams& p, const ChainPoint& v,
                           ChainPoint* grad = nullptr) {
  detail::require_in_box(p, v);
  const int T = p.layout.T;
  const int n = p.layout.n;
  if (grad) grad->fill(0.0);
  double value = detail::chain_links(p, v, grad);
  const double cn = p.hm.C / n;
  const double alpha = 1.0 / (static_cast<double>(n) * n);
  for (int i = 1; i <= T - 1; ++i) {
    const double xi = v.x(i);
    const double zn = v.z(i + 1);
    double links = 0.0, norm2 = 0.0;
    for (int j = 1; j < n; ++j) {
      const double dyi = v.y(i, j) - v.y(i, j + 1);
      links += dyi * dyi;
    }
    for (int j = 1; j <= n; ++j) norm2 += v.y(i, j) * v.y(i, j);
    value += cn * (-0.5 * links - 0.5 * alpha * norm2 + xi * v.y(i, 1) - 0.5 * zn * v.y(i, n));
    value += p.hm.c1 * xi * xi + p.hm.c2 * zn * zn;
    if (grad) {
      for (int j = 1; j <= n; ++j) {
        const double a_jj = (j == 1 || j == n) ? 1.0 : 2.0;
        double g = -(alpha + a_jj) * v.y(i, j);
        if (j > 1) g += v.y(i, j - 1);
        if (j < n) g += v.y(i, j + 1);
        grad->y(i, j) = cn * g;
      }
      grad->y(i, 1) += cn * xi;
      grad->y(i, n) += -0.5 * cn * zn;
      grad->x(i) += cn * v.y(i, 1) + 2.0 * p.hm.c1 * xi;
      grad->z(i + 1) += -0.5 * cn * v.y(i, n) + 2.0 * p.hm.c2 * zn;
    }
  }
  return value;
}

// Per-block maximizer over y of h (resp. h_sg).  Both reduce to a solve
// against I/n^2 + A; the deterministic flavour carries the sqrt(C/n) scale.
// For the boxed flavour the result lies inside the y box: ||y*||_inf <=
// 30 n R1 <= n R2.
inline std::vector<double> argmax_y(const UnscaledParams& p, double x_i, double z_ip1) {
  const int n = p.layout.n;
  if (p.variant == InstanceVariant::Stochastic) {
    const double r = p.R1 * detail::kBoxSlack;
    if (std::abs(x_i) > r || std::abs(z_ip1) > r)
      throw std::domain_error("argmax_y: scalars outside the R1 box");
  }
  const double alpha = 1.0 / (static_cast<double>(n) * n);
  const TridiagOperator op(n, alpha, TridiagVariant::FreeEnds);
  std::vector<double> b(n, 0.0);
  b[0] = x_i;
  b[n - 1] = -0.5 * z_ip1;
  std::vector<double> y = op.solve(b);
  if (p.variant == InstanceVariant::Deterministic) {
    const double sqc = std::sqrt(p.hm.C / n);
    for (double& v : y) v *= sqc;
  }
  return y;
}

// Envelope f_m(x,z) = max_y f(x,z;y).  Identical for both flavours on the
// common box: the compensated coefficients collapse every maximized block to
// 6 (x_i - z_{i+1}/2)^2.
inline double eval_fm(const UnscaledParams& p, std::span<const double> x,
                      std::span<const double> z, std::vector<double>* gx = nullptr,
                      std::vector<double>* gz = nullptr) {
  const int T = p.layout.T;
  if (static_cast<int>(x.size()) != T || static_cast<int>(z.size()) != T - 1)
    throw std::invalid_argument("eval_fm: expected |x| = T and |z| = T-1");
  if (p.variant == InstanceVariant::Stochastic) detail::require_xz_in_box(p, x, z);
  if (gx) gx->assign(T, 0.0);
  if (gz) gz->assign(T - 1, 0.0);
  double value = -psi(1.0) * phi(x[0]);
  if (gx) (*gx)[0] += -psi(1.0) * phi_prime(x[0]);
  for (int i = 2; i <= T; ++i) {
    const double zi = z[i - 2];
    const double xi = x[i - 1];
    value += psi(-zi) * phi(-xi) - psi(zi) * phi(xi);
    if (gx) (*gx)[i - 1] += -psi(-zi) * phi_prime(-xi) - psi(zi) * phi_prime(xi);
    if (gz) (*gz)[i - 2] += -psi_prime(-zi) * phi(-xi) - psi_prime(zi) * phi(xi);
  }
  for (int i = 1; i <= T - 1; ++i) {
    const double w = x[i - 1] - 0.5 * z[i - 1];
    value += 6.0 * w * w;
    if (gx) (*gx)[i - 1] += 12.0 * w;
    if (gz) (*gz)[i - 1] += -6.0 * w;
  }
  return value;
}

// ---------------------------------------------------------------------------
// Certified smoothness / gradient constants.
//
// The chain-ordered Hessian of either joint instance is tridiagonal, so its
// spectral norm is bounded by the worst Gershgorin row sum; rows are bounded
// entrywise by the component-function suprema plus the coupling coefficients.
// G bounds the gradient sup-norm of the boxed flavour coordinatewise over its
// domain.  All three are upper bounds by construction; samples may sit well
// below them.
// ---------------------------------------------------------------------------
struct CertifiedConstants {
  double ell0 = 0.0;  // smoothness of the joint instance
  double ellm = 0.0;  // smoothness of the envelope f_m
  double G = kInf;    // sup-norm gradient bound (finite for the boxed flavour)
};

inline CertifiedConstants estimate_constants(InstanceVariant variant, const HmCoefficients& hm,
                                             int n, double R1, double R2) {
  const SmoothBounds sb = smooth_bounds();
  const double s_psi2 = psi_second_sup();
  const double s_phi2 = phi_second_sup();
  const double cross = sb.psi_prime_sup * sb.phi_prime_sup;  // psi' * phi' link
  const double alpha = 1.0 / (static_cast<double>(n) * n);
  const double tc1 = 2.0 * std::abs(hm.c1);
  const double tc2 = 2.0 * std::abs(hm.c2);

  CertifiedConstants cc;
  if (variant == InstanceVariant::Deterministic) {
    const double g = std::sqrt(hm.C / n);
    const double row_x = sb.psi_sup * s_phi2 + tc1 + cross + g;
    const double row_z = s_psi2 * sb.phi_sup + tc2 + cross + 0.5 * g;
    const double row_y = std::max(alpha + 2.0 + g, alpha + 4.0);
    cc.ell0 = std::max({row_x, row_z, row_y});
    cc.G = kInf;
  } else {
    const double cn = hm.C / n;
    const double row_x = sb.psi_sup * s_phi2 + tc1 + cross + cn;
    const double row_z = s_psi2 * sb.phi_sup + tc2 + cross + 0.5 * cn;
    const double row_y = std::max(cn * (alpha + 3.0), cn * (alpha + 4.0));
    cc.ell0 = std::max({row_x, row_z, row_y});
    const double gx = sb.psi_sup * sb.phi_prime_sup + hm.C * R2 + tc1 * R1;
    const double gz = sb.psi_prime_sup * sb.phi_sup + 0.5 * hm.C * R2 + tc2 * R1;
    const double gy = hm.C * (alpha + 4.0) * R2 + hm.C * R1 / n;
    cc.G = std::max({gx, gz, gy});
  }
  // Envelope rows: x couples to z_i (psi'/phi' link), z_{i+1} (coefficient 6)
  // and its own 12 w term; z symmetrically.
  const double row_mx = sb.psi_sup * s_phi2 + 12.0 + cross + 6.0;
  const double row_mz = s_psi2 * sb.phi_sup + 3.0 + cross + 6.0;
  cc.ellm = std::max(row_mx, row_mz);
  return cc;
}

// ---------------------------------------------------------------------------
// User-level parameters and the scaled instance.
// ---------------------------------------------------------------------------
struct InstanceSpec {
  double L = 1.0;
  double mu = 1.0;
  double Delta = 1.0;
  double eps = 0.1;
  std::optional<double> sigma;  // absent = deterministic oracle setting
  double R1 = 2.0;
  double R2 = 60.0;

  InstanceVariant variant() const {
    return sigma ? InstanceVariant::Stochastic : InstanceVariant::Deterministic;
  }
};

struct DerivedConstants {
  double kappa = 1.0;
  int n = 0;
  int T = 0;
  double lambda = 0.0;
  double ell0 = 0.0;
  double ellm = 0.0;
  double G = kInf;            // unscaled gradient bound
  double p = 1.0;             // Bernoulli reveal probability
  double Lm = 0.0;            // smoothness of the scaled envelope, ellm*L/ell0
  double grad_inf_bound = kInf;  // scaled: (L*lambda/ell0)*G
  HmCoefficients hm{};
};

namespace detail {

struct ResolvedN {
  int n;
  HmCoefficients hm;
  CertifiedConstants cc;
};

// n must satisfy n = floor((kappa/ell0)^{1/2 or 1/3}) where ell0 itself
// depends mildly on n through the coupling coefficients.  The coefficients
// are nearly constant across n, so the iteration settles within a couple of
// steps; the final downward scan guarantees the concavity budget
// n^2 * ell0(n) <= kappa (resp. n^3 * ell0(n) <= kappa) regardless.
inline ResolvedN resolve_subchain_length(double kappa, InstanceVariant variant, double R1,
                                         double R2) {
  const bool det = variant == InstanceVariant::Deterministic;
  auto constants_at = [&](int n) {
    const HmCoefficients hm = hm_coefficients(n);
    return ResolvedN{n, hm, estimate_constants(variant, hm, n, R1, R2)};
  };
  auto candidate = [&](double ell0) {
    const double r = kappa / ell0;
    return static_cast<int>(std::floor(det ? std::sqrt(r) : std::cbrt(r)));
  };

  ResolvedN cur = constants_at(10);
  int hi = 10;
  for (int iter = 0; iter < 40; ++iter) {
    const int next = candidate(cur.cc.ell0);
    if (next < 10) {
      const double need = det ? 100.0 * cur.cc.ell0 : 1000.0 * cur.cc.ell0;
      throw RegimeError("sub-chain length n = " + std::to_string(next) +
                        " < 10: requires kappa >= " + std::to_string(need) +
                        (det ? " (= 100*ell0)" : " (= 1000*ell0)"));
    }
    hi = std::max(hi, next);
    if (next == cur.n && iter > 0) break;
    cur = constants_at(next);
  }
  for (int m = hi + 1; m >= 10; --m) {
    const ResolvedN r = constants_at(m);
    const double budget =
        det ? static_cast<double>(m) * m * r.cc.ell0 : static_cast<double>(m) * m * m * r.cc.ell0;
    if (budget <= kappa) return r;
  }
  throw RegimeError("sub-chain length n >= 10 unattainable for kappa = " + std::to_string(kappa));
}

}  // namespace detail

class ScaledInstance;
ScaledInstance build_scaled(const InstanceSpec& spec);

// The hard instance delivered to algorithms: an exact pushforward of the
// unscaled joint function,
//
//   f(v) = (L lambda^2 / ell0) * f_unscaled(v / lambda),
//
// so that f is L-smooth, mu-strongly concave in y, and f_m(0) - inf f_m stays
// within Delta.  For the boxed flavour the domain scales to radius lambda*R1
// on the x/z coordinates and lambda*n*R2 on each y block.
class ScaledInstance {
 public:
  const InstanceSpec& spec() const { return spec_; }
  const DerivedConstants& derived() const { return d_; }
  const UnscaledParams& unscaled_params() const { return params_; }
  ChainLayout layout() const { return params_.layout; }
  InstanceVariant variant() const { return params_.variant; }
  bool boxed() const { return params_.variant == InstanceVariant::Stochastic; }
  int dim() const { return params_.layout.dim(); }

  double value_grad(const ChainPoint& v, ChainPoint* grad = nullptr) const {
    ChainPoint u = descale(v);
    const double s_val = spec_.L * d_.lambda * d_.lambda / d_.ell0;
    const double s_grad = spec_.L * d_.lambda / d_.ell0;
    const double val = params_.variant == InstanceVariant::Deterministic
                           ? eval_ncsc(params_, u, grad)
                           : eval_ncsc_sg(params_, u, grad);
    if (grad)
      for (double& g : grad->flat()) g *= s_grad;
    return s_val * val;
  }

  double fm_value_grad(std::span<const double> x, std::span<const double> z,
                       std::vector<double>* gx = nullptr, std::vector<double>* gz = nullptr) const {
    std::vector<double> ux(x.begin(), x.end()), uz(z.begin(), z.end());
    for (double& v : ux) v /= d_.lambda;
    for (double& v : uz) v /= d_.lambda;
    const double s_val = spec_.L * d_.lambda * d_.lambda / d_.ell0;
    const double s_grad = spec_.L * d_.lambda / d_.ell0;
    const double val = eval_fm(params_, ux, uz, gx, gz);
    if (gx)
      for (double& g : *gx) g *= s_grad;
    if (gz)
      for (double& g : *gz) g *= s_grad;
    return s_val * val;
  }

  std::vector<double> argmax_y_block(double x_i, double z_ip1) const {
    std::vector<double> y = argmax_y(params_, x_i / d_.lambda, z_ip1 / d_.lambda);
    for (double& v : y) v *= d_.lambda;
    return y;
  }

  // Per-coordinate box radii in chain order (+inf when unconstrained).
  std::vector<double> domain_radii() const {
    const ChainLayout& L = params_.layout;
    std::vector<double> r(L.dim(), kInf);
    if (!boxed()) return r;
    const double rxz = d_.lambda * params_.R1;
    const double ry = d_.lambda * static_cast<double>(L.n) * params_.R2;
    for (int k = 0; k < L.dim(); ++k) {
      const auto c = L.coord(k);
      r[k] = (c.kind == ChainLayout::Kind::Y) ? ry : rxz;
    }
    return r;
  }

  double domain_radius_xz() const { return boxed() ? d_.lambda * params_.R1 : kInf; }

  friend ScaledInstance build_scaled(const InstanceSpec& spec);

 private:
  ChainPoint descale(const ChainPoint& v) const {
    ChainPoint u = v;
    for (double& val : u.flat()) val /= d_.lambda;
    return u;
  }

  InstanceSpec spec_;
  DerivedConstants d_;
  UnscaledParams params_;
};

inline ScaledInstance build_scaled(const InstanceSpec& spec) {
  if (!(spec.L > 0.0) || !(spec.mu > 0.0) || !(spec.Delta > 0.0) || !(spec.eps > 0.0))
    throw std::invalid_argument("InstanceSpec: L, mu, Delta, eps must be positive");
  if (spec.L < spec.mu)
    throw std::invalid_argument("InstanceSpec: need L >= mu (kappa >= 1)");
  const bool det = spec.variant() == InstanceVariant::Deterministic;
  if (!det) {
    if (!(*spec.sigma > 0.0)) throw std::invalid_argument("InstanceSpec: sigma must be > 0");
    if (spec.R1 < 2.0) throw std::invalid_argument("InstanceSpec: requires R1 >= 2");
    if (spec.R2 < 30.0 * spec.R1)
      throw std::invalid_argument("InstanceSpec: requires R2 >= 30*R1");
  }

  DerivedConstants d;
  d.kappa = spec.L / spec.mu;
  const auto resolved =
      detail::resolve_subchain_length(d.kappa, spec.variant(), spec.R1, spec.R2);
  d.n = resolved.n;
  d.hm = resolved.hm;
  d.ell0 = resolved.cc.ell0;
  d.ellm = resolved.cc.ellm;
  d.G = resolved.cc.G;
  if (!det && !(d.hm.C >= 1.0))
    throw RegimeError("coupling constant C = " + std::to_string(d.hm.C) +
                      " < 1: strong concavity budget violated");

  const double denom = det ? 108.0 : 432.0;
  const double t_real = spec.L * spec.Delta / (denom * d.ell0 * spec.eps * spec.eps);
  d.T = static_cast<int>(std::floor(t_real));
  if (d.T < 2)
    throw RegimeError("chain length T = " + std::to_string(d.T) +
                      " < 2: requires L*Delta >= " + std::to_string(2.0 * denom * d.ell0) +
                      " * eps^2");
  d.lambda = (det ? 3.0 : 6.0) * d.ell0 * spec.eps / spec.L;
  d.Lm = d.ellm * spec.L / d.ell0;
  if (!det) {
    d.grad_inf_bound = spec.L * d.lambda / d.ell0 * d.G;  // = 6*eps*G
    const double s2 = *spec.sigma * *spec.sigma;
    d.p = std::min(1.0, 36.0 * spec.eps * spec.eps * d.G * d.G / s2);
  }

  ScaledInstance inst;
  inst.spec_ = spec;
  inst.d_ = d;
  inst.params_ = UnscaledParams{ChainLayout{d.T, d.n}, d.hm, spec.variant(), spec.R1, spec.R2};
  return inst;
}

// Inverts the parameter recipes: picks (kappa, Delta) so that the built
// instance lands on the requested sub-chain length and chain length.  Handy
// for desk-scale experiments and tests.
inline InstanceSpec spec_for_regime(InstanceVariant variant, int n_target, int T_target,
                                    double eps = 0.1, double L = 1.0,
                                    std::optional<double> sigma = std::nullopt, double R1 = 2.0,
                                    double R2 = 60.0) {
  if (n_target < 10) throw std::invalid_argument("spec_for_regime: n_target must be >= 10");
  if (T_target < 2) throw std::invalid_argument("spec_for_regime: T_target must be >= 2");
  const bool det = variant == InstanceVariant::Deterministic;
  if (!det && !sigma)
    throw std::invalid_argument("spec_for_regime: stochastic variant needs sigma");
  const HmCoefficients hm = hm_coefficients(n_target);
  const CertifiedConstants cc = estimate_constants(variant, hm, n_target, R1, R2);
  const double half = static_cast<double>(n_target) + 0.5;
  const double kappa = cc.ell0 * (det ? half * half : half * half * half);
  InstanceSpec spec;
  spec.L = L;
  spec.mu = L / kappa;
  spec.eps = eps;
  spec.Delta = (det ? 108.0 : 432.0) * cc.ell0 * eps * eps *
               (static_cast<double>(T_target) + 0.5) / L;
  spec.sigma = det ? std::nullopt : sigma;
  spec.R1 = R1;
  spec.R2 = R2;
  return spec;
}

}  // namespace minimax_lb
