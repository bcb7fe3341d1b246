#pragma once

#include <chrono>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "minimax_lb/algorithms.hpp"
#include "minimax_lb/instances.hpp"
#include "minimax_lb/oracles.hpp"
#include "minimax_lb/special_functions.hpp"
#include "minimax_lb/tridiagonal.hpp"

// Sampled verification of every quantitative property the constructions rely
// on, with explicit margins.  Each check reports its most binding observation
// as `worst_margin`; nonnegative margins pass.  The CLI `verify-lemmas`
// subcommand runs the whole battery.

namespace minimax_lb {

struct LemmaResult {
  std::string id;
  std::string statement;
  long samples = 0;
  double worst_margin = 0.0;
  bool pass = false;
  double seconds = 0.0;
};

struct VerificationReport {
  std::vector<LemmaResult> entries;
  bool all_pass() const {
    for (const auto& e : entries)
      if (!e.pass) return false;
    return true;
  }
};

struct VerifyOptions {
  double sample_scale = 1.0;  // multiplies every default sample count
  std::uint64_t seed = 20260808;
};

namespace detail {

class CheckTimer {
 public:
  CheckTimer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline long scaled_count(long base, double scale) {
  return std::max<long>(16, static_cast<long>(base * scale));
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Central second difference along a unit direction.
template <class F>
double directional_curvature(F&& f, std::vector<double>& v, const std::vector<double>& dir,
                             double h) {
  const double f0 = f(v);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] += h * dir[k];
  const double fp = f(v);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] -= 2.0 * h * dir[k];
  const double fm = f(v);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] += h * dir[k];
  return (fp - 2.0 * f0 + fm) / (h * h);
}

inline std::vector<double> random_unit(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> gauss;
  std::vector<double> d(dim);
  double ss = 0.0;
  for (double& x : d) {
    x = gauss(rng);
    ss += x * x;
  }
  const double inv = 1.0 / std::sqrt(ss);
  for (double& x : d) x *= inv;
  return d;
}

// Default desk-scale parameter packs used by the sampled checks.
inline UnscaledParams verify_params(InstanceVariant variant, int T = 8, int n = 10) {
  return make_unscaled_params(T, n, variant);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Component function properties: range bounds, vanishing branch, the
// psi*phi' > 1 product on x >= 1, |y| < 1, and derivative consistency.
// ---------------------------------------------------------------------------
inline LemmaResult check_component_functions(const VerifyOptions& opt) {
  detail::CheckTimer timer;
  LemmaResult res;
  res.id = "lemma-1";
  res.statement = "psi/phi range bounds, flat branch, product floor, derivative consistency";
  std::mt19937_64 rng(opt.seed ^ 0x11d1ULL);
  const long N = detail::scaled_count(1'000'000, opt.sample_scale);
  res.samples = N;
  const SmoothBounds sb = smooth_bounds();
  double margin = kInf;

  for (long s = 0; s < N; ++s) {
    const double x = detail::uniform_in(rng, -30.0, 30.0);
    const double ps = psi(x), pp = psi_prime(x), ph = phi(x), hp = phi_prime(x);
    margin = std::min({margin, ps, sb.psi_sup - ps, pp, sb.psi_prime_sup - pp, ph,
                       sb.phi_sup - ph, hp, sb.phi_prime_sup - hp});
    if (x <= 0.5 && (ps != 0.0 || pp != 0.0)) margin = std::min(margin, -1.0);
  }

  // product floor on a grid that stays strictly inside |y| < 1
  for (int i = 0; i <= 200; ++i) {
    const double x = 1.0 + 9.0 * i / 200.0;
    for (int j = 0; j < 200; ++j) {
      const double y = -1.0 + (j + 0.5) / 100.0;
      margin = std::min(margin, psi(x) * phi_prime(y) - 1.0);
    }
  }

  // derivatives vs central differences away from the kink at 1/2
  const double fd_tol = 1e-6;
  const double h = 1e-6;
  for (int i = 0; i <= 4000; ++i) {
    const double x = -5.0 + 10.0 * i / 4000.0;
    if (std::abs(x - 0.5) < 2e-3) continue;
    const double dpsi = (psi(x + h) - psi(x - h)) / (2.0 * h);
    const double dphi = (phi(x + h) - phi(x - h)) / (2.0 * h);
    const double err_psi = std::abs(dpsi - psi_prime(x)) / (1.0 + std::abs(psi_prime(x)));
    const double err_phi = std::abs(dphi - phi_prime(x)) / (1.0 + std::abs(phi_prime(x)));
    margin = std::min({margin, fd_tol - err_psi, fd_tol - err_phi});
  }

  res.worst_margin = margin;
  res.pass = margin >= 0.0;
  res.seconds = timer.seconds();
  return res;
}

// ---------------------------------------------------------------------------
// Discovery time of the Bernoulli-gated chain: with probability >= 1 - delta
// the final coordinate is still zero after (len - log(1/delta)) / (2p) calls.
// Checked at delta = 1/2 over many independent replicas.
// ---------------------------------------------------------------------------
inline LemmaResult check_discovery_time(const VerifyOptions& opt) {
  detail::CheckTimer timer;
  LemmaResult res;
  res.id = "lemma-2";
  res.statement = "final coordinate still zero at (n(T-1) - log 2)/(2p) in >= half of replicas";
  const double p = 0.1;
  const InstanceSpec spec = spec_for_regime(InstanceVariant::Stochastic, 10, 4, 0.1, 1.0, 5000.0);
  const ScaledInstance inst = build_scaled(spec);
  const long len = static_cast<long>(inst.derived().n) * (inst.derived().T - 1);
  const long t_star = static_cast<long>(std::floor((len - std::log(2.0)) / (2.0 * p)));
  const long replicas = detail::scaled_count(400, opt.sample_scale);
  res.samples = replicas;

  long still_zero = 0;
  for (long r = 0; r < replicas; ++r) {
    GreedyFillAlgorithm alg;
    StochasticOracle oracle(inst, StochasticOracleConfig{p, derive_seed(opt.seed, 2, r),
                                                         inst.derived().grad_inf_bound});
    const TrajectoryRecord rec = run_zero_respecting(
        alg, inst, oracle, RunOptions{t_star, derive_seed(opt.seed, 3, r), false});
    if (rec.first_chain_complete < 0) ++still_zero;
  }
  const double frac = static_cast<double>(still_zero) / replicas;
  const double bound = 0.5 - 3.0 * std::sqrt(0.25 / replicas);
  res.worst_margin = frac - bound;
  res.pass = res.worst_margin >= 0.0;
  res.seconds = timer.seconds();
  return res;
}

// ---------------------------------------------------------------------------
// Bernoulli oracle: unbiasedness, variance budget G^2(1-p)/p, and the
// probability-p support property.
// ---------------------------------------------------------------------------
inline LemmaResult check_bernoulli_oracle(const VerifyOptions& opt) {
  detail::CheckTimer timer;
  LemmaResult res;
  res.id = "lemma-4";
  res.statement = "oracle unbiased, variance within G^2(1-p)/p, support escape rate <= p";
  const InstanceSpec spec = spec_for_regime(InstanceVariant::Stochastic, 10, 4, 0.1, 1.0, 5000.0);
  const ScaledInstance inst = build_scaled(spec);
  const long draws = detail::scaled_count(100'000, opt.sample_scale);
  res.samples = draws;
  std::mt19937_64 rng(opt.seed ^ 0x44aaULL);
  double margin = kInf;

  // generic in-domain point with a solid prefix
  ChainPoint v(inst.layout());
  const double lambda = inst.derived().lambda;
  for (int k = 0; k < 7; ++k)
    v[k] = (k % 2 == 0 ? 1.0 : -1.0) * detail::uniform_in(rng, 0.7, 1.5) * lambda;
  const OracleResponse truth = deterministic_oracle(inst, v);
  const double Gb = inst.derived().grad_inf_bound;

  for (double p : {0.05, 0.5, 1.0}) {
    StochasticOracle oracle(inst, StochasticOracleConfig{p, derive_seed(opt.seed, 4, (int)(p*100)), Gb});
    std::vector<double> mean(truth.gradient.size(), 0.0);
    double var = 0.0;
    for (long s = 0; s < draws; ++s) {
      const OracleResponse g = oracle(v);
      double dev2 = 0.0;
      for (std::size_t k = 0; k < mean.size(); ++k) {
        mean[k] += g.gradient[k];
        const double d = g.gradient[k] - truth.gradient[k];
        dev2 += d * d;
      }
      var += dev2;
    }
    var /= draws;
    const int istar = *next_coordinate(v);
    for (std::size_t k = 0; k < mean.size(); ++k) {
      mean[k] /= draws;
      const double se = (static_cast<int>(k) == istar)
                            ? std::abs(truth.gradient[k]) * std::sqrt((1.0 - p) / (p * draws))
                            : 0.0;
      margin = std::min(margin, 5.0 * se - std::abs(mean[k] - truth.gradient[k]));
    }
    margin = std::min(margin, Gb * Gb * (1.0 - p) / p - var);
    if (p == 1.0 && var != 0.0) margin = std::min(margin, -1.0);
  }

  const ProbabilityPReport pr = verify_probability_p(
      inst, StochasticOracleConfig{0.1, derive_seed(opt.seed, 5), Gb},
      static_cast<int>(detail::scaled_count(10'000, opt.sample_scale)), opt.seed ^ 0x77ULL);
  margin = std::min(margin, pr.frequency_bound - pr.escape_frequency);
  if (!pr.support_always_within) margin = std::min(margin, -1.0);

  res.worst_margin = margin;
  res.pass = margin >= 0.0;
  res.seconds = timer.seconds();
  return res;
}

// ---------------------------------------------------------------------------
// Closed form of the maximized coupling: quadratic formula vs a solve-based
// maximization, |difference| <= 1e-8 (1 + |h_m|).
// ---------------------------------------------------------------------------
inline LemmaResult check_hm_closed_form(const VerifyOptions& opt) {
  detail::CheckTimer timer;
  LemmaResult res;
  res.id = "lemma-5";
  res.statement = "h_m quadratic formula matches solve-based maximization";
  std::mt19937_64 rng(opt.seed ^ 0x55cdULL);
  const long N = detail::scaled_count(1000, opt.sample_scale);
  res.samples = 2 * N;
  double margin = kInf;
  for (int n : {10, 100}) {
    const HmCoefficients hm = hm_coefficients(n);
    const TridiagOperator op(n, 1.0 / (static_cast<double>(n) * n), TridiagVariant::FreeEnds);
    for (long s = 0; s < N; ++s) {
      const double x = detail::uniform_in(rng, -3.0, 3.0);
      const double z = detail::uniform_in(rng, -3.0, 3.0);
      const double formula = hm.C * (0.5 * hm.a1 * x * x - 0.5 * hm.a2 * x * z +
                                     hm.a1 / 8.0 * z * z);
      std::vector<double> b(n, 0.0);
      b[0] = x;
      b[n - 1] = -0.5 * z;
      const std::vector<double> y = op.solve(b);
      double bty = 0.0;
      for (int j = 0; j < n; ++j) bty += b[j] * y[j];
      const double solved = 0.5 * (hm.C / n) * bty;
      margin = std::min(margin, 1e-8 * (1.0 + std::abs(formula)) - std::abs(formula - solved));
    }
  }
  res.worst_margin = margin;
  res.pass = margin >= 0.0;
  res.seconds = timer.seconds();
  return res;
}

// ---------------------------------------------------------------------------
// Envelope gradient floor: any (x, z) with some |z_i| < 1 has
// ||grad f_m||_2 > 1/3 (unconstrained flavour).
// ---------------------------------------------------------------------------
inline LemmaResult check_envelope_gradient_floor(const VerifyOptions& opt) {
  detail::CheckTimer timer;
  LemmaResult res;
  res.id = "lemma-6";
  res.statement = "||grad f_m|| > 1/3 whenever some |z_i| < 1";
  const UnscaledParams params = detail::verify_params(InstanceVariant::Deterministic);
  const int T = params.layout.T;
  std::mt19937_64 rng(opt.seed ^ 0x66aaULL);
  const long N = detail::scaled_count(10'000, opt.sample_scale);
  res.samples = N;
  double margin = kInf;
  std::vector<double> x(T), z(T - 1), gx, gz;
  for (long s = 0; s < N; ++s) {
    for (double& v : x) v = detail::uniform_in(rng, -3.0, 3.0);
    for (double& v : z) v = detail::uniform_in(rng, -3.0, 3.0);
    const int j = static_cast<int>(rng() % z.size());
    z[j] = detail::uniform_in(rng, -0.999, 0.999);
    eval_fm(params, x, z, &gx, &gz);
    double ss = 0.0;
    for (double g : gx) ss += g * g;
    for (double g : gz) ss += g * g;
    margin = std::min(margin, std::sqrt(ss) - 1.0 / 3.0);
  }
  res.worst_margin = margin;
  res.pass = margin > 0.0;
  res.seconds = timer.seconds();
  return res;
}

// ---------------------------------------------------------------------------
// Boundedness and smoothness of the joint instance: f_m(0,0) - min sampled
// <= 12T, and sampled directional curvature within the certified ell0.
// ---------------------------------------------------------------------------
inline LemmaResult check_boundedness_and_smoothness(const VerifyOptions& opt) {
  detail::CheckTimer timer;
  LemmaResult res;
  res.id = "lemma-7";
  res.statement = "f_m(0,0) - min <= 12T; sampled curvature of the joint function <= ell0";
  const UnscaledParams params = detail::verify_params(InstanceVariant::Deterministic);
  const int T = params.layout.T;
  std::mt19937_64 rng(opt.seed ^ 0x77bbULL);
  const long N = detail::scaled_count(1'000'000, opt.sample_scale);
  const long M = detail::scaled_count(10'000, opt.sample_scale);
  res.samples = N + M;

  std::vector<double> x(T), z(T - 1);
  std::vector<double> zero_x(T, 0.0), zero_z(T - 1, 0.0);
  const double f0 = eval_fm(params, zero_x, zero_z);
  double fmin = f0;
  for (long s = 0; s < N; ++s) {
    for (double& v : x) v = detail::uniform_in(rng, -6.0, 6.0);
    for (double& v : z) v = detail::uniform_in(rng, -6.0, 6.0);
    fmin = std::min(fmin, eval_fm(params, x, z));
  }
  double margin = 12.0 * T - (f0 - fmin);

  const CertifiedConstants cc =
      estimate_constants(InstanceVariant::Deterministic, params.hm, params.layout.n, 2.0, 60.0);
  const int dim = params.layout.dim();
  auto value_at = [&](std::vector<double>& flat) {
    return eval_ncsc(params, ChainPoint(params.layout, flat));
  };
  std::vector<double> v(dim);
  const double h = 1e-3;
  for (long s = 0; s < M; ++s) {
    for (double& c : v) c = detail::uniform_in(rng, -2.0, 2.0);
    const std::vector<double> dir = detail::random_unit(rng, dim);
    const double curv = std::abs(detail::directional_curvature(value_at, v, dir, h));
    margin = std::min(margin, cc.ell0 - curv);
  }

  res.worst_margin = margin;
  res.pass = margin >= 0.0;
  res.seconds = timer.seconds();
  return res;
}

// ---------------------------------------------------------------------------
// First-column bounds of (I/n^2 + A)^{-1}: every entry of column one lies in
// [0.1 n, 20 n], and the closed form matches a direct solve to 1e-8.
// ---------------------------------------------------------------------------
inline LemmaResult check_inverse_column_bounds(const VerifyOptions& opt) {
  detail::CheckTimer timer;
  LemmaResult res;
  res.id = "lemma-8";
  res.statement = "column entries of (I/n^2 + A)^{-1} within [0.1n, 20n]; closed form vs solve";
  (void)opt;
  double margin = kInf;
  long samples = 0;
  for (int n : {10, 50, 100, 500}) {
    const TridiagOperator op(n, 1.0 / (static_cast<double>(n) * n), TridiagVariant::FreeEnds);
    const std::vector<double> closed = op.first_column_closed_form();
    std::vector<double> e1(n, 0.0);
    e1[0] = 1.0;
    const std::vector<double> solved = op.solve(e1);
    for (int i = 0; i < n; ++i) {
      margin = std::min({margin, (closed[i] - 0.1 * n) / n, (20.0 * n - closed[i]) / n});
      const double rel = std::abs(closed[i] - solved[i]) / std::abs(solved[i]);
      margin = std::min(margin, 1e-8 - rel);
      ++samples;
    }
  }
  res.samples = samples;
  res.worst_margin = margin;
  res.pass = margin >= 0.0;
  res.seconds = timer.seconds();
  return res;
}

// ---------------------------------------------------------------------------
// Maximizer containment for the boxed coupling: ||y*||_inf <= 30 n R1 <= n R2,
// and the boxed maximum coincides with the unconstrained one.
// ---------------------------------------------------------------------------
inline LemmaResult check_argmax_containment(const VerifyOptions& opt) {
  detail::CheckTimer timer;
  LemmaResult res;
  res.id = "lemma-9";
  res.statement = "||argmax_y||_inf <= 30 n R1 and boxed max equals unconstrained max";
  UnscaledParams params = detail::verify_params(InstanceVariant::Stochastic, 8, 10);
  const int n = params.layout.n;
  const double R1 = params.R1;
  std::mt19937_64 rng(opt.seed ^ 0x99ccULL);
  const long N = detail::scaled_count(10'000, opt.sample_scale);
  res.samples = N;
  double margin = kInf;
  const TridiagOperator op(n, 1.0 / (static_cast<double>(n) * n), TridiagVariant::FreeEnds);
  auto h_sg = [&](double x, double z, const std::vector<double>& y) {
    const std::vector<double> my = op.apply(y);
    double quad = 0.0, lin = 0.0;
    for (int j = 0; j < n; ++j) quad += y[j] * my[j];
    lin = x * y[0] - 0.5 * z * y[n - 1];
    return params.hm.C / n * (-0.5 * quad + lin);
  };
  for (long s = 0; s < N; ++s) {
    const double x = detail::uniform_in(rng, -R1, R1);
    const double z = detail::uniform_in(rng, -R1, R1);
    const std::vector<double> ystar = argmax_y(params, x, z);
    double norm = 0.0;
    for (double v : ystar) norm = std::max(norm, std::abs(v));
    margin = std::min(margin, 30.0 * n * R1 - norm);
    const double hm_val = params.hm.C * (0.5 * params.hm.a1 * x * x - 0.5 * params.hm.a2 * x * z +
                                         params.hm.a1 / 8.0 * z * z);
    margin = std::min(margin, 1e-8 * (1.0 + std::abs(hm_val)) - std::abs(h_sg(x, z, ystar) - hm_val));
  }
  res.worst_margin = margin;
  res.pass = margin >= 0.0;
  res.seconds = timer.seconds();
  return res;
}

// ---------------------------------------------------------------------------
// Boxed flavour certificates: envelope curvature within ell_m (and ell_m >= 1),
// gradient sup-norm within G over the domain boxes.
// ---------------------------------------------------------------------------
inline LemmaResult check_boxed_certificates(const VerifyOptions& opt) {
  detail::CheckTimer timer;
  LemmaResult res;
  res.id = "lemma-10";
  res.statement = "envelope curvature <= ell_m, ell_m >= 1, sup-norm gradient <= G on the box";
  UnscaledParams params = detail::verify_params(InstanceVariant::Stochastic, 8, 10);
  const int T = params.layout.T;
  const int n = params.layout.n;
  const CertifiedConstants cc =
      estimate_constants(InstanceVariant::Stochastic, params.hm, n, params.R1, params.R2);
  std::mt19937_64 rng(opt.seed ^ 0xaaddULL);
  const long N = detail::scaled_count(10'000, opt.sample_scale);
  res.samples = 2 * N;
  double margin = cc.ellm - 1.0;

  // envelope curvature on the (x, z) box
  const int exz = T + (T - 1);
  std::vector<double> w(exz);
  auto fm_at = [&](std::vector<double>& flat) {
    return eval_fm(params, std::span<const double>(flat.data(), T),
                   std::span<const double>(flat.data() + T, T - 1));
  };
  const double h = 1e-3;
  for (long s = 0; s < N; ++s) {
    for (double& c : w) c = detail::uniform_in(rng, -params.R1 * 0.9, params.R1 * 0.9);
    const std::vector<double> dir = detail::random_unit(rng, exz);
    const double curv = std::abs(detail::directional_curvature(fm_at, w, dir, h));
    margin = std::min(margin, cc.ellm - curv);
  }

  // gradient bound on the full box
  ChainPoint v(params.layout), g(params.layout);
  for (long s = 0; s < N; ++s) {
    for (int i = 1; i <= T; ++i) v.x(i) = detail::uniform_in(rng, -params.R1, params.R1);
    for (int i = 2; i <= T; ++i) v.z(i) = detail::uniform_in(rng, -params.R1, params.R1);
    for (int i = 1; i <= T - 1; ++i)
      for (int j = 1; j <= n; ++j)
        v.y(i, j) = detail::uniform_in(rng, -n * params.R2, n * params.R2);
    eval_ncsc_sg(params, v, &g);
    double ginf = 0.0;
    for (double c : g.flat()) ginf = std::max(ginf, std::abs(c));
    margin = std::min(margin, cc.G - ginf);
  }

  res.worst_margin = margin;
  res.pass = margin >= 0.0;
  res.seconds = timer.seconds();
  return res;
}

// ---------------------------------------------------------------------------
// Projected stationarity floor for the boxed envelope: in-box (x, z) with
// some |z_i| < 1 is never 1/3-stationary at scale ell_m.
// ---------------------------------------------------------------------------
inline LemmaResult check_boxed_stationarity_floor(const VerifyOptions& opt) {
  detail::CheckTimer timer;
  LemmaResult res;
  res.id = "lemma-11";
  res.statement = "projected stationarity measure at scale ell_m > 1/3 while some |z_i| < 1";
  UnscaledParams params = detail::verify_params(InstanceVariant::Stochastic, 8, 10);
  const int T = params.layout.T;
  const CertifiedConstants cc =
      estimate_constants(InstanceVariant::Stochastic, params.hm, params.layout.n, params.R1,
                         params.R2);
  std::mt19937_64 rng(opt.seed ^ 0xbbeeULL);
  const long N = detail::scaled_count(10'000, opt.sample_scale);
  res.samples = N;
  double margin = kInf;
  std::vector<double> x(T), z(T - 1), gx, gz;
  const BoxDomain box{std::vector<double>(2 * T - 1, params.R1)};
  std::vector<double> point(2 * T - 1), grad(2 * T - 1);
  for (long s = 0; s < N; ++s) {
    for (double& v : x) v = detail::uniform_in(rng, -params.R1, params.R1);
    for (double& v : z) v = detail::uniform_in(rng, -params.R1, params.R1);
    const int j = static_cast<int>(rng() % z.size());
    z[j] = detail::uniform_in(rng, -0.999, 0.999);
    eval_fm(params, x, z, &gx, &gz);
    for (int i = 0; i < T; ++i) {
      point[i] = x[i];
      grad[i] = gx[i];
    }
    for (int i = 0; i < T - 1; ++i) {
      point[T + i] = z[i];
      grad[T + i] = gz[i];
    }
    margin = std::min(margin, stationarity(box, grad, point, cc.ellm) - 1.0 / 3.0);
  }
  res.worst_margin = margin;
  res.pass = margin > 0.0;
  res.seconds = timer.seconds();
  return res;
}

inline VerificationReport verify_all_lemmas(const VerifyOptions& opt = {}) {
  VerificationReport report;
  report.entries.push_back(check_component_functions(opt));
  report.entries.push_back(check_discovery_time(opt));
  report.entries.push_back(check_bernoulli_oracle(opt));
  report.entries.push_back(check_hm_closed_form(opt));
  report.entries.push_back(check_envelope_gradient_floor(opt));
  report.entries.push_back(check_boundedness_and_smoothness(opt));
  report.entries.push_back(check_inverse_column_bounds(opt));
  report.entries.push_back(check_argmax_containment(opt));
  report.entries.push_back(check_boxed_certificates(opt));
  report.entries.push_back(check_boxed_stationarity_floor(opt));
  return report;
}

}  // namespace minimax_lb
