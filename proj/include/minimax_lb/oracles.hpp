#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "minimax_lb/chain.hpp"
#include "minimax_lb/instances.hpp"
#include "minimax_lb/rng.hpp"

namespace minimax_lb {

// First-order oracle response.  `support` is exactly the set of chain
// indices carrying a nonzero gradient entry; `revealed` reports whether a
// stochastic call passed the frontier coordinate through (always false for
// deterministic responses and when the true frontier gradient is zero).
struct OracleResponse {
  double value = 0.0;
  std::vector<double> gradient;
  std::vector<int> support;
  bool revealed = false;
};

inline OracleResponse deterministic_oracle(const ScaledInstance& inst, const ChainPoint& v) {
  OracleResponse resp;
  ChainPoint grad(inst.layout());
  resp.value = inst.value_grad(v, &grad);
  resp.gradient = std::move(grad.flat());
  resp.support = ChainPoint::support_of(resp.gradient);
  return resp;
}

// Smallest chain index whose coordinate is exactly zero (the next coordinate
// the Bernoulli perturbation gates); nullopt when every coordinate is active.
inline std::optional<int> next_coordinate(const ChainPoint& v) {
  return next_zero_index(v.flat());
}

struct StochasticOracleConfig {
  double p = 1.0;          // reveal probability, in (0, 1]
  std::uint64_t seed = 0;  // stream key
  double G_bound = kInf;   // certified sup-norm bound of the underlying gradient
};

// Bernoulli-gated oracle: the response equals the true gradient except at
// the first zero coordinate i*, which is scaled by xi/p with
// xi ~ Bernoulli(p) drawn from the counter stream keyed by (seed, call).
// Unbiased by construction, with per-call variance at most G^2 (1-p)/p.
class StochasticOracle {
 public:
  StochasticOracle(const ScaledInstance& inst, StochasticOracleConfig cfg)
      : inst_(&inst), cfg_(cfg) {
    if (!(cfg.p > 0.0 && cfg.p <= 1.0))
      throw std::invalid_argument("StochasticOracle: p must lie in (0, 1]");
  }

  const StochasticOracleConfig& config() const { return cfg_; }
  std::uint64_t calls() const { return calls_; }

  OracleResponse operator()(const ChainPoint& v) {
    OracleResponse resp = deterministic_oracle(*inst_, v);
    const std::uint64_t counter = calls_++;
    const std::optional<int> istar = next_coordinate(v);
    if (!istar) return resp;
    const bool xi = counter_bernoulli(cfg_.seed, counter, cfg_.p);
    const double true_entry = resp.gradient[*istar];
    if (true_entry == 0.0) return resp;  // perturbation is a no-op
    resp.gradient[*istar] = xi ? true_entry / cfg_.p : 0.0;
    resp.revealed = xi;
    if (!xi) resp.support = ChainPoint::support_of(resp.gradient);
    return resp;
  }

 private:
  const ScaledInstance* inst_;
  StochasticOracleConfig cfg_;
  std::uint64_t calls_ = 0;
};

// Oracle wired with the variance-budget recipe: p = min{1, 36 eps^2 G^2 / sigma^2}
// and the instance's certified scaled gradient bound.
inline StochasticOracle make_recipe_oracle(const ScaledInstance& inst, std::uint64_t seed) {
  if (!inst.boxed())
    throw std::invalid_argument("make_recipe_oracle: instance has no bounded gradient");
  return StochasticOracle(inst,
                          StochasticOracleConfig{inst.derived().p, seed,
                                                 inst.derived().grad_inf_bound});
}

// Empirical check of the probability-p chain property: at random points
// supported on a prefix {1..i-1}, the response support must stay within
// {1..i} always, and escape the prefix with frequency at most p (up to
// binomial noise).
struct ProbabilityPReport {
  int trials = 0;
  int escapes = 0;
  double escape_frequency = 0.0;
  double frequency_bound = 0.0;  // p + 3 * binomial standard error
  bool support_always_within = true;
  bool pass = false;
};

inline ProbabilityPReport verify_probability_p(const ScaledInstance& inst,
                                               const StochasticOracleConfig& cfg, int trials,
                                               std::uint64_t point_seed = 1234) {
  StochasticOracle oracle(inst, cfg);
  const ChainLayout layout = inst.layout();
  const int dim = layout.dim();
  const double lambda = inst.derived().lambda;
  ProbabilityPReport report;
  report.trials = trials;
  std::uint64_t ctr = 0;
  auto uniform = [&]() { return counter_uniform(point_seed, ctr++); };
  for (int t = 0; t < trials; ++t) {
    // prefix length i-1 in [0, dim-1]; coordinates drawn with the component
    // branch active (|value|/lambda in [0.6, 1.8]) so the frontier gradient
    // is generically nonzero.
    const int i = 1 + static_cast<int>(uniform() * dim) % dim;
    ChainPoint v(layout);
    for (int k = 0; k + 1 < i; ++k) {
      const double mag = 0.6 + 1.2 * uniform();
      const double sign = uniform() < 0.5 ? -1.0 : 1.0;
      v[k] = sign * mag * lambda;
    }
    const OracleResponse resp = oracle(v);
    bool escaped = false;
    for (int k : resp.support) {
      if (k >= i) report.support_always_within = false;
      if (k >= i - 1) escaped = true;
    }
    if (escaped) ++report.escapes;
  }
  report.escape_frequency = static_cast<double>(report.escapes) / trials;
  const double se = std::sqrt(cfg.p * (1.0 - cfg.p) / trials);
  report.frequency_bound = cfg.p + 3.0 * se;
  report.pass = report.support_always_within && report.escape_frequency <= report.frequency_bound;
  return report;
}

}  // namespace minimax_lb
