#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "minimax_lb/oracles.hpp"
#include "support.hpp"

using namespace minimax_lb;

namespace {

ScaledInstance desk_instance() {
  return build_scaled(spec_for_regime(InstanceVariant::Stochastic, 10, 4, 0.1, 1.0, 5000.0));
}

// A generic in-domain point with a solid activated prefix.
ChainPoint probe_point(const ScaledInstance& inst, int prefix, std::uint64_t seed) {
  ChainPoint v(inst.layout());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag(0.7, 1.5);
  for (int k = 0; k < prefix; ++k)
    v[k] = (k % 3 == 1 ? -1.0 : 1.0) * mag(rng) * inst.derived().lambda;
  return v;
}

}  // namespace

TEST_CASE("deterministic oracle is deterministic and support-exact", "[oracles]") {
  const ScaledInstance inst = desk_instance();
  const ChainPoint v = probe_point(inst, 9, 3);
  const OracleResponse a = deterministic_oracle(inst, v);
  const OracleResponse b = deterministic_oracle(inst, v);
  REQUIRE(a.value == b.value);
  REQUIRE(a.gradient == b.gradient);
  REQUIRE(a.support == b.support);
  CHECK_FALSE(a.revealed);
  for (int k : a.support) CHECK(a.gradient[k] != 0.0);
  std::size_t nonzero = 0;
  for (double g : a.gradient)
    if (g != 0.0) ++nonzero;
  CHECK(nonzero == a.support.size());

  // zero-chain start: at the origin only the head coordinate reacts
  const OracleResponse at_zero = deterministic_oracle(inst, ChainPoint(inst.layout()));
  REQUIRE(at_zero.support == std::vector<int>{inst.layout().x_index(1)});
}

TEST_CASE("oracle support obeys the chain prefix rule", "[oracles]") {
  const ScaledInstance inst = desk_instance();
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int prefix = static_cast<int>(rng() % inst.dim());
    const ChainPoint v = probe_point(inst, prefix, rng());
    const OracleResponse resp = deterministic_oracle(inst, v);
    for (int k : resp.support) REQUIRE(k <= prefix);
  }
}

TEST_CASE("next coordinate", "[oracles]") {
  const ScaledInstance inst = desk_instance();
  ChainPoint v(inst.layout());
  CHECK(next_coordinate(v) == 0);
  const ChainPoint five = probe_point(inst, 5, 11);
  CHECK(next_coordinate(five) == 5);
  ChainPoint holey = probe_point(inst, 9, 13);
  holey[3] = 0.0;  // interior zero wins over the frontier
  CHECK(next_coordinate(holey) == 3);
  ChainPoint full(inst.layout());
  for (int k = 0; k < inst.dim(); ++k) full[k] = 1e-3 * inst.derived().lambda;
  CHECK_FALSE(next_coordinate(full).has_value());
}

TEST_CASE("p = 1 reproduces the deterministic oracle bit for bit", "[oracles]") {
  const ScaledInstance inst = desk_instance();
  StochasticOracle oracle(inst, StochasticOracleConfig{1.0, 99, inst.derived().grad_inf_bound});
  for (int prefix : {0, 4, 17}) {
    const ChainPoint v = probe_point(inst, prefix, 101 + prefix);
    const OracleResponse truth = deterministic_oracle(inst, v);
    const OracleResponse got = oracle(v);
    REQUIRE(got.gradient == truth.gradient);
    REQUIRE(got.support == truth.support);
    CHECK(got.revealed);
  }
}

TEST_CASE("stochastic oracle is unbiased with bounded variance", "[oracles]") {
  const ScaledInstance inst = desk_instance();
  const ChainPoint v = probe_point(inst, 7, 17);
  const OracleResponse truth = deterministic_oracle(inst, v);
  const double Gb = inst.derived().grad_inf_bound;
  const int istar = *next_coordinate(v);

  for (double p : {0.2, 0.7}) {
    StochasticOracle oracle(inst, StochasticOracleConfig{p, 1234, Gb});
    const long draws = 20'000;
    std::vector<double> mean(truth.gradient.size(), 0.0);
    testsup::RunningStats dev;
    for (long s = 0; s < draws; ++s) {
      const OracleResponse r = oracle(v);
      double d2 = 0.0;
      for (std::size_t k = 0; k < mean.size(); ++k) {
        mean[k] += r.gradient[k] / draws;
        const double d = r.gradient[k] - truth.gradient[k];
        d2 += d * d;
      }
      dev.add(d2);
    }
    for (std::size_t k = 0; k < mean.size(); ++k) {
      const double se = (static_cast<int>(k) == istar)
                            ? std::abs(truth.gradient[k]) * std::sqrt((1.0 - p) / (p * draws))
                            : 0.0;
      // the 1e-9 term absorbs summation roundoff on the unperturbed entries
      REQUIRE(std::abs(mean[k] - truth.gradient[k]) <=
              5.0 * se + 1e-9 * (1.0 + std::abs(truth.gradient[k])));
    }
    REQUIRE(dev.mean <= Gb * Gb * (1.0 - p) / p);
  }
}

TEST_CASE("seeded streams are reproducible and distinct", "[oracles]") {
  const ScaledInstance inst = desk_instance();
  const ChainPoint v = probe_point(inst, 6, 23);
  const double Gb = inst.derived().grad_inf_bound;
  StochasticOracle a(inst, StochasticOracleConfig{0.3, 42, Gb});
  StochasticOracle b(inst, StochasticOracleConfig{0.3, 42, Gb});
  StochasticOracle c(inst, StochasticOracleConfig{0.3, 43, Gb});
  bool any_diff = false;
  for (int s = 0; s < 64; ++s) {
    const OracleResponse ra = a(v), rb = b(v), rc = c(v);
    REQUIRE(ra.gradient == rb.gradient);
    REQUIRE(ra.revealed == rb.revealed);
    any_diff = any_diff || (ra.revealed != rc.revealed);
  }
  CHECK(any_diff);
}

TEST_CASE("zero frontier gradient silences the perturbation", "[oracles]") {
  const ScaledInstance inst = desk_instance();
  const ChainLayout layout = inst.layout();
  const double lambda = inst.derived().lambda;
  // activate everything except the trailing x_T, and park z_T inside the
  // flat branch so the frontier gradient is exactly zero
  ChainPoint v(layout);
  for (int k = 0; k < layout.dim() - 1; ++k) v[k] = 1.2 * lambda;
  v.z(layout.T) = 0.3 * lambda;
  REQUIRE(next_coordinate(v) == layout.dim() - 1);
  const OracleResponse truth = deterministic_oracle(inst, v);
  REQUIRE(truth.gradient[layout.dim() - 1] == 0.0);
  StochasticOracle oracle(inst, StochasticOracleConfig{0.5, 7, inst.derived().grad_inf_bound});
  for (int s = 0; s < 32; ++s) {
    const OracleResponse r = oracle(v);
    CHECK_FALSE(r.revealed);
    CHECK(r.gradient == truth.gradient);
  }
}

TEST_CASE("probability-p support property", "[oracles]") {
  const ScaledInstance inst = desk_instance();
  const double Gb = inst.derived().grad_inf_bound;

  const ProbabilityPReport r1 = verify_probability_p(
      inst, StochasticOracleConfig{0.1, 909, Gb}, 10'000, 31);
  CHECK(r1.pass);
  CHECK(r1.support_always_within);
  CHECK(r1.escape_frequency >= 0.07);
  CHECK(r1.escape_frequency <= 0.13);

  // with p = 1 every trial with a live frontier escapes
  const ProbabilityPReport rfull = verify_probability_p(
      inst, StochasticOracleConfig{1.0, 909, Gb}, 2'000, 37);
  CHECK(rfull.support_always_within);
  CHECK_THAT(rfull.escape_frequency, Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("recipe oracle keeps the variance within sigma^2", "[oracles]") {
  const ScaledInstance inst = desk_instance();
  REQUIRE(inst.derived().p < 1.0);  // sigma chosen to make the gate active
  StochasticOracle oracle = make_recipe_oracle(inst, 5150);
  const double sigma2 = *inst.spec().sigma * *inst.spec().sigma;
  std::mt19937_64 rng(53);
  for (int point = 0; point < 5; ++point) {
    const ChainPoint v = probe_point(inst, static_cast<int>(rng() % inst.dim()), rng());
    const OracleResponse truth = deterministic_oracle(inst, v);
    testsup::RunningStats dev;
    for (int s = 0; s < 20'000; ++s) {
      const OracleResponse r = oracle(v);
      double d2 = 0.0;
      for (std::size_t k = 0; k < truth.gradient.size(); ++k) {
        const double d = r.gradient[k] - truth.gradient[k];
        d2 += d * d;
      }
      dev.add(d2);
    }
    REQUIRE(dev.mean <= sigma2);
  }
}
