#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "minimax_lb/chain.hpp"
#include "minimax_lb/instances.hpp"
#include "minimax_lb/oracles.hpp"
#include "minimax_lb/rng.hpp"

namespace minimax_lb {

// Hypercube domain with one radius per chain coordinate (+inf = free).
// Coordinatewise clamping never zeroes a nonzero entry and never unzeroes a
// zero one, so projection preserves supports.
struct BoxDomain {
  std::vector<double> radius;

  static BoxDomain unbounded(int dim) { return BoxDomain{std::vector<double>(dim, kInf)}; }

  int dim() const { return static_cast<int>(radius.size()); }

  void project_in_place(std::span<double> v) const {
    if (v.size() != radius.size())
      throw std::invalid_argument("BoxDomain::project: dimension mismatch");
    for (std::size_t k = 0; k < v.size(); ++k) {
      const double r = radius[k];
      if (v[k] > r) v[k] = r;
      else if (v[k] < -r) v[k] = -r;
    }
  }

  std::vector<double> project(std::span<const double> v) const {
    std::vector<double> out(v.begin(), v.end());
    project_in_place(out);
    return out;
  }

  bool contains(std::span<const double> v, double slack = 1.0 + 1e-9) const {
    for (std::size_t k = 0; k < v.size(); ++k)
      if (std::abs(v[k]) > radius[k] * slack) return false;
    return true;
  }
};

// Projected-gradient stationarity: scale_L * || P(point - grad/scale_L) - point ||_2.
// Over an unbounded domain this is exactly ||grad||_2.
inline double stationarity(const BoxDomain& domain, std::span<const double> grad,
                           std::span<const double> point, double scale_L) {
  if (!(scale_L > 0.0)) throw std::invalid_argument("stationarity: scale_L must be > 0");
  if (grad.size() != point.size() || domain.radius.size() != point.size())
    throw std::invalid_argument("stationarity: dimension mismatch");
  double ss = 0.0;
  for (std::size_t k = 0; k < point.size(); ++k) {
    double moved = point[k] - grad[k] / scale_L;
    const double r = domain.radius[k];
    if (moved > r) moved = r;
    else if (moved < -r) moved = -r;
    const double step = scale_L * (moved - point[k]);
    ss += step * step;
  }
  return std::sqrt(ss);
}

// Stationarity of the envelope f_m at the minimization block (x, z): the
// gradient norm for the unconstrained flavour, the projected measure at the
// certified envelope smoothness L_m for the boxed flavour.
inline double measure_fm_stationarity(const ScaledInstance& inst, std::span<const double> x,
                                      std::span<const double> z) {
  std::vector<double> gx, gz;
  inst.fm_value_grad(x, z, &gx, &gz);
  if (!inst.boxed()) {
    double ss = 0.0;
    for (double g : gx) ss += g * g;
    for (double g : gz) ss += g * g;
    return std::sqrt(ss);
  }
  const double r = inst.domain_radius_xz();
  const double lm = inst.derived().Lm;
  std::vector<double> point(x.begin(), x.end());
  point.insert(point.end(), z.begin(), z.end());
  std::vector<double> grad(std::move(gx));
  grad.insert(grad.end(), gz.begin(), gz.end());
  const BoxDomain box{std::vector<double>(point.size(), r)};
  return stationarity(box, grad, point, lm);
}

inline double measure_fm_stationarity(const ScaledInstance& inst, const ChainPoint& v) {
  return measure_fm_stationarity(inst, v.x_block(), v.z_block());
}

// ---------------------------------------------------------------------------
// Zero-respecting run harness.
// ---------------------------------------------------------------------------

struct ZeroRespectingViolation : std::runtime_error {
  ZeroRespectingViolation(int coordinate, long iteration)
      : std::runtime_error("zero-respecting violation: coordinate " + std::to_string(coordinate) +
                           " proposed at iteration " + std::to_string(iteration) +
                           " lies outside the discovered support"),
        coordinate(coordinate),
        iteration(iteration) {}
  int coordinate;
  long iteration;
};

struct RunContext {
  const ScaledInstance& instance;
  const BoxDomain& domain;
  const std::vector<char>& discovered;  // mask over chain indices, updated per call
  std::uint64_t seed = 0;               // algorithm-private stream
  long iteration = 0;                   // oracle calls made so far (includes current)
};

// An algorithm proposes the next iterate from the current one and the latest
// oracle response.  The harness checks the proposal's support against the
// discovered set and projects it onto the domain; algorithms may rely on
// `ctx.discovered` but must not write outside it.
class Algorithm {
 public:
  virtual ~Algorithm() = default;
  virtual std::string name() const = 0;
  virtual std::vector<double> propose(const RunContext& ctx, const std::vector<double>& iterate,
                                      const OracleResponse& resp) = 0;
};

// Simultaneous projected gradient descent-ascent: descend the minimization
// block (x, z), ascend the maximization block y.
class GdaAlgorithm : public Algorithm {
 public:
  GdaAlgorithm(double eta_x, double eta_y, std::string name = "gda")
      : eta_x_(eta_x), eta_y_(eta_y), name_(std::move(name)) {
    if (!(eta_x > 0.0) || !(eta_y > 0.0))
      throw std::invalid_argument("GdaAlgorithm: step sizes must be positive");
  }

  std::string name() const override { return name_; }

  std::vector<double> propose(const RunContext& ctx, const std::vector<double>& iterate,
                              const OracleResponse& resp) override {
    const ChainLayout layout = ctx.instance.layout();
    std::vector<double> next(iterate);
    for (int k = 0; k < static_cast<int>(next.size()); ++k) {
      const bool ascend = layout.coord(k).kind == ChainLayout::Kind::Y;
      next[k] += (ascend ? eta_y_ : -eta_x_) * resp.gradient[k];
    }
    return next;
  }

 private:
  double eta_x_;
  double eta_y_;
  std::string name_;
};

inline std::unique_ptr<Algorithm> make_gda(const ScaledInstance& inst) {
  const double eta = 1.0 / (2.0 * inst.spec().L);
  return std::make_unique<GdaAlgorithm>(eta, eta, "gda");
}

// Two-timescale variant: the descent step trails the ascent step by 1/(16 kappa^2).
inline std::unique_ptr<Algorithm> make_two_timescale_sgda(const ScaledInstance& inst) {
  const double eta_y = 1.0 / (2.0 * inst.spec().L);
  const double kappa = inst.derived().kappa;
  return std::make_unique<GdaAlgorithm>(eta_y / (16.0 * kappa * kappa), eta_y, "sgda");
}

// Adversarial baseline: races down the chain by pinning every discovered
// coordinate at magnitude lambda (the component branches are active there),
// clipped into the box.
class GreedyFillAlgorithm : public Algorithm {
 public:
  std::string name() const override { return "greedy-fill"; }

  std::vector<double> propose(const RunContext& ctx, const std::vector<double>& iterate,
                              const OracleResponse&) override {
    const double lambda = ctx.instance.derived().lambda;
    std::vector<double> next(iterate.size(), 0.0);
    for (int k = 0; k < static_cast<int>(next.size()); ++k) {
      if (!ctx.discovered[k]) continue;
      const double r = ctx.domain.radius[k];
      next[k] = std::min(lambda, r);
    }
    return next;
  }
};

// Adversarial baseline: re-randomizes every discovered coordinate each step,
// with magnitudes in lambda*[0.6, 1.8] and random signs.
class GreedyRandomAlgorithm : public Algorithm {
 public:
  std::string name() const override { return "greedy-random"; }

  std::vector<double> propose(const RunContext& ctx, const std::vector<double>&,
                              const OracleResponse&) override {
    const double lambda = ctx.instance.derived().lambda;
    std::vector<double> next(ctx.domain.dim(), 0.0);
    for (int k = 0; k < static_cast<int>(next.size()); ++k) {
      if (!ctx.discovered[k]) continue;
      const double u = counter_uniform(ctx.seed, counter_++);
      const double s = counter_uniform(ctx.seed, counter_++) < 0.5 ? -1.0 : 1.0;
      next[k] = s * std::min(lambda * (0.6 + 1.2 * u), ctx.domain.radius[k]);
    }
    return next;
  }

 private:
  std::uint64_t counter_ = 0;
};

inline std::unique_ptr<Algorithm> make_algorithm(const std::string& name,
                                                 const ScaledInstance& inst,
                                                 double eta_x = 0.0, double eta_y = 0.0) {
  if (name == "gda") {
    if (eta_x > 0.0 || eta_y > 0.0) {
      const double def = 1.0 / (2.0 * inst.spec().L);
      return std::make_unique<GdaAlgorithm>(eta_x > 0 ? eta_x : def, eta_y > 0 ? eta_y : def,
                                            "gda");
    }
    return make_gda(inst);
  }
  if (name == "sgda") {
    if (eta_x > 0.0 || eta_y > 0.0) {
      const double def_y = eta_y > 0 ? eta_y : 1.0 / (2.0 * inst.spec().L);
      const double kappa = inst.derived().kappa;
      const double def_x = eta_x > 0 ? eta_x : def_y / (16.0 * kappa * kappa);
      return std::make_unique<GdaAlgorithm>(def_x, def_y, "sgda");
    }
    return make_two_timescale_sgda(inst);
  }
  if (name == "greedy-fill") return std::make_unique<GreedyFillAlgorithm>();
  if (name == "greedy-random") return std::make_unique<GreedyRandomAlgorithm>();
  throw std::invalid_argument("unknown algorithm: " + name);
}

// ---------------------------------------------------------------------------
// Trajectory bookkeeping.
// ---------------------------------------------------------------------------

struct IterationLog {
  long t = 0;  // oracle call index, 1-based
  double fm_stationarity = 0.0;
  double fm_value = 0.0;
  std::vector<int> discovered;  // chain indices newly discovered at this call
};

struct TrajectoryRecord {
  long oracle_calls = 0;
  long first_chain_complete = -1;   // first call whose iterate had the last chain coordinate nonzero
  long first_eps_stationary = -1;   // first call whose iterate was eps-stationary for f_m
  double min_fm_stationarity = kInf;
  std::vector<long> discovery_times;  // call index at which each chain index entered the discovered set
  std::vector<IterationLog> iterations;  // populated when record_iterations is set

  long discovered_count() const { return static_cast<long>(discovery_times.size()); }
};

struct RunOptions {
  long budget = 1;
  std::uint64_t seed = 0;
  bool record_iterations = false;
};

// Runs an algorithm against an oracle for a fixed budget of calls, enforcing
// the zero-respecting constraint on every proposal (a violating proposal
// aborts the run with the offending coordinate and iteration).  Oracle call t
// queries iterate v^{t-1}; v^0 = 0.
template <class Oracle>
TrajectoryRecord run_zero_respecting(Algorithm& alg, const ScaledInstance& inst, Oracle&& oracle,
                                     const RunOptions& opt) {
  if (opt.budget < 1) throw std::invalid_argument("run_zero_respecting: budget must be >= 1");
  const ChainLayout layout = inst.layout();
  const int dim = layout.dim();
  const BoxDomain domain{inst.domain_radii()};
  ChainPoint v(layout);
  std::vector<char> discovered(dim, 0);
  TrajectoryRecord rec;

  for (long t = 1; t <= opt.budget; ++t) {
    const OracleResponse resp = oracle(v);
    rec.oracle_calls = t;

    std::vector<int> newly;
    for (int k : ChainPoint::support_of(v.flat()))
      if (!discovered[k]) {
        discovered[k] = 1;
        newly.push_back(k);
      }
    for (int k : resp.support)
      if (!discovered[k]) {
        discovered[k] = 1;
        newly.push_back(k);
      }
    for (std::size_t j = 0; j < newly.size(); ++j) rec.discovery_times.push_back(t);

    const double stat = measure_fm_stationarity(inst, v);
    rec.min_fm_stationarity = std::min(rec.min_fm_stationarity, stat);
    if (stat <= inst.spec().eps && rec.first_eps_stationary < 0) rec.first_eps_stationary = t;
    if (v[dim - 1] != 0.0 && rec.first_chain_complete < 0) rec.first_chain_complete = t;

    if (opt.record_iterations) {
      const double fmv = inst.fm_value_grad(v.x_block(), v.z_block());
      rec.iterations.push_back(IterationLog{t, stat, fmv, newly});
    }

    if (t == opt.budget) break;
    const RunContext ctx{inst, domain, discovered, opt.seed, t};
    std::vector<double> proposal = alg.propose(ctx, v.flat(), resp);
    if (static_cast<int>(proposal.size()) != dim)
      throw std::invalid_argument("algorithm proposal has wrong dimension");
    for (int k = 0; k < dim; ++k)
      if (proposal[k] != 0.0 && !discovered[k]) throw ZeroRespectingViolation(k, t);
    domain.project_in_place(proposal);
    v = ChainPoint(layout, std::move(proposal));
  }
  return rec;
}

}  // namespace minimax_lb
