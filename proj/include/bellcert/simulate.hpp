#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "bellcert/core.hpp"

namespace bellcert {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::uint64_t splitmix64(std::uint64_t x);

/// A local response: each site's output is a function of its own input only.
/// The only way to build one is from a DeterministicStrategy.
class LocalRule {
 public:
  LocalRule(const Dims& dims, DeterministicStrategy strategy);

  const DeterministicStrategy& strategy() const { return strategy_; }
  std::size_t output_index(std::size_t input_index) const { return joint_[input_index]; }

 private:
  DeterministicStrategy strategy_;
  std::vector<std::size_t> joint_;
};

struct AttemptOutcome {
  Tag tag = kNullTag;
  bool won = false;
  double score = 0.0;
};

/// An LHVM adversary. The harness draws inputs; the strategy only chooses a
/// tag before the inputs exist and a local rule for the trial.
class LhvmStrategy {
 public:
  virtual ~LhvmStrategy() = default;

  virtual std::unique_ptr<LhvmStrategy> clone() const = 0;
  virtual std::string name() const = 0;
  virtual bool has_memory() const = 0;
  /// Restores the state before the first attempt.
  virtual void reset() {}
  virtual Tag herald(Rng& rng) = 0;
  virtual const LocalRule& respond(Tag tag, Rng& rng) = 0;
  virtual void observe(const AttemptOutcome& outcome) { (void)outcome; }
};

enum class BiasPolicy {
  worst_case,  // marginals at the maximizing corner of the bias box
  target,      // the game's own input distribution
};

struct SimConfig {
  std::uint64_t seed = 0;
  std::int64_t replicas = 1;
  std::int64_t trials = 0;        // target number of non-null trials
  std::int64_t max_attempts = 0;  // 0 means 1000 * trials + 1000
  BiasBound bias;
  BiasPolicy policy = BiasPolicy::worst_case;
  unsigned threads = 0;  // 0 means hardware concurrency
};

/// Names accepted by make_strategy.
std::vector<std::string> strategy_names();

/// "optimal", "random", "switcher", "herald" or "hedged". All but "random"
/// play maximizers of the single-trial winning probability at least part of
/// the time. Throws InputError for unknown names.
std::unique_ptr<LhvmStrategy> make_strategy(const std::string& name, const GameSpec& spec, const BiasBound& bias,
                                            std::uint64_t cap = kDefaultStrategyCap);

/// The fixed maximizer of the single-trial winning probability.
std::unique_ptr<LhvmStrategy> optimal_memoryless_strategy(const GameSpec& spec, const BiasBound& bias,
                                                          std::uint64_t cap = kDefaultStrategyCap);

/// Per-site input marginals used by the harness, or empty when inputs are
/// drawn from the joint distribution (non-product games at zero bias).
std::vector<std::vector<double>> harness_marginals(const GameSpec& spec, const BiasBound& bias, BiasPolicy policy,
                                                   std::uint64_t cap = kDefaultStrategyCap);

/// One experiment, stopping once `config.trials` non-null trials are recorded.
ExperimentData run_lhvm(const LhvmStrategy& strategy, const GameSpec& spec, const SimConfig& config);

/// Histogram of win counts over `config.replicas` experiments (size trials+1).
/// The result depends only on the config and strategy, not on scheduling.
std::vector<std::uint64_t> mc_win_histogram(const LhvmStrategy& strategy, const GameSpec& spec,
                                            const SimConfig& config);

struct TailEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

TailEstimate tail_from_histogram(const std::vector<std::uint64_t>& histogram, std::int64_t c);

/// Fraction of replicas with at least c wins; needs replicas >= 1000.
TailEstimate mc_tail_estimate(const LhvmStrategy& strategy, const GameSpec& spec, const BiasBound& bias,
                              std::int64_t n, std::int64_t c, std::int64_t replicas, std::uint64_t seed);

/// Pr[Binomial(n, beta) >= c] by dynamic programming; n <= 25.
double exact_tail_iid(double beta, std::int64_t n, std::int64_t c);

/// Exact maximum of Pr[wins >= c] over all history-dependent deterministic
/// strategies, by backward induction over the full history tree.
double adversarial_memory_search(const GameSpec& spec, std::int64_t n, std::int64_t c,
                                 std::uint64_t cap = kDefaultStrategyCap);

}  // namespace bellcert
