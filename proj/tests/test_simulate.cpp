#include <gtest/gtest.h>

#include <sstream>

#include "bellcert/games.hpp"
#include "bellcert/io.hpp"
#include "bellcert/polytope.hpp"
#include "bellcert/simulate.hpp"
#include "bellcert/tails.hpp"
#include "bellcert/winlose.hpp"
#include "oracles.hpp"

using namespace bellcert;

namespace {

// Heralds success with a fixed probability and plays one fixed rule.
class FixedRateHerald : public LhvmStrategy {
 public:
  FixedRateHerald(const Dims& dims, DeterministicStrategy s, double rate) : rule_(dims, std::move(s)), rate_(rate) {}
  std::unique_ptr<LhvmStrategy> clone() const override { return std::make_unique<FixedRateHerald>(*this); }
  std::string name() const override { return "fixed-rate"; }
  bool has_memory() const override { return false; }
  Tag herald(Rng& rng) override { return uniform01(rng) < rate_ ? 1 : kNullTag; }
  const LocalRule& respond(Tag, Rng&) override { return rule_; }

 private:
  LocalRule rule_;
  double rate_;
};

SimConfig config(std::int64_t trials, std::uint64_t seed, std::int64_t replicas = 1) {
  SimConfig c;
  c.trials = trials;
  c.seed = seed;
  c.replicas = replicas;
  return c;
}

std::string csv(const GameSpec& g, const ExperimentData& d) {
  std::ostringstream out;
  write_trials(out, g, d);
  return out.str();
}

}  // namespace

TEST(RunLhvm, DeterministicForFixedSeed) {
  const GameSpec g = games::chsh();
  for (const auto& name : strategy_names()) {
    const auto s = make_strategy(name, g, make_bias(0, 0));
    const std::string a = csv(g, run_lhvm(*s, g, config(300, 99)));
    const std::string b = csv(g, run_lhvm(*s, g, config(300, 99)));
    EXPECT_EQ(a, b) << name;
    EXPECT_NE(a, csv(g, run_lhvm(*s, g, config(300, 100)))) << name;
  }
}

TEST(RunLhvm, AlwaysWinOnTrivialGame) {
  GameSpec g = games::chsh();
  for (double& v : g.scores[0]) v = 1.0;
  g.scores[0][3] = 0.0;  // input (0,0), output (1,1)
  g = validate_game(g);
  const auto s = optimal_memoryless_strategy(g, make_bias(0, 0));
  const ExperimentData d = run_lhvm(*s, g, config(500, 1));
  EXPECT_EQ(*score_experiment(g, d).wins, 500u);
}

TEST(RunLhvm, HeraldingStopsAtTargetTrials) {
  const GameSpec g = games::chsh();
  const FixedRateHerald s(g.dims, DeterministicStrategy{{{0, 0}, {0, 0}}}, 0.1);
  const ExperimentData d = run_lhvm(s, g, config(100, 3));
  EXPECT_EQ(d.trials(), 100u);
  EXPECT_EQ(d.records.back().tag, 1);
  // Attempts are 100 plus a negative binomial count of failures (mean 900).
  EXPECT_GT(d.attempts(), 600u);
  EXPECT_LT(d.attempts(), 1300u);
  for (const auto& r : d.records) EXPECT_TRUE(r.tag != kNullTag || r.outputs.empty());
}

TEST(RunLhvm, AttemptCapIsEnforced) {
  const GameSpec g = games::chsh();
  const FixedRateHerald s(g.dims, DeterministicStrategy{{{0, 0}, {0, 0}}}, 0.0);
  SimConfig c = config(10, 3);
  c.max_attempts = 500;
  EXPECT_THROW(run_lhvm(s, g, c), CapExceededError);
}

TEST(RunLhvm, RoundTripsThroughTrialFormat) {
  const GameSpec g = games::chsh_two_state();
  const auto s = make_strategy("herald", g, make_bias(0, 0));
  const ExperimentData d = run_lhvm(*s, g, config(200, 12));
  std::istringstream in(csv(g, d));
  const ExperimentData back = parse_trials(in, g);
  ASSERT_EQ(back.records.size(), d.records.size());
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    EXPECT_EQ(back.records[i].index, d.records[i].index);
    EXPECT_EQ(back.records[i].tag, d.records[i].tag);
    EXPECT_EQ(back.records[i].inputs, d.records[i].inputs);
    EXPECT_EQ(back.records[i].outputs, d.records[i].outputs);
  }
}

TEST(RunLhvm, InputsFollowTargetDistribution) {
  // With the target policy the harness draws uniform inputs for CHSH.
  const GameSpec g = games::chsh();
  const auto s = make_strategy("random", g, make_bias(0, 0));
  SimConfig c = config(40000, 5);
  c.policy = BiasPolicy::target;
  const ExperimentData d = run_lhvm(*s, g, c);
  std::vector<double> counts(4, 0.0);
  for (const auto& r : d.records) counts[g.dims.encode_inputs(r.inputs)] += 1.0;
  for (double k : counts) EXPECT_NEAR(k / 40000.0, 0.25, 4 * std::sqrt(0.25 * 0.75 / 40000.0));
}

TEST(RunLhvm, WorstCaseMarginalsSitAtBoxCorner) {
  const GameSpec g = games::chsh();
  const auto m = harness_marginals(g, make_bias(0.1, 0.05), BiasPolicy::worst_case);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_NEAR(std::abs(m[0][0] - 0.5), 0.1, 1e-12);
  EXPECT_NEAR(std::abs(m[1][0] - 0.5), 0.05, 1e-12);
  const auto t = harness_marginals(g, make_bias(0.1, 0.05), BiasPolicy::target);
  EXPECT_EQ(t[0][0], 0.5);
}

TEST(Strategies, NamesAndMemoryFlags) {
  const GameSpec g = games::chsh();
  const auto names = strategy_names();
  EXPECT_EQ(names.size(), 5u);
  for (const auto& n : names) EXPECT_EQ(make_strategy(n, g, make_bias(0, 0))->name(), n);
  EXPECT_TRUE(make_strategy("switcher", g, make_bias(0, 0))->has_memory());
  EXPECT_TRUE(make_strategy("herald", g, make_bias(0, 0))->has_memory());
  EXPECT_FALSE(make_strategy("optimal", g, make_bias(0, 0))->has_memory());
  EXPECT_THROW(make_strategy("psychic", g, make_bias(0, 0)), InputError);
}

TEST(Strategies, OptimalWinsThreeOfFourInputPairs) {
  const GameSpec g = games::chsh();
  const auto s = optimal_memoryless_strategy(g, make_bias(0, 0));
  Rng rng(1);
  const LocalRule& rule = s->respond(1, rng);
  int wins = 0;
  for (std::size_t i = 0; i < 4; ++i) wins += g.score(1, i, rule.output_index(i)) == 1.0;
  EXPECT_EQ(wins, 3);
}

TEST(Strategies, OptimalMerminWinsThreeQuarters) {
  const GameSpec g = games::mermin();
  const auto s = optimal_memoryless_strategy(g, make_bias(0, 0));
  Rng rng(1);
  const LocalRule& rule = s->respond(1, rng);
  double p = 0.0;
  for (std::size_t i = 0; i < g.dims.input_tuples(); ++i)
    p += g.input_distribution[i] * g.score(1, i, rule.output_index(i));
  EXPECT_EQ(p, 0.75);
}

TEST(Strategies, SingleStrategyGame) {
  GameSpec g;
  g.name = "one";
  g.dims = Dims{{1, 1}, {1, 2}};
  g.tags = {1};
  g.input_distribution = {1.0};
  g.scores = {{1.0, 0.0}};
  g = validate_game(g);
  const auto s = optimal_memoryless_strategy(g, make_bias(0, 0));
  Rng rng(1);
  EXPECT_EQ(s->respond(1, rng).strategy().outputs, (std::vector<std::vector<int>>{{0}, {0}}));
}

TEST(McTail, Examples) {
  const GameSpec g = games::chsh();
  const auto s = optimal_memoryless_strategy(g, make_bias(0, 0));
  TailEstimate t = mc_tail_estimate(*s, g, make_bias(0, 0), 20, 0, 1000, 1);
  EXPECT_EQ(t.estimate, 1.0);
  EXPECT_EQ(t.standard_error, 0.0);
  t = mc_tail_estimate(*s, g, make_bias(0, 0), 20, 21, 1000, 1);
  EXPECT_EQ(t.estimate, 0.0);
  EXPECT_THROW(mc_tail_estimate(*s, g, make_bias(0, 0), 20, 5, 999, 1), InputError);
}

TEST(McTail, HistogramIndependentOfThreads) {
  const GameSpec g = games::chsh();
  const auto s = make_strategy("switcher", g, make_bias(0, 0));
  SimConfig c = config(40, 77, 3000);
  c.threads = 1;
  const auto one = mc_win_histogram(*s, g, c);
  c.threads = 4;
  EXPECT_EQ(mc_win_histogram(*s, g, c), one);
}

TEST(McTail, NoStrategyBeatsTheBound) {
  const GameSpec g = games::chsh();
  const std::int64_t n = 60;
  for (const auto& name : strategy_names()) {
    const auto s = make_strategy(name, g, make_bias(0, 0));
    const auto hist = mc_win_histogram(*s, g, config(n, 2024, 20000));
    for (std::int64_t c : {45, 48, 52}) {
      const TailEstimate est = tail_from_histogram(hist, c);
      const double bound = binom_tail(n, c, 0.75).value;
      EXPECT_LE(est.estimate, bound + 4 * std::max(est.standard_error, std::sqrt(bound * (1 - bound) / 20000)))
          << name << ' ' << c;
    }
  }
}

TEST(McTail, NullAttemptsDoNotChangeWinLaw) {
  // Same fixed rule, with and without heralding: the win fraction over the
  // non-null trials has the same mean.
  const GameSpec g = games::chsh();
  const DeterministicStrategy rule{{{0, 0}, {0, 0}}};
  const FixedRateHerald always(g.dims, rule, 1.0);
  const FixedRateHerald sparse(g.dims, rule, 0.2);
  const auto h1 = mc_win_histogram(always, g, config(50, 8, 4000));
  const auto h2 = mc_win_histogram(sparse, g, config(50, 9, 4000));
  auto mean = [](const std::vector<std::uint64_t>& h) {
    double m = 0.0, tot = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
      m += static_cast<double>(k * h[k]);
      tot += static_cast<double>(h[k]);
    }
    return m / tot;
  };
  const double se = std::sqrt(50 * 0.75 * 0.25 / 4000.0) * std::sqrt(2.0);
  EXPECT_NEAR(mean(h1), 37.5, 4 * se / std::sqrt(2.0));
  EXPECT_NEAR(mean(h1), mean(h2), 4 * se);
}

TEST(ExactTail, ExamplesAndOracle) {
  EXPECT_DOUBLE_EQ(exact_tail_iid(0.5, 2, 1), 0.75);
  EXPECT_EQ(exact_tail_iid(0.3, 9, 0), 1.0);
  for (int n = 0; n <= 25; ++n)
    for (double b : {0.25, 0.5, 0.75, 0.7500108})
      for (int c = 0; c <= n; ++c) {
        const double want = oracle::dp_tail(n, c, b);
        EXPECT_NEAR(exact_tail_iid(b, n, c), want, 1e-12 * want);
        EXPECT_NEAR(binom_tail(n, c, b).value, exact_tail_iid(b, n, c), 1e-12 * want);
      }
  EXPECT_THROW(exact_tail_iid(0.5, 26, 3), CapExceededError);
}

TEST(MemorySearch, Examples) {
  const GameSpec g = games::chsh();
  EXPECT_NEAR(adversarial_memory_search(g, 2, 2), 0.5625, 1e-15);
  EXPECT_NEAR(adversarial_memory_search(g, 1, 1), 0.75, 1e-15);
  EXPECT_EQ(adversarial_memory_search(g, 3, 0), 1.0);
}

TEST(MemorySearch, MemoryDoesNotHelpSmallN) {
  const GameSpec g = games::chsh();
  for (int n = 1; n <= 3; ++n)
    for (int c = 0; c <= n; ++c)
      EXPECT_NEAR(adversarial_memory_search(g, n, c), binom_tail(n, c, 0.75).value, 1e-12) << n << ' ' << c;
}

TEST(MemorySearch, CapAndGameChecks) {
  EXPECT_THROW(adversarial_memory_search(games::chsh(), 4, 2, 1000), CapExceededError);
  EXPECT_THROW(adversarial_memory_search(games::cglmp(3), 2, 1), InputError);
}
