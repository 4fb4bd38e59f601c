#include <gtest/gtest.h>

#include <random>

#include "bellcert/core.hpp"
#include "bellcert/games.hpp"

using namespace bellcert;

namespace {

TrialRecord chsh_trial(std::uint64_t index, int x, int y, int a, int b) {
  return TrialRecord{index, 1, {x, y}, {a, b}};
}

GameSpec pm_one_game() {
  GameSpec g = games::chsh();
  for (double& s : g.scores[0]) s = 2.0 * s - 1.0;
  return validate_game(g);
}

}  // namespace

TEST(Dims, MixedRadixRoundTrip) {
  const Dims d{{2, 3, 2}, {3, 2, 2}};
  EXPECT_EQ(d.input_tuples(), 12u);
  EXPECT_EQ(d.output_tuples(), 12u);
  for (std::size_t i = 0; i < d.input_tuples(); ++i) EXPECT_EQ(d.encode_inputs(d.decode_inputs(i)), i);
  // Site 0 is the most significant digit.
  const std::vector<int> x{1, 0, 0};
  EXPECT_EQ(d.encode_inputs(x), 6u);
}

TEST(ValidateGame, ChshIsWinLose) { EXPECT_EQ(games::chsh().kind, GameKind::win_lose); }

TEST(ValidateGame, CglmpIsGeneral) { EXPECT_EQ(games::cglmp(3).kind, GameKind::general); }

TEST(ValidateGame, RejectsUnnormalizedDistribution) {
  GameSpec g = games::chsh();
  for (double& p : g.input_distribution) p *= 0.9;
  EXPECT_THROW(validate_game(g), InputError);
}

TEST(ValidateGame, RejectsMissingScores) {
  GameSpec g = games::chsh();
  g.scores[0].pop_back();
  EXPECT_THROW(validate_game(g), InputError);
}

TEST(ValidateGame, RejectsNonFiniteScore) {
  GameSpec g = games::chsh();
  g.scores[0][3] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(validate_game(g), InputError);
}

TEST(ValidateGame, RejectsNullTagTable) {
  GameSpec g = games::chsh();
  g.tags = {kNullTag};
  EXPECT_THROW(validate_game(g), InputError);
}

TEST(ValidateGame, RejectsArityMismatch) {
  GameSpec g = games::chsh();
  g.dims.outputs = {2, 2, 2};
  EXPECT_THROW(validate_game(g), InputError);
}

TEST(ValidateGame, Idempotent) {
  for (const GameSpec& g : {games::chsh(), games::mermin(), games::cglmp(3), games::chsh_two_state()}) {
    const GameSpec again = validate_game(g);
    EXPECT_EQ(again.tags, g.tags);
    EXPECT_EQ(again.scores, g.scores);
    EXPECT_EQ(again.input_distribution, g.input_distribution);
    EXPECT_EQ(again.kind, g.kind);
  }
}

TEST(ValidateGame, ThreeDistinctScoresMakeGeneral) {
  GameSpec g = games::chsh();
  g.scores[0][0] = 0.5;
  EXPECT_EQ(validate_game(g).kind, GameKind::general);
}

TEST(Bias, BoxMustStayInsideSimplex) {
  const GameSpec g = games::chsh();
  EXPECT_NO_THROW(check_bias(make_bias(0.2, 0.3), g));
  EXPECT_THROW(check_bias(make_bias(0.6, 0.0), g), InputError);
  EXPECT_THROW(make_bias(-0.1, 0.0), InputError);
}

TEST(Bias, ProductDetection) {
  GameSpec g = games::chsh();
  g.input_distribution = {0.4, 0.1, 0.1, 0.4};
  g = validate_game(g);
  EXPECT_FALSE(is_product_distribution(g));
  EXPECT_TRUE(is_product_distribution(games::chsh()));
  EXPECT_TRUE(is_product_distribution(games::cglmp(3)));
}

TEST(ValidateData, Rejections) {
  const GameSpec g = games::chsh();
  ExperimentData d;
  d.records = {chsh_trial(0, 0, 0, 0, 0), chsh_trial(0, 1, 1, 0, 1)};
  EXPECT_THROW(validate_data(g, d), InputError);  // index not increasing
  d.records = {chsh_trial(0, 2, 0, 0, 0)};
  EXPECT_THROW(validate_data(g, d), InputError);  // input out of range
  d.records = {TrialRecord{0, 7, {0, 0}, {0, 0}}};
  EXPECT_THROW(validate_data(g, d), InputError);  // unknown tag
  d.records = {TrialRecord{0, 1, {0, 0}, {}}};
  EXPECT_THROW(validate_data(g, d), InputError);  // non-null needs outputs
  d.records = {TrialRecord{0, kNullTag, {0, 0}, {}}};
  EXPECT_NO_THROW(validate_data(g, d));
}

TEST(ScoreExperiment, Examples) {
  const GameSpec g = games::chsh();
  ExperimentData d;
  d.records = {chsh_trial(0, 0, 0, 0, 0)};
  auto s = score_experiment(g, d);
  EXPECT_EQ(s.total, 1.0);
  EXPECT_EQ(*s.wins, 1u);

  s = score_experiment(g, ExperimentData{});
  EXPECT_EQ(s.total, 0.0);
  EXPECT_EQ(*s.wins, 0u);

  d.records = {chsh_trial(0, 0, 0, 0, 0), chsh_trial(1, 1, 1, 0, 0), chsh_trial(2, 1, 1, 0, 1)};
  s = score_experiment(g, d);
  EXPECT_EQ(s.total, 2.0);
  EXPECT_EQ(*s.wins, 2u);
  EXPECT_EQ(s.per_trial.size(), 3u);
}

TEST(ScoreExperiment, NullAttemptsAreSkipped) {
  const GameSpec g = games::chsh();
  ExperimentData d;
  d.records = {chsh_trial(0, 0, 0, 0, 0), TrialRecord{1, kNullTag, {1, 1}, {}}, chsh_trial(2, 0, 1, 1, 1)};
  const auto s = score_experiment(g, d);
  EXPECT_EQ(s.per_trial.size(), 2u);
  EXPECT_EQ(d.trials(), 2u);
}

TEST(ScoreExperiment, GeneralGameHasNoWinCount) {
  const GameSpec g = games::cglmp(3);
  ExperimentData d;
  d.records = {TrialRecord{0, 1, {0, 0}, {0, 0}}};
  EXPECT_FALSE(score_experiment(g, d).wins.has_value());
}

TEST(ScoreExperiment, AdditiveOverConcatenation) {
  const GameSpec g = games::cglmp(3);
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> in(0, 1), out(0, 2);
  for (int rep = 0; rep < 20; ++rep) {
    ExperimentData a, b, ab;
    std::uint64_t idx = 0;
    for (int i = 0; i < 30; ++i) {
      TrialRecord r{idx++, 1, {in(rng), in(rng)}, {out(rng), out(rng)}};
      (i < 13 ? a : b).records.push_back(r);
      ab.records.push_back(r);
    }
    const double sa = score_experiment(g, a).total;
    const double sb = score_experiment(g, b).total;
    EXPECT_NEAR(score_experiment(g, ab).total, sa + sb, 1e-12);
  }
}

TEST(Normalize, PlusMinusOneMapsToZeroOne) {
  const NormalizedGame n = normalize_game(pm_one_game());
  EXPECT_DOUBLE_EQ(n.affine.scale, 0.5);
  EXPECT_DOUBLE_EQ(n.affine.offset, 0.5);
  for (double s : n.spec.scores[0]) EXPECT_TRUE(s == 0.0 || s == 1.0);
}

TEST(Normalize, ZeroOneGameIsIdentity) {
  const NormalizedGame n = normalize_game(games::chsh());
  EXPECT_EQ(n.affine.scale, 1.0);
  EXPECT_EQ(n.affine.offset, 0.0);
}

TEST(Normalize, CglmpScale) {
  const GameSpec g = games::cglmp(3);
  EXPECT_EQ(g.max_score(), 4.0);
  EXPECT_EQ(g.min_score(), -4.0);
  const NormalizedGame n = normalize_game(g);
  EXPECT_DOUBLE_EQ(n.affine.scale, 1.0 / 8.0);
}

TEST(Normalize, ConstantGameRejected) {
  EXPECT_THROW(normalize_game(games::constant(Dims{{2, 2}, {2, 2}}, 0.3)), InputError);
}

TEST(Normalize, CommutesWithScoring) {
  const GameSpec g = games::cglmp(3);
  const NormalizedGame n = normalize_game(g);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> in(0, 1), out(0, 2);
  ExperimentData d;
  for (std::uint64_t i = 0; i < 200; ++i) d.records.push_back({i, 1, {in(rng), in(rng)}, {out(rng), out(rng)}});
  const double raw = score_experiment(g, d).total;
  const double norm = score_experiment(n.spec, d).total;
  const double mapped = n.affine.apply_total(raw, 200.0);
  EXPECT_NEAR(norm, mapped, 1e-12 * std::max(1.0, std::abs(mapped)));
}

TEST(ChshCorrelator, Examples) {
  EXPECT_DOUBLE_EQ(s_to_wins(8, 2.0), 6.0);
  EXPECT_DOUBLE_EQ(s_to_wins(245, 2.4), 196.0);
  EXPECT_DOUBLE_EQ(s_to_wins(4, 0.0), 2.0);
}

TEST(ChshCorrelator, RoundTripAtIntegers) {
  for (std::int64_t n : {1, 7, 245, 10195})
    for (std::int64_t c = 0; c <= n; c += std::max<std::int64_t>(1, n / 17)) {
      const double s = wins_to_s(n, c);
      EXPECT_NEAR(s_to_wins(n, s), static_cast<double>(c), 1e-12 * std::max<double>(1.0, c));
      EXPECT_NEAR(wins_to_s(n, static_cast<std::int64_t>(std::llround(s_to_wins(n, s)))), s, 1e-12);
    }
}

TEST(Strategy, ResponseTableMatchesOutputs) {
  const Dims d{{2, 3}, {2, 2}};
  const DeterministicStrategy s{{{1, 0}, {0, 1, 1}}};
  const auto resp = s.response_table(d);
  for (std::size_t i = 0; i < d.input_tuples(); ++i) {
    const auto x = d.decode_inputs(i);
    const std::vector<int> a{s.outputs[0][x[0]], s.outputs[1][x[1]]};
    EXPECT_EQ(resp[i], d.encode_outputs(a));
  }
}

TEST(Behavior, Validation) {
  Behavior b = games::uniform_behavior(Dims{{2, 2}, {2, 2}});
  EXPECT_NO_THROW(validate_behavior(b));
  b.table[0] += 0.1;
  EXPECT_THROW(validate_behavior(b), InputError);
  b.table[0] = -0.05;
  EXPECT_THROW(validate_behavior(b), InputError);
}
