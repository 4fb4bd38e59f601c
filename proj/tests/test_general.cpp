#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bellcert/games.hpp"
#include "bellcert/general.hpp"
#include "bellcert/polytope.hpp"
#include "bellcert/tails.hpp"
#include "bellcert/winlose.hpp"
#include "oracles.hpp"

using namespace bellcert;

namespace {

GeneralGameParams unit_params(double beta_max) {
  GeneralGameParams p;
  p.s_min = 0.0;
  p.s_max = 1.0;
  p.beta_max = beta_max;
  p.beta_min = 0.0;
  return p;
}

GeneralGameParams cglmp_params() { return game_params(games::cglmp(3), make_bias(0, 0), 2.0, -4.0); }

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

// McDiarmid's bound written straight from its definition.
double mcdiarmid_direct(const GeneralGameParams& p, double c, double n) {
  const double q = c / n;
  const double r = p.s_max - p.s_min;
  const double f1 = std::pow((p.s_max - p.beta_max) / (p.s_max - q), (p.s_max - q) / r);
  const double f2 = std::pow((p.beta_max - p.s_min) / (q - p.s_min), (q - p.s_min) / r);
  return std::pow(f1 * f2, n);
}

}  // namespace

TEST(GameParams, NormalizedChsh) {
  const GeneralGameParams p = game_params(games::chsh(), make_bias(0, 0), 0.75, 0.25);
  EXPECT_EQ(p.s_min, 0.0);
  EXPECT_EQ(p.s_max, 1.0);
  EXPECT_EQ(p.gamma_hat(), 0.75);
}

TEST(GameParams, Cglmp) {
  const GeneralGameParams p = cglmp_params();
  EXPECT_EQ(p.s_min, -4.0);
  EXPECT_EQ(p.s_max, 4.0);
  EXPECT_DOUBLE_EQ(p.gamma_hat(), 0.75);
  const ClassicalBound cb = classical_bound(games::cglmp(3));
  EXPECT_EQ(cb.beta_max, 2.0);
  EXPECT_EQ(cb.beta_min, -4.0);
}

TEST(GameParams, BiasWidensRangeAndRefusesZeroProbability) {
  const GameSpec g = games::cglmp(3);
  const GeneralGameParams p = game_params(g, make_bias(0.05, 0.05), 2.0, -4.0);
  EXPECT_GT(p.s_max, 4.0);
  EXPECT_LT(p.s_min, -4.0);
  EXPECT_THROW(game_params(g, make_bias(0.5, 0.5), 2.0, -4.0), PreconditionError);
}

TEST(GameParams, InvariantsChecked) {
  EXPECT_THROW(game_params(games::cglmp(3), make_bias(0, 0), 5.0, -4.0), InputError);
  EXPECT_THROW(game_params(games::cglmp(3), make_bias(0, 0), 1.0, 2.0), InputError);
  GeneralGameParams p = unit_params(0.5);
  p.s_max = 0.0;
  EXPECT_THROW(validate_params(p), InputError);
}

TEST(Bentkus, FactorEOverBinomial) {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 300; ++rep) {
    const std::int64_t n = std::uniform_int_distribution<std::int64_t>(1, 10000)(rng);
    const double beta = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
    const std::int64_t c = std::uniform_int_distribution<std::int64_t>(0, n)(rng);
    std::vector<double> scores(static_cast<std::size_t>(n), 0.0);
    std::fill(scores.begin(), scores.begin() + c, 1.0);
    const PValueReport b = bentkus_pvalue(unit_params(beta), scores);
    const double bin = binom_tail(n, c, beta).value;
    if (bin < 1e-300) continue;
    EXPECT_LE(rel_err(b.raw_p_value, std::exp(1.0) * bin), 1e-12) << n << ' ' << c << ' ' << beta;
    EXPECT_EQ(b.p_value, std::min(1.0, b.raw_p_value));
  }
}

TEST(Bentkus, Examples) {
  const GeneralGameParams p = unit_params(0.75);
  // All trials at s_max: e * gamma^n.
  const std::vector<double> top(7, 1.0);
  EXPECT_LE(rel_err(bentkus_pvalue(p, top).raw_p_value, std::exp(1.0) * std::pow(0.75, 7)), 1e-12);
  // Two fractional scores: e times the geometric interpolation.
  const std::vector<double> two{0.5, 0.75};
  const double lo = oracle::enumerated_tail(2, 1, 0.75);
  const double hi = oracle::enumerated_tail(2, 2, 0.75);
  const double want = std::exp(1.0) * std::pow(lo, 0.75) * std::pow(hi, 0.25);
  EXPECT_LE(rel_err(bentkus_pvalue(p, two).raw_p_value, want), 1e-12);
  // All trials at s_min: capped at 1.
  const std::vector<double> bottom(9, 0.0);
  EXPECT_EQ(bentkus_pvalue(p, bottom).p_value, 1.0);
}

TEST(Bentkus, RejectsOutOfRangeScores) {
  const std::vector<double> bad{0.2, 1.5};
  EXPECT_THROW(bentkus_pvalue(unit_params(0.75), bad), InputError);
}

TEST(Bentkus, PerTrialAndTotalAgree) {
  const GeneralGameParams p = cglmp_params();
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> pick(-4, 4);
  std::vector<double> scores;
  double total = 0.0;
  for (int i = 0; i < 500; ++i) {
    scores.push_back(pick(rng) * 0.5 + 2.0);
    scores.back() = std::clamp(scores.back(), -4.0, 4.0);
    total += scores.back();
  }
  EXPECT_LE(rel_err(bentkus_pvalue(p, scores).raw_p_value, bentkus_pvalue_total(p, 500, total).raw_p_value), 1e-10);
}

TEST(McDiarmid, Examples) {
  const GeneralGameParams p = unit_params(0.75);
  EXPECT_EQ(mcdiarmid_pvalue(p, 75.0, 100).p_value, 1.0);
  EXPECT_LE(rel_err(mcdiarmid_pvalue(p, 100.0, 100).raw_p_value, std::pow(0.75, 100)), 1e-12);
  const PValueReport below = mcdiarmid_pvalue(p, 70.0, 100);
  EXPECT_EQ(below.p_value, 1.0);
  EXPECT_TRUE(below.precondition_failed);
}

TEST(McDiarmid, BetweenBentkusAndAzumaAtDelft) {
  const GeneralGameParams p = unit_params(0.750011);
  const double mc = mcdiarmid_pvalue(p, 196.0, 245).p_value;
  const double az = azuma_pvalue(p, 196.0, 245).p_value;
  const double bin = binom_tail(245, 196, 0.750011).value;
  EXPECT_LT(bin, mc);
  EXPECT_LT(mc, az);
}

TEST(McDiarmid, MatchesDirectFormula) {
  const GeneralGameParams p = cglmp_params();
  for (double s = 2.05; s < 4.0; s += 0.1)
    EXPECT_LE(rel_err(mcdiarmid_pvalue(p, s * 50.0, 50).raw_p_value, mcdiarmid_direct(p, s * 50.0, 50.0)), 1e-11)
        << s;
}

TEST(Azuma, Examples) {
  const GeneralGameParams p = unit_params(0.75);
  EXPECT_EQ(azuma_pvalue(p, 75.0, 100).p_value, 1.0);
  EXPECT_DOUBLE_EQ(azuma_d(p, {}), 0.75);
  EXPECT_NEAR(azuma_pvalue(p, 196.0, 245).p_value, std::exp(-245 * 0.05 * 0.05 / (2 * 0.5625)), 1e-14);
  EXPECT_NEAR(azuma_pvalue(p, 196.0, 245).p_value, 0.580, 0.001);
  const double once = azuma_pvalue(p, 80.0, 100).p_value;
  EXPECT_NEAR(azuma_pvalue(p, 160.0, 200).p_value, once * once, 1e-15);
  EXPECT_TRUE(azuma_pvalue(p, 60.0, 100).precondition_failed);
}

TEST(Azuma, Modes) {
  GeneralGameParams p = cglmp_params();
  EXPECT_DOUBLE_EQ(azuma_d(p, {AzumaMode::symmetric, std::nullopt}), 6.0);
  // Printed form: max{beta_max - s_min, s_min - beta_min} = max{6, 0}.
  EXPECT_DOUBLE_EQ(azuma_d(p, {AzumaMode::printed, std::nullopt}), 6.0);
  p.beta_max = -3.0;
  EXPECT_DOUBLE_EQ(azuma_d(p, {AzumaMode::symmetric, std::nullopt}), 7.0);
  EXPECT_DOUBLE_EQ(azuma_d(p, {AzumaMode::printed, std::nullopt}), 1.0);
  EXPECT_DOUBLE_EQ(azuma_d(p, {AzumaMode::symmetric, 2.5}), 2.5);
}

TEST(Bounds, MonotoneInTotal) {
  const GeneralGameParams p = cglmp_params();
  double prev_b = 2.0, prev_m = 2.0, prev_a = 2.0;
  for (double s = -4.0; s <= 4.0; s += 0.05) {
    const double total = s * 300.0;
    const double b = bentkus_pvalue_total(p, 300, total).p_value;
    const double m = mcdiarmid_pvalue(p, total, 300).p_value;
    const double a = azuma_pvalue(p, total, 300).p_value;
    EXPECT_LE(b, prev_b * (1 + 1e-12));
    EXPECT_LE(m, prev_m * (1 + 1e-12));
    EXPECT_LE(a, prev_a * (1 + 1e-12));
    prev_b = b;
    prev_m = m;
    prev_a = a;
  }
}

TEST(Bounds, ChshOrdering) {
  const GeneralGameParams p = unit_params(0.750011);
  for (double s = 2.2; s <= 3.0 + 1e-12; s += 0.01) {
    const double c = s_to_wins(245, s);
    const double bin = interp_binom_tail(245, c, p.beta_max).value;
    const double mc = mcdiarmid_pvalue(p, c, 245).p_value;
    const double az = azuma_pvalue(p, c, 245).p_value;
    EXPECT_LE(bin, mc) << s;
    EXPECT_LE(mc, az) << s;
  }
}

TEST(Bounds, CglmpOrdering) {
  const GeneralGameParams p = cglmp_params();
  for (double s = 2.1; s <= 3.0 + 1e-12; s += 0.01) {
    const double total = s * 500.0;
    const double b = bentkus_pvalue_total(p, 500, total).p_value;
    const double m = mcdiarmid_pvalue(p, total, 500).p_value;
    const double a = azuma_pvalue(p, total, 500).p_value;
    EXPECT_LE(b, m) << s;
    EXPECT_LE(m, a) << s;
  }
}

TEST(Bounds, ReportsCarryParams) {
  const PValueReport r = mcdiarmid_pvalue(cglmp_params(), 1200.0, 500);
  ASSERT_TRUE(std::holds_alternative<GeneralGameParams>(r.params));
  EXPECT_EQ(std::get<GeneralGameParams>(r.params).beta_max, 2.0);
  EXPECT_TRUE(r.certifying);
  EXPECT_EQ(r.method, Method::mcdiarmid);
}
