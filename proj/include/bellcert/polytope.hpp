#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "bellcert/core.hpp"

namespace bellcert {

/// prod over sites of outputs^inputs, saturating at UINT64_MAX.
std::uint64_t strategy_count(const Dims& dims);

/// Throws CapExceededError when the strategy count exceeds `cap`.
void check_strategy_cap(const Dims& dims, std::uint64_t cap);

/// Visits every deterministic strategy in canonical order: an odometer over
/// (site, input) pairs with site 0, input 0 most significant. The callback
/// receives the canonical index, the strategy and its joint response table.
void for_each_strategy(const Dims& dims, std::uint64_t cap,
                       const std::function<void(std::uint64_t, const DeterministicStrategy&,
                                                std::span<const std::size_t>)>& visit);

std::vector<DeterministicStrategy> enumerate_strategies(const Dims& dims,
                                                        std::uint64_t cap = kDefaultStrategyCap);

/// sum_x p(x) s(tag, x, lambda(x)).
double strategy_value(const GameSpec& spec, std::size_t tag_index, std::span<const std::size_t> response);

struct ClassicalBound {
  double beta_max = 0.0;
  double beta_min = 0.0;
  DeterministicStrategy argmax;
  Tag argmax_tag = kNullTag;
  DeterministicStrategy argmin;
};

/// Exact extremes of the expected score over deterministic strategies and
/// tags. Ties resolve to the lowest canonical index.
ClassicalBound classical_bound(const GameSpec& spec, std::uint64_t cap = kDefaultStrategyCap);

/// sum s(a|x) p(a|x) <= bound, with coefficients in the Behavior table layout.
struct BellInequality {
  std::vector<double> coefficients;
  double bound = 0.0;
  double violation = 0.0;
};

/// sum over cells of coefficients * table.
double inequality_value(const BellInequality& ineq, const Behavior& behavior);

/// Largest value any deterministic strategy reaches on the inequality.
double inequality_classical_max(const BellInequality& ineq, const Dims& dims,
                                std::uint64_t cap = kDefaultStrategyCap);

struct LocalityResult {
  bool local = false;
  std::vector<double> weights;                // per strategy, canonical order, when local
  std::optional<BellInequality> certificate;  // violated inequality, when not local
};

LocalityResult is_local(const Behavior& behavior, std::uint64_t cap = kDefaultStrategyCap);

/// Maximizes sum s p - S over 0 <= s <= 1 with every strategy scoring <= S.
BellInequality select_inequality(const Behavior& behavior, std::uint64_t cap = kDefaultStrategyCap);

/// Same objective restricted to 0/1 coefficients, by exhaustive search.
/// Only tables with at most 20 cells are supported.
BellInequality select_winlose_inequality(const Behavior& behavior, std::uint64_t cap = kDefaultStrategyCap);

struct BoxOptimum {
  double value = 0.0;
  std::vector<double> point;
};

/// max w.q over {q : |q_i - p_i| <= tau, q >= 0, sum q = 1}.
BoxOptimum box_polytope_max(std::span<const double> w, double tau, std::span<const double> target);

/// Vertices of the same polytope (possibly with repeats).
std::vector<std::vector<double>> box_polytope_vertices(double tau, std::span<const double> target);

}  // namespace bellcert
