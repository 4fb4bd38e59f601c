#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "bellcert/core.hpp"
#include "bellcert/report.hpp"

namespace bellcert {

/// 3/4 + (tau_a + tau_b)/2 - tau_a tau_b; requires both taus below 1/2.
WinLoseBound chsh_beta_win(const BiasBound& bias);

/// Two sites, binary inputs and outputs, uniform inputs and every tag's
/// winning set of the form a xor b == x*y xor (affine function of x, y).
bool is_chsh_shape(const GameSpec& spec);

struct WinOptimum {
  WinLoseBound bound;
  DeterministicStrategy strategy;  // maximizer, lowest canonical index on ties
  Tag tag = kNullTag;              // tag whose game attains the maximum
  std::vector<std::vector<double>> marginals;  // worst-case input marginals per site
};

/// Exact maximum winning probability over deterministic strategies and over
/// product input distributions within the bias box. A win is a cell scoring
/// the game's maximum score.
WinOptimum beta_win_optimize(const GameSpec& spec, const BiasBound& bias,
                             std::uint64_t cap = kDefaultStrategyCap);

/// binom_tail(n, c, beta_win).
PValueReport winlose_pvalue(std::int64_t n, std::int64_t c, const WinLoseBound& bound);

/// Normal approximation Q((c - n beta) / sqrt(n beta (1 - beta))). Never
/// certifying; throws PreconditionError unless c > n beta.
PValueReport gaussian_approx_pvalue(std::int64_t n, std::int64_t c, const WinLoseBound& bound);

struct RelabeledExperiment {
  GameSpec spec;
  ExperimentData data;
};

/// Merges event-ready tags. `tag_map` sends each merged tag to the source
/// tags it absorbs; the smallest source tag's table becomes the merged table
/// and every other source is mapped onto it by per-site, per-input output
/// permutations applied to the data. Tags not named in the map are kept.
RelabeledExperiment relabel_event_ready(const GameSpec& spec, const ExperimentData& data, const BiasBound& bias,
                                        const std::map<Tag, std::vector<Tag>>& tag_map,
                                        std::uint64_t cap = kDefaultStrategyCap);

}  // namespace bellcert
