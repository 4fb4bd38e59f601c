#include "bellcert/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bellcert/lp.hpp"
#include "numeric.hpp"

namespace bellcert {

namespace {

constexpr double kCertTol = 1e-9;

// (site, input) slots in odometer order and the joint-output weight of each site.
struct StrategyLayout {
  std::vector<std::size_t> slot_site;
  std::vector<int> slot_radix;
  std::vector<std::size_t> site_weight;
  std::vector<std::vector<int>> decoded_inputs;
};

StrategyLayout make_layout(const Dims& dims) {
  StrategyLayout l;
  for (std::size_t k = 0; k < dims.sites(); ++k)
    for (int x = 0; x < dims.inputs[k]; ++x) {
      l.slot_site.push_back(k);
      l.slot_radix.push_back(dims.outputs[k]);
    }
  l.site_weight.assign(dims.sites(), 1);
  for (std::size_t k = dims.sites(); k-- > 1;)
    l.site_weight[k - 1] = l.site_weight[k] * static_cast<std::size_t>(dims.outputs[k]);
  for (std::size_t i = 0; i < dims.input_tuples(); ++i) l.decoded_inputs.push_back(dims.decode_inputs(i));
  return l;
}

void fill_response(const StrategyLayout& l, const DeterministicStrategy& s, std::vector<std::size_t>& resp) {
  for (std::size_t i = 0; i < l.decoded_inputs.size(); ++i) {
    std::size_t idx = 0;
    for (std::size_t k = 0; k < l.site_weight.size(); ++k)
      idx += l.site_weight[k] * static_cast<std::size_t>(s.outputs[k][static_cast<std::size_t>(l.decoded_inputs[i][k])]);
    resp[i] = idx;
  }
}

double ineq_on_response(const BellInequality& ineq, std::size_t nout, std::span<const std::size_t> resp) {
  detail::CompensatedSum acc;
  for (std::size_t i = 0; i < resp.size(); ++i) acc.add(ineq.coefficients[i * nout + resp[i]]);
  return acc.value();
}

void check_behavior_cells(const BellInequality& ineq, const Behavior& behavior) {
  if (ineq.coefficients.size() != behavior.dims.cells())
    throw InputError("inequality and behavior have different table sizes");
}

// Shift each input block to minimum 0 and scale the largest coefficient to 1.
// Shifting input block x by k changes every strategy value and the behavior
// value by the same k, so the violation only rescales.
BellInequality normalize_inequality(BellInequality ineq, const Behavior& behavior) {
  const std::size_t nin = behavior.dims.input_tuples();
  const std::size_t nout = behavior.dims.output_tuples();
  for (std::size_t i = 0; i < nin; ++i) {
    const auto first = ineq.coefficients.begin() + static_cast<std::ptrdiff_t>(i * nout);
    const double lo = *std::min_element(first, first + static_cast<std::ptrdiff_t>(nout));
    for (auto it = first; it != first + static_cast<std::ptrdiff_t>(nout); ++it) *it -= lo;
    ineq.bound -= lo;
  }
  const double hi = *std::max_element(ineq.coefficients.begin(), ineq.coefficients.end());
  if (hi > 0.0) {
    for (double& c : ineq.coefficients) c /= hi;
    ineq.bound /= hi;
  }
  return ineq;
}

bool certifies(const BellInequality& ineq, const Behavior& behavior, std::uint64_t cap) {
  const double smax = inequality_classical_max(ineq, behavior.dims, cap);
  return smax <= ineq.bound + kCertTol && inequality_value(ineq, behavior) > ineq.bound + kCertTol;
}

}  // namespace

std::uint64_t strategy_count(const Dims& dims) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t count = 1;
  for (std::size_t k = 0; k < dims.sites(); ++k)
    for (int x = 0; x < dims.inputs[k]; ++x) {
      const auto o = static_cast<std::uint64_t>(dims.outputs[k]);
      if (count > kMax / o) return kMax;
      count *= o;
    }
  return count;
}

void check_strategy_cap(const Dims& dims, std::uint64_t cap) {
  const std::uint64_t count = strategy_count(dims);
  if (count > cap)
    throw CapExceededError("deterministic strategy count " + std::to_string(count) + " exceeds the cap of " +
                           std::to_string(cap) + "; raise BELLCERT_CAP or shrink the game");
}

void for_each_strategy(const Dims& dims, std::uint64_t cap,
                       const std::function<void(std::uint64_t, const DeterministicStrategy&,
                                                std::span<const std::size_t>)>& visit) {
  validate_dims(dims);
  check_strategy_cap(dims, cap);
  const StrategyLayout layout = make_layout(dims);
  DeterministicStrategy s;
  s.outputs.resize(dims.sites());
  for (std::size_t k = 0; k < dims.sites(); ++k) s.outputs[k].assign(static_cast<std::size_t>(dims.inputs[k]), 0);
  // Flat view of the odometer digits in slot order.
  std::vector<int*> digits;
  for (std::size_t k = 0; k < dims.sites(); ++k)
    for (auto& v : s.outputs[k]) digits.push_back(&v);

  std::vector<std::size_t> resp(dims.input_tuples());
  const std::uint64_t total = strategy_count(dims);
  for (std::uint64_t index = 0; index < total; ++index) {
    fill_response(layout, s, resp);
    visit(index, s, resp);
    for (std::size_t d = digits.size(); d-- > 0;) {
      if (++*digits[d] < layout.slot_radix[d]) break;
      *digits[d] = 0;
    }
  }
}

std::vector<DeterministicStrategy> enumerate_strategies(const Dims& dims, std::uint64_t cap) {
  std::vector<DeterministicStrategy> out;
  for_each_strategy(dims, cap, [&](std::uint64_t, const DeterministicStrategy& s, std::span<const std::size_t>) {
    out.push_back(s);
  });
  return out;
}

double strategy_value(const GameSpec& spec, std::size_t tag_index, std::span<const std::size_t> response) {
  const std::size_t nout = spec.dims.output_tuples();
  const auto& table = spec.scores[tag_index];
  detail::CompensatedSum acc;
  for (std::size_t i = 0; i < response.size(); ++i) {
    const double p = spec.input_distribution[i];
    if (p != 0.0) acc.add(p * table[i * nout + response[i]]);
  }
  return acc.value();
}

ClassicalBound classical_bound(const GameSpec& spec, std::uint64_t cap) {
  ClassicalBound out;
  bool first = true;
  for_each_strategy(spec.dims, cap,
                    [&](std::uint64_t, const DeterministicStrategy& s, std::span<const std::size_t> resp) {
                      for (std::size_t t = 0; t < spec.tags.size(); ++t) {
                        const double v = strategy_value(spec, t, resp);
                        if (first || v > out.beta_max) {
                          out.beta_max = v;
                          out.argmax = s;
                          out.argmax_tag = spec.tags[t];
                        }
                        if (first || v < out.beta_min) {
                          out.beta_min = v;
                          out.argmin = s;
                        }
                        first = false;
                      }
                    });
  return out;
}

double inequality_value(const BellInequality& ineq, const Behavior& behavior) {
  check_behavior_cells(ineq, behavior);
  detail::CompensatedSum acc;
  for (std::size_t c = 0; c < behavior.table.size(); ++c) acc.add(ineq.coefficients[c] * behavior.table[c]);
  return acc.value();
}

double inequality_classical_max(const BellInequality& ineq, const Dims& dims, std::uint64_t cap) {
  if (ineq.coefficients.size() != dims.cells()) throw InputError("inequality has the wrong table size");
  const std::size_t nout = dims.output_tuples();
  double best = -std::numeric_limits<double>::infinity();
  for_each_strategy(dims, cap, [&](std::uint64_t, const DeterministicStrategy&, std::span<const std::size_t> resp) {
    best = std::max(best, ineq_on_response(ineq, nout, resp));
  });
  return best;
}

LocalityResult is_local(const Behavior& behavior, std::uint64_t cap) {
  validate_behavior(behavior);
  const Dims& dims = behavior.dims;
  check_strategy_cap(dims, cap);
  const std::size_t cells = dims.cells();
  const std::size_t nout = dims.output_tuples();
  const auto nstrat = static_cast<std::size_t>(strategy_count(dims));

  // p(a|x) = sum_l q_l d_l(a|x), sum_l q_l = 1, q >= 0.
  LPProblem lp;
  lp.objective.assign(nstrat, 0.0);
  lp.rows.assign(cells + 1, std::vector<double>(nstrat, 0.0));
  lp.senses.assign(cells + 1, Sense::eq);
  lp.rhs = behavior.table;
  lp.rhs.push_back(1.0);
  for_each_strategy(dims, cap, [&](std::uint64_t l, const DeterministicStrategy&, std::span<const std::size_t> resp) {
    for (std::size_t i = 0; i < resp.size(); ++i) lp.rows[i * nout + resp[i]][l] = 1.0;
    lp.rows[cells][l] = 1.0;
  });
  const LPSolution sol = simplex_solve(lp);

  LocalityResult out;
  if (sol.status == LPStatus::optimal) {
    out.local = true;
    out.weights = sol.x;
    for (double& w : out.weights) w = std::max(w, 0.0);
    return out;
  }
  if (sol.status != LPStatus::infeasible)
    throw std::runtime_error(std::string("locality LP failed: ") + to_string(sol.status) + " " + sol.diagnostics);

  // Farkas: y.d_l + y_norm >= 0 for all l and y.p + y_norm < 0, so
  // s = -y gives s.d_l <= y_norm < s.p.
  BellInequality ineq;
  ineq.coefficients.resize(cells);
  for (std::size_t c = 0; c < cells; ++c) ineq.coefficients[c] = -sol.duals[c];
  ineq.bound = sol.duals[cells];
  ineq = normalize_inequality(std::move(ineq), behavior);
  // Tighten the bound to the exact classical maximum.
  ineq.bound = inequality_classical_max(ineq, dims, cap);
  ineq.violation = inequality_value(ineq, behavior) - ineq.bound;
  if (!certifies(ineq, behavior, cap)) {
    ineq = select_inequality(behavior, cap);
    if (!certifies(ineq, behavior, cap))
      throw std::runtime_error("locality LP reported infeasible but no violated inequality could be verified");
  }
  out.certificate = std::move(ineq);
  return out;
}

BellInequality select_inequality(const Behavior& behavior, std::uint64_t cap) {
  validate_behavior(behavior);
  const Dims& dims = behavior.dims;
  check_strategy_cap(dims, cap);
  const std::size_t cells = dims.cells();
  const std::size_t nout = dims.output_tuples();
  const auto nstrat = static_cast<std::size_t>(strategy_count(dims));

  // Variables: s (cells) in [0, 1], then S >= 0.
  LPProblem lp;
  lp.objective = behavior.table;
  lp.objective.push_back(-1.0);
  lp.lower.assign(cells + 1, 0.0);
  lp.upper.assign(cells + 1, 1.0);
  lp.upper[cells] = std::numeric_limits<double>::infinity();
  lp.rows.assign(nstrat, std::vector<double>(cells + 1, 0.0));
  lp.senses.assign(nstrat, Sense::le);
  lp.rhs.assign(nstrat, 0.0);
  for_each_strategy(dims, cap, [&](std::uint64_t l, const DeterministicStrategy&, std::span<const std::size_t> resp) {
    for (std::size_t i = 0; i < resp.size(); ++i) lp.rows[l][i * nout + resp[i]] = 1.0;
    lp.rows[l][cells] = -1.0;
  });
  const LPSolution sol = simplex_solve(lp);
  if (sol.status != LPStatus::optimal)
    throw std::runtime_error(std::string("inequality selection LP failed: ") + to_string(sol.status));

  BellInequality ineq;
  ineq.coefficients.assign(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(cells));
  for (double& c : ineq.coefficients) c = std::clamp(c, 0.0, 1.0);
  ineq.bound = inequality_classical_max(ineq, dims, cap);
  ineq.violation = inequality_value(ineq, behavior) - ineq.bound;
  return ineq;
}

BellInequality select_winlose_inequality(const Behavior& behavior, std::uint64_t cap) {
  validate_behavior(behavior);
  const Dims& dims = behavior.dims;
  const std::size_t cells = dims.cells();
  if (cells > 20) throw InputError("0/1 inequality search supports at most 20 table cells");
  check_strategy_cap(dims, cap);
  const std::size_t nout = dims.output_tuples();

  std::vector<std::vector<std::size_t>> responses;
  for_each_strategy(dims, cap, [&](std::uint64_t, const DeterministicStrategy&, std::span<const std::size_t> resp) {
    responses.emplace_back(resp.begin(), resp.end());
  });

  BellInequality best;
  best.coefficients.assign(cells, 0.0);
  best.violation = -std::numeric_limits<double>::infinity();
  BellInequality cand;
  cand.coefficients.assign(cells, 0.0);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << cells); ++mask) {
    for (std::size_t c = 0; c < cells; ++c) cand.coefficients[c] = ((mask >> (cells - 1 - c)) & 1U) ? 1.0 : 0.0;
    double smax = 0.0;
    for (const auto& r : responses) smax = std::max(smax, ineq_on_response(cand, nout, r));
    const double v = inequality_value(cand, behavior) - smax;
    if (v > best.violation) {
      best.coefficients = cand.coefficients;
      best.bound = smax;
      best.violation = v;
    }
  }
  return best;
}

BoxOptimum box_polytope_max(std::span<const double> w, double tau, std::span<const double> target) {
  if (w.size() != target.size()) throw InputError("objective and target distribution differ in length");
  if (!(tau >= 0.0 && tau < 1.0)) throw InputError("tau must lie in [0, 1)");
  const std::size_t m = target.size();
  if (tau == 0.0) {
    detail::CompensatedSum acc;
    for (std::size_t i = 0; i < m; ++i) acc.add(w[i] * target[i]);
    return {acc.value(), std::vector<double>(target.begin(), target.end())};
  }
  LPProblem lp;
  lp.objective.assign(w.begin(), w.end());
  lp.lower.resize(m);
  lp.upper.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    lp.lower[i] = std::max(0.0, target[i] - tau);
    lp.upper[i] = std::min(1.0, target[i] + tau);
  }
  lp.rows.assign(1, std::vector<double>(m, 1.0));
  lp.senses = {Sense::eq};
  lp.rhs = {1.0};
  const LPSolution sol = simplex_solve(lp);
  if (sol.status != LPStatus::optimal)
    throw InputError(std::string("bias box is empty or degenerate: ") + to_string(sol.status));
  return {sol.objective, sol.x};
}

std::vector<std::vector<double>> box_polytope_vertices(double tau, std::span<const double> target) {
  const std::size_t m = target.size();
  if (m == 0) return {};
  if (m > 20) throw InputError("vertex enumeration supports at most 20 inputs per site");
  std::vector<double> lo(m), hi(m);
  for (std::size_t i = 0; i < m; ++i) {
    lo[i] = std::max(0.0, target[i] - tau);
    hi[i] = std::min(1.0, target[i] + tau);
  }
  if (tau == 0.0) return {std::vector<double>(target.begin(), target.end())};
  std::vector<std::vector<double>> out;
  // Every vertex has at most one coordinate strictly inside its interval.
  for (std::size_t f = 0; f < m; ++f) {
    const std::uint64_t combos = std::uint64_t{1} << (m - 1);
    for (std::uint64_t mask = 0; mask < combos; ++mask) {
      std::vector<double> q(m);
      double rest = 0.0;
      std::size_t bit = 0;
      for (std::size_t i = 0; i < m; ++i) {
        if (i == f) continue;
        q[i] = ((mask >> bit++) & 1U) ? hi[i] : lo[i];
        rest += q[i];
      }
      const double qf = 1.0 - rest;
      if (qf < lo[f] - 1e-12 || qf > hi[f] + 1e-12) continue;
      q[f] = std::clamp(qf, lo[f], hi[f]);
      out.push_back(std::move(q));
    }
  }
  return out;
}

}  // namespace bellcert
