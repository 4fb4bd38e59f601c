#include "bellcert/winlose.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "bellcert/polytope.hpp"
#include "bellcert/tails.hpp"
#include "numeric.hpp"

namespace bellcert {

namespace {

std::vector<std::vector<double>> win_tables(const GameSpec& spec) {
  const double top = spec.max_score();
  std::vector<std::vector<double>> out;
  for (const auto& table : spec.scores) {
    std::vector<double> w(table.size());
    for (std::size_t c = 0; c < table.size(); ++c) w[c] = table[c] == top ? 1.0 : 0.0;
    out.push_back(std::move(w));
  }
  return out;
}

// Maximizes sum_x prod_k q_k(x_k) w(x, lambda(x)) over product distributions
// in the bias box. The objective is multilinear, so each of the first K-1
// sites may be restricted to vertices of its box; the last site is a
// linear problem.
struct BoxSearch {
  const Dims& dims;
  std::vector<std::vector<double>> marginals;
  std::vector<std::vector<std::vector<double>>> vertices;  // sites 0..K-2
  double tau_last = 0.0;

  double best(std::span<const double> payoff, std::vector<std::vector<double>>& arg) const {
    const std::size_t sites = dims.sites();
    const std::size_t last = sites - 1;
    const std::size_t nin = dims.input_tuples();
    const auto n_last = static_cast<std::size_t>(dims.inputs[last]);
    std::vector<std::size_t> pick(last, 0);
    double top = -1.0;
    for (;;) {
      // Weights for the last site given the chosen vertices.
      std::vector<double> w(n_last, 0.0);
      for (std::size_t i = 0; i < nin; ++i) {
        double prob = 1.0;
        std::size_t rest = i;
        const std::size_t x_last = rest % n_last;
        rest /= n_last;
        for (std::size_t k = last; k-- > 0;) {
          const auto r = static_cast<std::size_t>(dims.inputs[k]);
          prob *= vertices[k][pick[k]][rest % r];
          rest /= r;
        }
        w[x_last] += prob * payoff[i];
      }
      const BoxOptimum opt = box_polytope_max(w, tau_last, marginals[last]);
      if (opt.value > top) {
        top = opt.value;
        arg.assign(sites, {});
        for (std::size_t k = 0; k < last; ++k) arg[k] = vertices[k][pick[k]];
        arg[last] = opt.point;
      }
      std::size_t k = last;
      while (k-- > 0) {
        if (++pick[k] < vertices[k].size()) break;
        pick[k] = 0;
      }
      if (k == static_cast<std::size_t>(-1)) break;
    }
    return top;
  }
};

// Odometer over per-(site, input) permutations of that site's outputs.
bool find_output_relabeling(const GameSpec& spec, const std::vector<double>& from, const std::vector<double>& to,
                            std::vector<std::vector<std::vector<int>>>& perm, std::uint64_t cap) {
  const Dims& d = spec.dims;
  std::vector<std::vector<int>> base;
  std::uint64_t total = 1;
  std::vector<std::pair<std::size_t, int>> slots;
  for (std::size_t k = 0; k < d.sites(); ++k) {
    std::uint64_t fact = 1;
    for (int o = 2; o <= d.outputs[k]; ++o) fact *= static_cast<std::uint64_t>(o);
    for (int x = 0; x < d.inputs[k]; ++x) {
      slots.emplace_back(k, x);
      if (total > cap / std::max<std::uint64_t>(fact, 1))
        throw CapExceededError("output relabeling search exceeds the cap of " + std::to_string(cap));
      total *= fact;
    }
  }
  perm.assign(d.sites(), {});
  for (std::size_t k = 0; k < d.sites(); ++k) {
    std::vector<int> id(static_cast<std::size_t>(d.outputs[k]));
    std::iota(id.begin(), id.end(), 0);
    perm[k].assign(static_cast<std::size_t>(d.inputs[k]), id);
  }
  const std::size_t nin = d.input_tuples();
  const std::size_t nout = d.output_tuples();
  std::vector<std::vector<int>> xs(nin), as(nout);
  for (std::size_t i = 0; i < nin; ++i) xs[i] = d.decode_inputs(i);
  for (std::size_t o = 0; o < nout; ++o) as[o] = d.decode_outputs(o);

  std::vector<int> mapped(d.sites());
  for (std::uint64_t it = 0; it < total; ++it) {
    bool ok = true;
    for (std::size_t i = 0; i < nin && ok; ++i) {
      if (spec.input_distribution[i] == 0.0) continue;
      for (std::size_t o = 0; o < nout; ++o) {
        for (std::size_t k = 0; k < d.sites(); ++k)
          mapped[k] = perm[k][static_cast<std::size_t>(xs[i][k])][static_cast<std::size_t>(as[o][k])];
        if (from[i * nout + o] != to[i * nout + d.encode_outputs(mapped)]) {
          ok = false;
          break;
        }
      }
    }
    if (ok) return true;
    for (std::size_t s = slots.size(); s-- > 0;) {
      auto& p = perm[slots[s].first][static_cast<std::size_t>(slots[s].second)];
      if (std::next_permutation(p.begin(), p.end())) break;
    }
  }
  return false;
}

}  // namespace

WinLoseBound chsh_beta_win(const BiasBound& bias) {
  make_bias(bias.tau_a, bias.tau_b);
  if (bias.tau_a >= 0.5 || bias.tau_b >= 0.5) throw InputError("CHSH bias formula requires tau below 1/2");
  WinLoseBound out;
  out.beta_win = 0.75 + 0.5 * (bias.tau_a + bias.tau_b) - bias.tau_a * bias.tau_b;
  out.provenance = BetaProvenance::analytic_chsh;
  out.bias = bias;
  return out;
}

bool is_chsh_shape(const GameSpec& spec) {
  if (spec.kind != GameKind::win_lose) return false;
  if (spec.dims != Dims{{2, 2}, {2, 2}}) return false;
  for (double p : spec.input_distribution)
    if (p != 0.25) return false;
  const double top = spec.max_score();
  if (spec.min_score() == top) return false;
  for (const auto& table : spec.scores) {
    int parity = 0;
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y) {
        const auto i = static_cast<std::size_t>(x * 2 + y);
        // The winning pairs must be exactly {a xor b == g} for one bit g.
        const bool w00 = table[i * 4 + 0] == top;
        const bool w01 = table[i * 4 + 1] == top;
        const bool w10 = table[i * 4 + 2] == top;
        const bool w11 = table[i * 4 + 3] == top;
        if (w00 != w11 || w01 != w10 || w00 == w01) return false;
        parity ^= w00 ? 0 : 1;
      }
    if (parity != 1) return false;
  }
  return true;
}

WinOptimum beta_win_optimize(const GameSpec& spec, const BiasBound& bias, std::uint64_t cap) {
  if (spec.kind != GameKind::win_lose) throw InputError("winning probability needs a win/lose game");
  check_bias(bias, spec);
  const bool biased = !bias.is_zero();
  if (biased && !is_product_distribution(spec))
    throw InputError("a nonzero bias bound needs a product input distribution");

  const auto wins = win_tables(spec);
  const Dims& dims = spec.dims;
  const std::size_t nout = dims.output_tuples();

  BoxSearch search{dims, site_marginals(spec), {}, 0.0};
  if (biased) {
    for (std::size_t k = 0; k + 1 < dims.sites(); ++k)
      search.vertices.push_back(box_polytope_vertices(bias.for_site(k), search.marginals[k]));
    search.tau_last = bias.for_site(dims.sites() - 1);
  }

  WinOptimum out;
  out.bound.provenance = BetaProvenance::enumeration;
  out.bound.bias = bias;
  bool first = true;
  std::vector<double> payoff(dims.input_tuples());
  std::vector<std::vector<double>> arg;
  for_each_strategy(dims, cap, [&](std::uint64_t, const DeterministicStrategy& s, std::span<const std::size_t> resp) {
    for (std::size_t t = 0; t < spec.tags.size(); ++t) {
      for (std::size_t i = 0; i < resp.size(); ++i) payoff[i] = wins[t][i * nout + resp[i]];
      double v = 0.0;
      if (biased) {
        v = search.best(payoff, arg);
      } else {
        detail::CompensatedSum acc;
        for (std::size_t i = 0; i < resp.size(); ++i) acc.add(spec.input_distribution[i] * payoff[i]);
        v = acc.value();
      }
      if (first || v > out.bound.beta_win) {
        out.bound.beta_win = v;
        out.strategy = s;
        out.tag = spec.tags[t];
        out.marginals = biased ? arg : search.marginals;
        first = false;
      }
    }
  });
  out.bound.beta_win = std::clamp(out.bound.beta_win, 0.0, 1.0);
  return out;
}

PValueReport winlose_pvalue(std::int64_t n, std::int64_t c, const WinLoseBound& bound) {
  if (n < 0) throw InputError("trial count must be nonnegative");
  if (c < 0 || c > n) throw InputError("win count must lie in [0, n]");
  if (!(bound.beta_win >= 0.0 && bound.beta_win <= 1.0)) throw InputError("beta_win must lie in [0, 1]");
  const TailResult tail = binom_tail(n, c, bound.beta_win);
  PValueReport r;
  r.method = Method::binomial;
  r.n = n;
  r.statistic = static_cast<double>(c);
  r.params = bound;
  r.raw_p_value = tail.value;
  r.p_value = std::min(1.0, tail.value);
  r.log_p_value = tail.log_value;
  return r;
}

PValueReport gaussian_approx_pvalue(std::int64_t n, std::int64_t c, const WinLoseBound& bound) {
  if (n < 1) throw InputError("trial count must be positive");
  if (c < 0 || c > n) throw InputError("win count must lie in [0, n]");
  const double beta = bound.beta_win;
  if (!(beta > 0.0 && beta < 1.0)) throw InputError("the normal approximation needs 0 < beta_win < 1");
  const double dn = static_cast<double>(n);
  const double excess = static_cast<double>(c) - dn * beta;
  if (!(excess > 0.0)) throw PreconditionError("the normal approximation is only stated for c > n beta_win");
  PValueReport r;
  r.method = Method::gaussian_nonrigorous;
  r.n = n;
  r.statistic = static_cast<double>(c);
  r.params = bound;
  r.raw_p_value = gaussian_tail_q(excess / std::sqrt(dn * beta * (1.0 - beta)));
  r.p_value = r.raw_p_value;
  r.log_p_value = std::log(r.raw_p_value);
  r.certifying = false;
  r.note = "normal approximation; not a valid P-value bound";
  return r;
}

RelabeledExperiment relabel_event_ready(const GameSpec& spec, const ExperimentData& data, const BiasBound& bias,
                                        const std::map<Tag, std::vector<Tag>>& tag_map, std::uint64_t cap) {
  validate_data(spec, data);
  if (spec.kind != GameKind::win_lose) throw PreconditionError("tag merging needs a win/lose game");

  std::map<Tag, Tag> target_of;      // source tag -> merged tag
  std::map<Tag, Tag> reference_of;   // merged tag -> reference source tag
  for (const auto& [merged, sources] : tag_map) {
    if (merged == kNullTag) throw InputError("cannot merge into the null tag");
    if (sources.empty()) throw InputError("merged tag " + std::to_string(merged) + " has no source tags");
    for (Tag s : sources) {
      if (!spec.has_tag(s)) throw InputError("unknown source tag " + std::to_string(s));
      if (!target_of.emplace(s, merged).second)
        throw InputError("source tag " + std::to_string(s) + " appears in more than one group");
    }
    reference_of[merged] = *std::min_element(sources.begin(), sources.end());
  }

  auto single_tag_game = [&](Tag t) {
    GameSpec g = spec;
    g.tags = {t};
    g.scores = {spec.scores[spec.tag_index(t)]};
    g.input_labels.clear();
    g.output_labels.clear();
    return g;
  };

  // Per source tag: output permutation mapping it onto its group's reference.
  std::map<Tag, std::vector<std::vector<std::vector<int>>>> perms;
  const auto wins = win_tables(spec);
  for (const auto& [merged, sources] : tag_map) {
    const Tag ref = reference_of[merged];
    const double beta_ref = beta_win_optimize(single_tag_game(ref), bias, cap).bound.beta_win;
    for (Tag s : sources) {
      const double beta_s = beta_win_optimize(single_tag_game(s), bias, cap).bound.beta_win;
      if (std::fabs(beta_s - beta_ref) > 1e-12)
        throw PreconditionError("tags " + std::to_string(ref) + " and " + std::to_string(s) +
                                " have different winning probabilities; they cannot be merged");
      if (s == ref) continue;
      std::vector<std::vector<std::vector<int>>> perm;
      if (!find_output_relabeling(spec, wins[spec.tag_index(s)], wins[spec.tag_index(ref)], perm, cap))
        throw PreconditionError("no local output relabeling maps tag " + std::to_string(s) + " onto tag " +
                                std::to_string(ref));
      perms.emplace(s, std::move(perm));
    }
  }

  RelabeledExperiment out;
  GameSpec g = spec;
  g.tags.clear();
  g.scores.clear();
  std::set<Tag> emitted;
  for (std::size_t t = 0; t < spec.tags.size(); ++t) {
    const Tag tag = spec.tags[t];
    const auto it = target_of.find(tag);
    if (it == target_of.end()) {
      g.tags.push_back(tag);
      g.scores.push_back(spec.scores[t]);
    } else if (emitted.insert(it->second).second) {
      g.tags.push_back(it->second);
      g.scores.push_back(spec.scores[spec.tag_index(reference_of[it->second])]);
    }
  }
  if (std::set<Tag>(g.tags.begin(), g.tags.end()).size() != g.tags.size())
    throw InputError("merged tags collide with tags kept as they are");
  out.spec = validate_game(std::move(g));

  out.data = data;
  for (auto& rec : out.data.records) {
    if (rec.tag == kNullTag) continue;
    const auto it = target_of.find(rec.tag);
    if (it == target_of.end()) continue;
    const auto p = perms.find(rec.tag);
    if (p != perms.end()) {
      for (std::size_t k = 0; k < rec.outputs.size(); ++k)
        rec.outputs[k] = p->second[k][static_cast<std::size_t>(rec.inputs[k])][static_cast<std::size_t>(rec.outputs[k])];
    }
    rec.tag = it->second;
  }
  return out;
}

}  // namespace bellcert
