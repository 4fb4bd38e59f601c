#include "bellcert/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "numeric.hpp"

namespace bellcert {

namespace {

std::size_t product(const std::vector<int>& v) {
  std::size_t p = 1;
  for (int k : v) p *= static_cast<std::size_t>(k);
  return p;
}

std::size_t encode(const std::vector<int>& radix, std::span<const int> digits,
                   const char* what) {
  if (digits.size() != radix.size()) {
    throw InputError(std::string(what) + " tuple has arity " + std::to_string(digits.size()) +
                     ", expected " + std::to_string(radix.size()));
  }
  std::size_t idx = 0;
  for (std::size_t k = 0; k < radix.size(); ++k) {
    if (digits[k] < 0 || digits[k] >= radix[k]) {
      throw InputError(std::string(what) + " symbol " + std::to_string(digits[k]) +
                       " out of range at site " + std::to_string(k));
    }
    idx = idx * static_cast<std::size_t>(radix[k]) + static_cast<std::size_t>(digits[k]);
  }
  return idx;
}

std::vector<int> decode(const std::vector<int>& radix, std::size_t index) {
  std::vector<int> digits(radix.size());
  for (std::size_t k = radix.size(); k-- > 0;) {
    digits[k] = static_cast<int>(index % static_cast<std::size_t>(radix[k]));
    index /= static_cast<std::size_t>(radix[k]);
  }
  return digits;
}

}  // namespace

std::size_t Dims::input_tuples() const { return product(inputs); }
std::size_t Dims::output_tuples() const { return product(outputs); }

std::size_t Dims::encode_inputs(std::span<const int> x) const { return encode(inputs, x, "input"); }
std::size_t Dims::encode_outputs(std::span<const int> a) const {
  return encode(outputs, a, "output");
}
std::vector<int> Dims::decode_inputs(std::size_t index) const { return decode(inputs, index); }
std::vector<int> Dims::decode_outputs(std::size_t index) const { return decode(outputs, index); }

std::size_t GameSpec::tag_index(Tag tag) const {
  auto it = std::find(tags.begin(), tags.end(), tag);
  if (it == tags.end()) throw InputError("unknown tag " + std::to_string(tag));
  return static_cast<std::size_t>(it - tags.begin());
}

bool GameSpec::has_tag(Tag tag) const {
  return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

double GameSpec::score(Tag tag, std::size_t input_index, std::size_t output_index) const {
  if (tag == kNullTag) return 0.0;
  return scores[tag_index(tag)][input_index * dims.output_tuples() + output_index];
}

double GameSpec::max_score() const {
  double m = -INFINITY;
  for (const auto& table : scores)
    for (double s : table) m = std::max(m, s);
  return m;
}

double GameSpec::min_score() const {
  double m = INFINITY;
  for (const auto& table : scores)
    for (double s : table) m = std::min(m, s);
  return m;
}

BiasBound make_bias(double tau_a, double tau_b) {
  auto ok = [](double t) { return std::isfinite(t) && t >= 0.0 && t < 1.0; };
  if (!ok(tau_a) || !ok(tau_b)) throw InputError("bias parameters must lie in [0, 1)");
  return BiasBound{tau_a, tau_b};
}

std::vector<std::vector<double>> site_marginals(const GameSpec& spec) {
  const Dims& d = spec.dims;
  std::vector<std::vector<double>> m(d.sites());
  for (std::size_t k = 0; k < d.sites(); ++k) m[k].assign(static_cast<std::size_t>(d.inputs[k]), 0.0);
  for (std::size_t i = 0; i < d.input_tuples(); ++i) {
    const auto x = d.decode_inputs(i);
    for (std::size_t k = 0; k < d.sites(); ++k) m[k][static_cast<std::size_t>(x[k])] += spec.input_distribution[i];
  }
  return m;
}

bool is_product_distribution(const GameSpec& spec, double tol) {
  const auto m = site_marginals(spec);
  const Dims& d = spec.dims;
  for (std::size_t i = 0; i < d.input_tuples(); ++i) {
    const auto x = d.decode_inputs(i);
    double p = 1.0;
    for (std::size_t k = 0; k < d.sites(); ++k) p *= m[k][static_cast<std::size_t>(x[k])];
    if (std::fabs(p - spec.input_distribution[i]) > tol) return false;
  }
  return true;
}

void check_bias(const BiasBound& bias, const GameSpec& spec) {
  make_bias(bias.tau_a, bias.tau_b);
  const auto m = site_marginals(spec);
  for (std::size_t k = 0; k < m.size(); ++k) {
    const double tau = bias.for_site(k);
    for (std::size_t x = 0; x < m[k].size(); ++x) {
      if (m[k][x] - tau < 0.0 || m[k][x] + tau > 1.0) {
        throw InputError("bias box invalid at site " + std::to_string(k) + ", input " +
                         std::to_string(x) + ": p = " + std::to_string(m[k][x]) +
                         ", tau = " + std::to_string(tau));
      }
    }
  }
}

std::size_t ExperimentData::trials() const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [](const TrialRecord& r) { return r.tag != kNullTag; }));
}

std::size_t DeterministicStrategy::output_index(const Dims& dims, std::size_t input_index) const {
  const auto x = dims.decode_inputs(input_index);
  std::size_t idx = 0;
  for (std::size_t k = 0; k < dims.sites(); ++k) {
    idx = idx * static_cast<std::size_t>(dims.outputs[k]) +
          static_cast<std::size_t>(outputs[k][static_cast<std::size_t>(x[k])]);
  }
  return idx;
}

std::vector<std::size_t> DeterministicStrategy::response_table(const Dims& dims) const {
  std::vector<std::size_t> table(dims.input_tuples());
  for (std::size_t i = 0; i < table.size(); ++i) table[i] = output_index(dims, i);
  return table;
}

void validate_dims(const Dims& dims) {
  if (dims.sites() < 1) throw InputError("a game needs at least one site");
  if (dims.outputs.size() != dims.inputs.size()) {
    throw InputError("inputs and outputs list different site counts");
  }
  for (std::size_t k = 0; k < dims.sites(); ++k) {
    if (dims.inputs[k] < 1 || dims.outputs[k] < 1) {
      throw InputError("site " + std::to_string(k) + " needs at least one input and one output");
    }
  }
  double cells = 1.0;
  for (int v : dims.inputs) cells *= v;
  for (int v : dims.outputs) cells *= v;
  if (cells > 1e8) throw InputError("score table too large");
}

GameSpec validate_game(GameSpec spec) {
  validate_dims(spec.dims);
  const Dims& d = spec.dims;
  if (spec.tags.empty()) throw InputError("a game needs at least one non-null tag");
  if (spec.scores.size() != spec.tags.size()) {
    throw InputError("score tables do not match the tag list");
  }
  std::set<Tag> seen;
  for (Tag t : spec.tags) {
    if (t == kNullTag) throw InputError("tag 0 is reserved for the null tag");
    if (!seen.insert(t).second) throw InputError("duplicate tag " + std::to_string(t));
  }
  for (const auto& table : spec.scores) {
    if (table.size() != d.cells()) throw InputError("missing score entries");
    for (double s : table) {
      if (!std::isfinite(s)) throw InputError("missing or non-finite score entry");
    }
  }
  if (spec.input_distribution.size() != d.input_tuples()) {
    throw InputError("input distribution has the wrong number of entries");
  }
  detail::CompensatedSum total;
  for (double p : spec.input_distribution) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InputError("input distribution has a negative entry");
    total.add(p);
  }
  if (std::fabs(total.value() - 1.0) > 1e-12) {
    throw InputError("input distribution sums to " + std::to_string(total.value()) + ", not 1");
  }
  auto check_labels = [&](const std::vector<std::vector<std::string>>& labels,
                          const std::vector<int>& radix, const char* what) {
    if (labels.empty()) return;
    if (labels.size() != radix.size()) throw InputError(std::string(what) + " labels: wrong site count");
    for (std::size_t k = 0; k < radix.size(); ++k) {
      if (labels[k].size() != static_cast<std::size_t>(radix[k])) {
        throw InputError(std::string(what) + " labels: wrong count at site " + std::to_string(k));
      }
    }
  };
  check_labels(spec.input_labels, d.inputs, "input");
  check_labels(spec.output_labels, d.outputs, "output");

  // Canonical order: ascending tags.
  std::vector<std::size_t> order(spec.tags.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return spec.tags[a] < spec.tags[b]; });
  std::vector<Tag> tags;
  std::vector<std::vector<double>> scores;
  for (std::size_t i : order) {
    tags.push_back(spec.tags[i]);
    scores.push_back(std::move(spec.scores[i]));
  }
  spec.tags = std::move(tags);
  spec.scores = std::move(scores);

  std::set<double> distinct;
  for (const auto& table : spec.scores) distinct.insert(table.begin(), table.end());
  spec.kind = distinct.size() <= 2 ? GameKind::win_lose : GameKind::general;
  return spec;
}

void validate_behavior(const Behavior& behavior) {
  validate_dims(behavior.dims);
  const std::size_t nin = behavior.dims.input_tuples();
  const std::size_t nout = behavior.dims.output_tuples();
  if (behavior.table.size() != nin * nout) throw InputError("behavior table has the wrong size");
  for (std::size_t i = 0; i < nin; ++i) {
    detail::CompensatedSum row;
    for (std::size_t o = 0; o < nout; ++o) {
      const double p = behavior.table[i * nout + o];
      if (!(p >= 0.0) || !std::isfinite(p)) throw InputError("behavior has a negative entry");
      row.add(p);
    }
    if (std::fabs(row.value() - 1.0) > 1e-12) {
      throw InputError("behavior row " + std::to_string(i) + " sums to " +
                       std::to_string(row.value()));
    }
  }
}

void validate_data(const GameSpec& spec, const ExperimentData& data) {
  const Dims& d = spec.dims;
  bool first = true;
  std::uint64_t last = 0;
  for (const auto& r : data.records) {
    if (!first && r.index <= last) throw InputError("record indices must be strictly increasing");
    first = false;
    last = r.index;
    if (r.tag != kNullTag && !spec.has_tag(r.tag)) {
      throw InputError("record " + std::to_string(r.index) + " has unknown tag " + std::to_string(r.tag));
    }
    d.encode_inputs(r.inputs);
    if (r.tag != kNullTag || !r.outputs.empty()) d.encode_outputs(r.outputs);
  }
}

ScoreSummary score_experiment(const GameSpec& spec, const ExperimentData& data) {
  validate_data(spec, data);
  ScoreSummary out;
  const double smax = spec.max_score();
  std::size_t wins = 0;
  detail::CompensatedSum total;
  for (const auto& r : data.records) {
    if (r.tag == kNullTag) continue;
    const double s = spec.score(r.tag, spec.dims.encode_inputs(r.inputs), spec.dims.encode_outputs(r.outputs));
    out.per_trial.push_back(s);
    total.add(s);
    if (s == smax) ++wins;
  }
  out.total = total.value();
  if (spec.kind == GameKind::win_lose) out.wins = wins;
  return out;
}

NormalizedGame normalize_game(const GameSpec& spec) {
  const double smin = spec.min_score();
  const double smax = spec.max_score();
  if (!(smax > smin)) throw InputError("cannot normalize a constant score table");
  NormalizedGame out{spec, Affine{}};
  out.affine.scale = 1.0 / (smax - smin);
  out.affine.offset = 0.0 - smin * out.affine.scale;
  for (auto& table : out.spec.scores) {
    for (double& s : table) {
      // Pin the endpoints so win/lose games map exactly onto {0, 1}.
      if (s == smin) {
        s = 0.0;
      } else if (s == smax) {
        s = 1.0;
      } else {
        s = (s - smin) / (smax - smin);
      }
    }
  }
  return out;
}

double s_to_wins(std::int64_t n, double chsh_value) {
  if (n < 1) throw InputError("n must be at least 1");
  if (!(chsh_value >= -4.0 && chsh_value <= 4.0)) throw InputError("S must lie in [-4, 4]");
  return static_cast<double>(n) * (chsh_value + 4.0) / 8.0;
}

double wins_to_s(std::int64_t n, std::int64_t wins) {
  if (n < 1) throw InputError("n must be at least 1");
  if (wins < 0 || wins > n) throw InputError("wins must lie in [0, n]");
  return 8.0 * (static_cast<double>(wins) / static_cast<double>(n) - 0.5);
}

}  // namespace bellcert
