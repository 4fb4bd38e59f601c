#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bellcert {

// Malformed input: bad files, invariant violations, out-of-range arguments.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A method's stated regime does not cover the request (e.g. c/n below beta).
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An enumeration would exceed the configured cap.
class CapExceededError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Tag = int;

/// Event-ready tag meaning "no success"; attempts carrying it are not trials.
inline constexpr Tag kNullTag = 0;

inline constexpr std::uint64_t kDefaultStrategyCap = 10'000'000;

enum class GameKind { win_lose, general };

/// Per-site input and output cardinalities. Tuples are flattened to a single
/// index in mixed radix with site 0 most significant.
struct Dims {
  std::vector<int> inputs;
  std::vector<int> outputs;

  std::size_t sites() const { return inputs.size(); }
  std::size_t input_tuples() const;
  std::size_t output_tuples() const;
  std::size_t cells() const { return input_tuples() * output_tuples(); }

  std::size_t encode_inputs(std::span<const int> x) const;
  std::size_t encode_outputs(std::span<const int> a) const;
  std::vector<int> decode_inputs(std::size_t index) const;
  std::vector<int> decode_outputs(std::size_t index) const;

  bool operator==(const Dims&) const = default;
};

/// A scored game. `scores[t]` is the table for `tags[t]`, laid out as
/// [input_index * output_tuples + output_index] and holding s_{a|x,t}.
/// The null tag has no table; its score is identically 0.
struct GameSpec {
  std::string name;
  Dims dims;
  std::vector<Tag> tags;
  std::vector<std::vector<double>> scores;
  std::vector<double> input_distribution;
  GameKind kind = GameKind::general;
  // Optional external symbols, per site; empty when symbols are plain integers.
  std::vector<std::vector<std::string>> input_labels;
  std::vector<std::vector<std::string>> output_labels;

  std::size_t tag_index(Tag tag) const;
  bool has_tag(Tag tag) const;
  double score(Tag tag, std::size_t input_index, std::size_t output_index) const;
  double max_score() const;
  double min_score() const;
};

/// Bounds on the predictability of the input generators. Site 0 uses tau_a,
/// every further site uses tau_b.
struct BiasBound {
  double tau_a = 0.0;
  double tau_b = 0.0;

  double tau() const { return tau_a > tau_b ? tau_a : tau_b; }
  double for_site(std::size_t site) const { return site == 0 ? tau_a : tau_b; }
  bool is_zero() const { return tau_a == 0.0 && tau_b == 0.0; }
};

BiasBound make_bias(double tau_a, double tau_b);

/// Throws InputError unless p(x) - tau >= 0 and p(x) + tau <= 1 for every
/// marginal of every site.
void check_bias(const BiasBound& bias, const GameSpec& spec);

struct TrialRecord {
  std::uint64_t index = 0;
  Tag tag = kNullTag;
  std::vector<int> inputs;
  std::vector<int> outputs;  // may be empty when tag is null
};

struct ExperimentData {
  std::vector<TrialRecord> records;

  std::size_t attempts() const { return records.size(); }
  std::size_t trials() const;
};

/// Conditional table p(a|x), same layout as a GameSpec score table.
struct Behavior {
  Dims dims;
  std::vector<double> table;

  double at(std::size_t input_index, std::size_t output_index) const {
    return table[input_index * dims.output_tuples() + output_index];
  }
};

/// Fixed output per input at each site: outputs[site][input].
struct DeterministicStrategy {
  std::vector<std::vector<int>> outputs;

  std::size_t output_index(const Dims& dims, std::size_t input_index) const;
  /// Joint output index for every joint input index.
  std::vector<std::size_t> response_table(const Dims& dims) const;

  bool operator==(const DeterministicStrategy&) const = default;
};

void validate_dims(const Dims& dims);

/// Checks every GameSpec invariant, infers `kind` and sorts tags ascending.
GameSpec validate_game(GameSpec spec);

void validate_behavior(const Behavior& behavior);

/// Checks arities, ranges, known tags and strictly increasing indices.
void validate_data(const GameSpec& spec, const ExperimentData& data);

std::vector<std::vector<double>> site_marginals(const GameSpec& spec);
bool is_product_distribution(const GameSpec& spec, double tol = 1e-12);

struct ScoreSummary {
  double total = 0.0;
  std::vector<double> per_trial;
  std::optional<std::size_t> wins;  // present for win/lose games
};

/// Total score over non-null records. Wins count maximum-score trials.
ScoreSummary score_experiment(const GameSpec& spec, const ExperimentData& data);

/// s' = scale * s + offset.
struct Affine {
  double scale = 1.0;
  double offset = 0.0;

  double apply(double s) const { return scale * s + offset; }
  double invert(double s) const { return (s - offset) / scale; }
  /// Maps a total over n trials.
  double apply_total(double total, double n) const { return scale * total + offset * n; }
};

struct NormalizedGame {
  GameSpec spec;
  Affine affine;
};

/// Affine map of all scores onto [0, 1].
NormalizedGame normalize_game(const GameSpec& spec);

/// n (S + 4) / 8, unrounded.
double s_to_wins(std::int64_t n, double chsh_value);
/// 8 (c / n - 1/2).
double wins_to_s(std::int64_t n, std::int64_t wins);

}  // namespace bellcert
