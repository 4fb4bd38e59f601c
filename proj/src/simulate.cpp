#include "bellcert/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "bellcert/polytope.hpp"
#include "bellcert/winlose.hpp"

namespace bellcert {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kStrategyStream = 0xD1B54A32D192ED03ULL;
constexpr std::uint64_t kRandomRuleLimit = 1U << 16;

GameSpec single_tag(const GameSpec& spec, std::size_t t) {
  GameSpec g = spec;
  g.tags = {spec.tags[t]};
  g.scores = {spec.scores[t]};
  g.input_labels.clear();
  g.output_labels.clear();
  return g;
}

std::vector<double> input_weights(const GameSpec& spec, const std::vector<std::vector<double>>& marginals,
                                  bool biased) {
  if (!biased) return spec.input_distribution;
  const Dims& d = spec.dims;
  std::vector<double> w(d.input_tuples());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto x = d.decode_inputs(i);
    double p = 1.0;
    for (std::size_t k = 0; k < d.sites(); ++k) p *= marginals[k][static_cast<std::size_t>(x[k])];
    w[i] = p;
  }
  return w;
}

// Rules shared by every strategy instance built for one game.
struct RuleBook {
  Dims dims;
  std::vector<Tag> tags;
  Tag best_tag = kNullTag;
  std::vector<std::vector<LocalRule>> optimal;     // per tag index; front is the canonical argmax
  std::vector<std::vector<LocalRule>> suboptimal;  // per tag index
  std::vector<LocalRule> all;                      // empty when there are too many strategies

  std::size_t index_of(Tag tag) const {
    for (std::size_t t = 0; t < tags.size(); ++t)
      if (tags[t] == tag) return t;
    throw InputError("strategy asked to respond to unknown tag " + std::to_string(tag));
  }
};

std::shared_ptr<const RuleBook> build_rulebook(const GameSpec& spec, const BiasBound& bias, std::uint64_t cap) {
  if (spec.kind != GameKind::win_lose) throw InputError("adversary strategies need a win/lose game");
  auto book = std::make_shared<RuleBook>();
  book->dims = spec.dims;
  book->tags = spec.tags;
  book->best_tag = beta_win_optimize(spec, bias, cap).tag;
  const std::uint64_t count = strategy_count(spec.dims);
  const double top = spec.max_score();
  const std::size_t nout = spec.dims.output_tuples();
  for (std::size_t t = 0; t < spec.tags.size(); ++t) {
    const GameSpec g = single_tag(spec, t);
    const WinOptimum opt = beta_win_optimize(g, bias, cap);
    const auto w = input_weights(g, opt.marginals, !bias.is_zero());
    std::vector<LocalRule> best{LocalRule(spec.dims, opt.strategy)};
    std::vector<LocalRule> rest;
    for_each_strategy(spec.dims, cap,
                      [&](std::uint64_t, const DeterministicStrategy& s, std::span<const std::size_t> resp) {
                        double v = 0.0;
                        for (std::size_t i = 0; i < resp.size(); ++i)
                          if (spec.scores[t][i * nout + resp[i]] == top) v += w[i];
                        if (s == opt.strategy) return;
                        if (v >= opt.bound.beta_win - 1e-12) best.emplace_back(spec.dims, s);
                        else if (rest.size() < kRandomRuleLimit) rest.emplace_back(spec.dims, s);
                      });
    book->optimal.push_back(std::move(best));
    book->suboptimal.push_back(std::move(rest));
  }
  if (count <= kRandomRuleLimit)
    for (const auto& s : enumerate_strategies(spec.dims, cap)) book->all.emplace_back(spec.dims, s);
  return book;
}

class BookStrategy : public LhvmStrategy {
 public:
  explicit BookStrategy(std::shared_ptr<const RuleBook> book) : book_(std::move(book)) {}

 protected:
  const LocalRule& best(Tag tag) const { return book_->optimal[book_->index_of(tag)].front(); }

  const LocalRule& random_rule(Rng& rng) {
    if (!book_->all.empty()) return book_->all[rng() % book_->all.size()];
    DeterministicStrategy s;
    for (std::size_t k = 0; k < book_->dims.sites(); ++k) {
      std::vector<int> row(static_cast<std::size_t>(book_->dims.inputs[k]));
      for (int& v : row) v = static_cast<int>(rng() % static_cast<std::uint64_t>(book_->dims.outputs[k]));
      s.outputs.push_back(std::move(row));
    }
    scratch_ = std::make_unique<LocalRule>(book_->dims, std::move(s));
    return *scratch_;
  }

  std::shared_ptr<const RuleBook> book_;
  std::unique_ptr<LocalRule> scratch_;
};

class OptimalStrategy final : public BookStrategy {
 public:
  using BookStrategy::BookStrategy;
  std::unique_ptr<LhvmStrategy> clone() const override { return std::make_unique<OptimalStrategy>(book_); }
  std::string name() const override { return "optimal"; }
  bool has_memory() const override { return false; }
  Tag herald(Rng&) override { return book_->best_tag; }
  const LocalRule& respond(Tag tag, Rng&) override { return best(tag); }
};

class RandomStrategy final : public BookStrategy {
 public:
  using BookStrategy::BookStrategy;
  std::unique_ptr<LhvmStrategy> clone() const override { return std::make_unique<RandomStrategy>(book_); }
  std::string name() const override { return "random"; }
  bool has_memory() const override { return false; }
  Tag herald(Rng&) override { return book_->best_tag; }
  const LocalRule& respond(Tag, Rng& rng) override { return random_rule(rng); }
};

// Cycles through the maximizers according to its running win count and
// throws in a suboptimal trial after every streak of three wins.
class SwitcherStrategy final : public BookStrategy {
 public:
  using BookStrategy::BookStrategy;
  std::unique_ptr<LhvmStrategy> clone() const override { return std::make_unique<SwitcherStrategy>(book_); }
  std::string name() const override { return "switcher"; }
  bool has_memory() const override { return true; }
  void reset() override {
    wins_ = 0;
    streak_ = 0;
  }
  Tag herald(Rng&) override { return book_->best_tag; }
  const LocalRule& respond(Tag tag, Rng& rng) override {
    const std::size_t t = book_->index_of(tag);
    const auto& sub = book_->suboptimal[t];
    if (streak_ >= 3 && !sub.empty()) return sub[rng() % sub.size()];
    const auto& opt = book_->optimal[t];
    return opt[wins_ % opt.size()];
  }
  void observe(const AttemptOutcome& o) override {
    if (o.tag == kNullTag) return;
    if (o.won) {
      ++wins_;
      ++streak_;
    } else {
      streak_ = 0;
    }
    if (streak_ > 3) streak_ = 0;
  }

 private:
  std::uint64_t wins_ = 0;
  int streak_ = 0;
};

// Heralds eagerly after a win and reluctantly after a loss; plays optimally.
class HeraldStrategy final : public BookStrategy {
 public:
  using BookStrategy::BookStrategy;
  std::unique_ptr<LhvmStrategy> clone() const override { return std::make_unique<HeraldStrategy>(book_); }
  std::string name() const override { return "herald"; }
  bool has_memory() const override { return true; }
  void reset() override { last_won_ = false; }
  Tag herald(Rng& rng) override {
    const double rate = last_won_ ? 0.9 : 0.3;
    if (uniform01(rng) >= rate) return kNullTag;
    return book_->tags[rng() % book_->tags.size()];
  }
  const LocalRule& respond(Tag tag, Rng&) override { return best(tag); }
  void observe(const AttemptOutcome& o) override {
    if (o.tag != kNullTag) last_won_ = o.won;
  }

 private:
  bool last_won_ = false;
};

class HedgedStrategy final : public BookStrategy {
 public:
  using BookStrategy::BookStrategy;
  std::unique_ptr<LhvmStrategy> clone() const override { return std::make_unique<HedgedStrategy>(book_); }
  std::string name() const override { return "hedged"; }
  bool has_memory() const override { return false; }
  Tag herald(Rng&) override { return book_->best_tag; }
  const LocalRule& respond(Tag tag, Rng& rng) override {
    if (uniform01(rng) < 0.8) return best(tag);
    return random_rule(rng);
  }
};

// Input sampling and scoring shared by the single-run and Monte-Carlo paths.
class Harness {
 public:
  Harness(const GameSpec& spec, const SimConfig& config) : spec_(spec) {
    if (config.trials < 0) throw InputError("trial count must be nonnegative");
    validate_game(spec);
    const auto marg = harness_marginals(spec, config.bias, config.policy);
    const Dims& d = spec.dims;
    if (marg.empty()) {
      double acc = 0.0;
      for (double p : spec.input_distribution) cum_joint_.push_back(acc += p);
      cum_joint_.back() = 2.0;
    } else {
      for (const auto& m : marg) {
        std::vector<double> c;
        double acc = 0.0;
        for (double p : m) c.push_back(acc += p);
        c.back() = 2.0;
        cum_site_.push_back(std::move(c));
      }
      stride_.assign(d.sites(), 1);
      for (std::size_t k = d.sites(); k-- > 1;) stride_[k - 1] = stride_[k] * static_cast<std::size_t>(d.inputs[k]);
    }
    nout_ = d.output_tuples();
    top_ = spec.max_score();
    max_attempts_ = config.max_attempts > 0 ? config.max_attempts : 1000 * config.trials + 1000;
  }

  std::size_t draw_inputs(Rng& rng) const {
    if (!cum_joint_.empty()) return pick(cum_joint_, uniform01(rng));
    std::size_t idx = 0;
    for (std::size_t k = 0; k < cum_site_.size(); ++k) idx += stride_[k] * pick(cum_site_[k], uniform01(rng));
    return idx;
  }

  // Runs one experiment; `record` receives (attempt, tag, input, output-or-npos).
  template <typename Record>
  std::int64_t run(LhvmStrategy& s, std::int64_t trials, Rng& input_rng, Rng& strategy_rng, Record&& record) const {
    s.reset();
    std::int64_t wins = 0;
    std::int64_t done = 0;
    for (std::int64_t attempt = 0; done < trials; ++attempt) {
      if (attempt >= max_attempts_)
        throw CapExceededError("strategy produced too few trials within " + std::to_string(max_attempts_) +
                               " attempts");
      const Tag tag = s.herald(strategy_rng);
      const std::size_t in = draw_inputs(input_rng);
      if (tag == kNullTag) {
        record(attempt, tag, in, static_cast<std::size_t>(-1));
        s.observe({kNullTag, false, 0.0});
        continue;
      }
      const std::size_t t = spec_.tag_index(tag);
      const std::size_t out = s.respond(tag, strategy_rng).output_index(in);
      const double score = spec_.scores[t][in * nout_ + out];
      const bool won = score == top_;
      wins += static_cast<std::int64_t>(won);
      ++done;
      record(attempt, tag, in, out);
      s.observe({tag, won, score});
    }
    return wins;
  }

 private:
  // Counts thresholds below u; branch-free since u is random.
  static std::size_t pick(const std::vector<double>& cum, double u) {
    std::size_t i = 0;
    for (std::size_t j = 0; j + 1 < cum.size(); ++j) i += static_cast<std::size_t>(u >= cum[j]);
    return i;
  }

  const GameSpec& spec_;
  std::vector<double> cum_joint_;
  std::vector<std::vector<double>> cum_site_;
  std::vector<std::size_t> stride_;
  std::size_t nout_ = 0;
  double top_ = 0.0;
  std::int64_t max_attempts_ = 0;
};

void seed_replica(std::uint64_t seed, std::uint64_t replica, Rng& input_rng, Rng& strategy_rng) {
  const std::uint64_t s = splitmix64(seed + kGolden * (replica + 1));
  input_rng.seed(s);
  strategy_rng.seed(splitmix64(s ^ kStrategyStream));
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

LocalRule::LocalRule(const Dims& dims, DeterministicStrategy strategy)
    : strategy_(std::move(strategy)), joint_(strategy_.response_table(dims)) {}

std::vector<std::string> strategy_names() { return {"optimal", "random", "switcher", "herald", "hedged"}; }

std::unique_ptr<LhvmStrategy> make_strategy(const std::string& name, const GameSpec& spec, const BiasBound& bias,
                                            std::uint64_t cap) {
  const auto names = strategy_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw InputError("unknown strategy '" + name + "'");
  auto book = build_rulebook(spec, bias, cap);
  if (name == "optimal") return std::make_unique<OptimalStrategy>(book);
  if (name == "random") return std::make_unique<RandomStrategy>(book);
  if (name == "switcher") return std::make_unique<SwitcherStrategy>(book);
  if (name == "herald") return std::make_unique<HeraldStrategy>(book);
  return std::make_unique<HedgedStrategy>(book);
}

std::unique_ptr<LhvmStrategy> optimal_memoryless_strategy(const GameSpec& spec, const BiasBound& bias,
                                                          std::uint64_t cap) {
  return make_strategy("optimal", spec, bias, cap);
}

std::vector<std::vector<double>> harness_marginals(const GameSpec& spec, const BiasBound& bias, BiasPolicy policy,
                                                   std::uint64_t cap) {
  check_bias(bias, spec);
  const bool product = is_product_distribution(spec);
  if (!bias.is_zero() && !product) throw InputError("a nonzero bias bound needs a product input distribution");
  if (bias.is_zero() || policy == BiasPolicy::target) return product ? site_marginals(spec) : std::vector<std::vector<double>>{};
  if (spec.kind != GameKind::win_lose)
    throw InputError("the worst-case bias corner is only defined for win/lose games; use the target policy");
  return beta_win_optimize(spec, bias, cap).marginals;
}

ExperimentData run_lhvm(const LhvmStrategy& strategy, const GameSpec& spec, const SimConfig& config) {
  const Harness harness(spec, config);
  auto s = strategy.clone();
  Rng input_rng;
  Rng strategy_rng;
  seed_replica(config.seed, 0, input_rng, strategy_rng);
  const Dims& d = spec.dims;
  ExperimentData data;
  harness.run(*s, config.trials, input_rng, strategy_rng,
              [&](std::int64_t attempt, Tag tag, std::size_t in, std::size_t out) {
                TrialRecord r;
                r.index = static_cast<std::uint64_t>(attempt);
                r.tag = tag;
                r.inputs = d.decode_inputs(in);
                if (out != static_cast<std::size_t>(-1)) r.outputs = d.decode_outputs(out);
                data.records.push_back(std::move(r));
              });
  return data;
}

std::vector<std::uint64_t> mc_win_histogram(const LhvmStrategy& strategy, const GameSpec& spec,
                                            const SimConfig& config) {
  if (config.replicas < 1) throw InputError("need at least one replica");
  const Harness harness(spec, config);
  const auto replicas = static_cast<std::uint64_t>(config.replicas);
  unsigned threads = config.threads != 0 ? config.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, replicas));

  std::vector<std::uint64_t> total(static_cast<std::size_t>(config.trials) + 1, 0);
  std::mutex merge;
  std::exception_ptr failure;
  auto work = [&](std::uint64_t begin, std::uint64_t end) {
    try {
      std::vector<std::uint64_t> local(total.size(), 0);
      auto s = strategy.clone();
      Rng input_rng;
      Rng strategy_rng;
      for (std::uint64_t r = begin; r < end; ++r) {
        seed_replica(config.seed, r, input_rng, strategy_rng);
        const auto wins =
            harness.run(*s, config.trials, input_rng, strategy_rng, [](std::int64_t, Tag, std::size_t, std::size_t) {});
        ++local[static_cast<std::size_t>(wins)];
      }
      const std::lock_guard lock(merge);
      for (std::size_t i = 0; i < total.size(); ++i) total[i] += local[i];
    } catch (...) {
      const std::lock_guard lock(merge);
      if (!failure) failure = std::current_exception();
    }
  };
  if (threads <= 1) {
    work(0, replicas);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back(work, replicas * t / threads, replicas * (t + 1) / threads);
  }
  if (failure) std::rethrow_exception(failure);
  return total;
}

TailEstimate tail_from_histogram(const std::vector<std::uint64_t>& histogram, std::int64_t c) {
  std::uint64_t total = 0;
  std::uint64_t hits = 0;
  for (std::size_t w = 0; w < histogram.size(); ++w) {
    total += histogram[w];
    if (static_cast<std::int64_t>(w) >= c) hits += histogram[w];
  }
  if (total == 0) throw InputError("empty histogram");
  const double p = static_cast<double>(hits) / static_cast<double>(total);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(total))};
}

TailEstimate mc_tail_estimate(const LhvmStrategy& strategy, const GameSpec& spec, const BiasBound& bias,
                              std::int64_t n, std::int64_t c, std::int64_t replicas, std::uint64_t seed) {
  if (replicas < 1000) throw InputError("Monte-Carlo tail estimates need at least 1000 replicas");
  SimConfig config;
  config.seed = seed;
  config.replicas = replicas;
  config.trials = n;
  config.bias = bias;
  return tail_from_histogram(mc_win_histogram(strategy, spec, config), c);
}

double exact_tail_iid(double beta, std::int64_t n, std::int64_t c) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw InputError("beta must lie in [0, 1]");
  if (n < 0) throw InputError("trial count must be nonnegative");
  if (n > 25) throw CapExceededError("exact_tail_iid supports n <= 25");
  if (c <= 0) return 1.0;
  if (c > n) return 0.0;
  std::vector<double> dist(static_cast<std::size_t>(n) + 1, 0.0);
  dist[0] = 1.0;
  for (std::int64_t t = 0; t < n; ++t)
    for (std::size_t w = static_cast<std::size_t>(t) + 1; w-- > 0;) {
      dist[w + 1] += beta * dist[w];
      dist[w] *= 1.0 - beta;
    }
  double tail = 0.0;
  for (std::int64_t w = n; w >= std::max<std::int64_t>(c, 0); --w) tail += dist[static_cast<std::size_t>(w)];
  return std::min(tail, 1.0);
}

double adversarial_memory_search(const GameSpec& spec, std::int64_t n, std::int64_t c, std::uint64_t cap) {
  if (spec.kind != GameKind::win_lose) throw InputError("memory search needs a win/lose game");
  if (spec.tags.size() != 1) throw InputError("memory search supports single-tag games");
  if (n < 0) throw InputError("trial count must be nonnegative");
  if (c <= 0) return 1.0;
  if (c > n) return 0.0;

  const Dims& d = spec.dims;
  const std::size_t nin = d.input_tuples();
  const std::size_t nout = d.output_tuples();
  const std::uint64_t nstrat = strategy_count(d);
  // Work is one strategy scan per internal history node.
  double nodes = 0.0;
  for (std::int64_t t = 0; t < n; ++t) nodes += std::pow(static_cast<double>(nin * nout), static_cast<double>(t));
  if (nodes * static_cast<double>(nstrat) > static_cast<double>(cap))
    throw CapExceededError("memory strategy space exceeds the cap of " + std::to_string(cap));

  std::vector<std::vector<std::size_t>> responses;
  for_each_strategy(d, cap, [&](std::uint64_t, const DeterministicStrategy&, std::span<const std::size_t> r) {
    responses.emplace_back(r.begin(), r.end());
  });
  const double top = spec.max_score();
  const auto& table = spec.scores[0];
  const auto& p = spec.input_distribution;

  // Each call is one history node; children are all (input, output) extensions.
  auto node = [&](auto&& self, std::int64_t t, std::int64_t wins) -> double {
    if (wins >= c) return 1.0;
    if (wins + (n - t) < c) return 0.0;
    std::vector<double> child(nin * nout, 0.0);
    for (std::size_t i = 0; i < nin; ++i) {
      if (p[i] == 0.0) continue;
      for (std::size_t o = 0; o < nout; ++o)
        child[i * nout + o] = self(self, t + 1, wins + (table[i * nout + o] == top ? 1 : 0));
    }
    double best = 0.0;
    for (const auto& r : responses) {
      double v = 0.0;
      for (std::size_t i = 0; i < nin; ++i) v += p[i] * child[i * nout + r[i]];
      best = std::max(best, v);
    }
    return best;
  };
  return node(node, 0, 0);
}

}  // namespace bellcert
