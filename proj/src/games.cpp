#include "bellcert/games.hpp"

#include <cmath>
#include <numbers>

namespace bellcert::games {

namespace {

GameSpec two_party_binary(const std::string& name, bool flipped) {
  GameSpec g;
  g.name = name;
  g.dims = Dims{{2, 2}, {2, 2}};
  g.tags = {1};
  g.input_distribution.assign(4, 0.25);
  std::vector<double> table(16);
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          const int target = flipped ? (a ^ b ^ 1) : (a ^ b);
          table[static_cast<std::size_t>((x * 2 + y) * 4 + a * 2 + b)] = (x * y == target) ? 1.0 : 0.0;
        }
  g.scores = {table};
  return validate_game(std::move(g));
}

}  // namespace

GameSpec chsh() { return two_party_binary("chsh", false); }

GameSpec chsh_flipped() { return two_party_binary("chsh-flipped", true); }

GameSpec chsh_two_state() {
  GameSpec g = chsh();
  g.name = "chsh-two-state";
  g.tags = {1, 2};
  g.scores.push_back(chsh_flipped().scores[0]);
  return validate_game(std::move(g));
}

GameSpec mermin() {
  GameSpec g;
  g.name = "mermin";
  g.dims = Dims{{2, 2, 2}, {2, 2, 2}};
  g.tags = {1};
  g.input_distribution.assign(8, 0.0);
  std::vector<double> table(64, 0.0);
  for (std::size_t i = 0; i < 8; ++i) {
    const auto x = g.dims.decode_inputs(i);
    if ((x[0] ^ x[1] ^ x[2]) != 0) continue;  // outside the promise
    g.input_distribution[i] = 0.25;
    const int want = (x[0] | x[1] | x[2]);
    for (std::size_t o = 0; o < 8; ++o) {
      const auto a = g.dims.decode_outputs(o);
      table[i * 8 + o] = ((a[0] ^ a[1] ^ a[2]) == want) ? 1.0 : 0.0;
    }
  }
  g.scores = {table};
  return validate_game(std::move(g));
}

GameSpec cglmp(int d) {
  if (d < 2) throw InputError("CGLMP needs d >= 2");
  GameSpec g;
  g.name = "cglmp-" + std::to_string(d);
  g.dims = Dims{{2, 2}, {d, d}};
  g.tags = {1};
  g.input_distribution.assign(4, 0.25);
  std::vector<double> table(static_cast<std::size_t>(4 * d * d), 0.0);
  auto mod = [d](int v) { return ((v % d) + d) % d; };
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          const int r = mod(b - a);
          double coeff = 0.0;
          for (int k = 0; k <= d / 2 - 1; ++k) {
            const double w = 1.0 - 2.0 * k / (d - 1);
            int plus = 0;
            int minus = 0;
            if (x == y) {
              plus = mod(-k);
              minus = mod(k + 1);
            } else if (x == 0) {
              plus = mod(k);
              minus = mod(-k - 1);
            } else {
              plus = mod(k + 1);
              minus = mod(-k);
            }
            if (r == plus) coeff += w;
            if (r == minus) coeff -= w;
          }
          table[static_cast<std::size_t>((x * 2 + y) * d * d + a * d + b)] = 4.0 * coeff;
        }
  g.scores = {table};
  return validate_game(std::move(g));
}

GameSpec constant(const Dims& dims, double value) {
  GameSpec g;
  g.name = "constant";
  g.dims = dims;
  g.tags = {1};
  g.input_distribution.assign(dims.input_tuples(), 1.0 / static_cast<double>(dims.input_tuples()));
  g.scores = {std::vector<double>(dims.cells(), value)};
  return validate_game(std::move(g));
}

Behavior uniform_behavior(const Dims& dims) {
  return Behavior{dims, std::vector<double>(dims.cells(), 1.0 / static_cast<double>(dims.output_tuples()))};
}

Behavior strategy_behavior(const Dims& dims, const DeterministicStrategy& strategy) {
  Behavior b{dims, std::vector<double>(dims.cells(), 0.0)};
  const std::size_t nout = dims.output_tuples();
  for (std::size_t i = 0; i < dims.input_tuples(); ++i) b.table[i * nout + strategy.output_index(dims, i)] = 1.0;
  return b;
}

Behavior pr_box() {
  Behavior b{Dims{{2, 2}, {2, 2}}, std::vector<double>(16, 0.0)};
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int bb = 0; bb < 2; ++bb)
          if ((a ^ bb) == x * y) b.table[static_cast<std::size_t>((x * 2 + y) * 4 + a * 2 + bb)] = 0.5;
  return b;
}

Behavior tsirelson() {
  const double c = std::cos(std::numbers::pi / 8.0);
  const double win = c * c;
  Behavior b{Dims{{2, 2}, {2, 2}}, std::vector<double>(16, 0.0)};
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int bb = 0; bb < 2; ++bb)
          b.table[static_cast<std::size_t>((x * 2 + y) * 4 + a * 2 + bb)] =
              ((a ^ bb) == x * y) ? win / 2.0 : (1.0 - win) / 2.0;
  return b;
}

}  // namespace bellcert::games
