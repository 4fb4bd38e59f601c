#pragma once

#include "bellcert/core.hpp"

namespace bellcert::games {

/// CHSH as a win/lose game: win iff x*y == a xor b, uniform inputs.
GameSpec chsh();

/// CHSH with the complementary winning condition x*y == a xor b xor 1.
GameSpec chsh_flipped();

/// Event-ready CHSH where tag 1 plays `chsh` and tag 2 plays `chsh_flipped`.
GameSpec chsh_two_state();

/// Three-party Mermin game under the even-parity promise.
GameSpec mermin();

/// CGLMP with d outputs as a general game; scores are the inequality
/// coefficients divided by p(x,y) = 1/4, with classical bound 2.
GameSpec cglmp(int d);

/// Every cell scores `value`.
GameSpec constant(const Dims& dims, double value);

Behavior uniform_behavior(const Dims& dims);
Behavior strategy_behavior(const Dims& dims, const DeterministicStrategy& strategy);

/// Perfectly correlated box with a xor b == x*y.
Behavior pr_box();

/// Quantum-optimal CHSH behavior: wins each setting with probability cos^2(pi/8).
Behavior tsirelson();

}  // namespace bellcert::games
