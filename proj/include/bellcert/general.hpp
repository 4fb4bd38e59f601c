#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "bellcert/core.hpp"
#include "bellcert/report.hpp"

namespace bellcert {

/// Score range under the worst input distribution in the bias box, with the
/// caller's classical bounds. At zero bias only cells with p(x) > 0 count.
GeneralGameParams game_params(const GameSpec& spec, const BiasBound& bias, double beta_max, double beta_min);

/// Checks the GeneralGameParams invariants.
void validate_params(const GeneralGameParams& params);

/// e * interp_binom_tail(n, delta, gamma_hat), delta = sum (c_i - s_min)/(s_max - s_min).
PValueReport bentkus_pvalue(const GeneralGameParams& params, std::span<const double> per_trial_scores);

/// Same bound from a (possibly fractional) total score over n trials.
PValueReport bentkus_pvalue_total(const GeneralGameParams& params, std::int64_t n, double total_score);

/// McDiarmid's bound for the total score c over n trials. Reports 1, flagged,
/// when c/n < beta_max.
PValueReport mcdiarmid_pvalue(const GeneralGameParams& params, double total_score, std::int64_t n);

enum class AzumaMode {
  symmetric,  // d = max{beta_max - s_min, s_max - beta_max}
  printed,    // d = max{beta_max - s_min, s_min - beta_min}
};

struct AzumaOptions {
  AzumaMode mode = AzumaMode::symmetric;
  std::optional<double> d;  // explicit increment range, overriding the mode
};

double azuma_d(const GeneralGameParams& params, const AzumaOptions& options);

/// exp(-n (c/n - beta_max)^2 / (2 d^2)). Reports 1, flagged, when c/n < beta_max.
PValueReport azuma_pvalue(const GeneralGameParams& params, double total_score, std::int64_t n,
                          const AzumaOptions& options = {});

}  // namespace bellcert
