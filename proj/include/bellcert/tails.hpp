#pragma once

#include <cstdint>
#include <span>

namespace bellcert {

/// A probability together with its natural log; `log_value` stays finite
/// when `value` underflows.
struct TailResult {
  double value = 0.0;
  double log_value = 0.0;
};

/// log of C(n,k) g^k (1-g)^(n-k), accurate to a few ulps (saddle-point form).
double log_binom_pmf(std::int64_t n, std::int64_t k, double gamma);

/// P_{n,k}(B_gamma) = sum_{i=k}^{n} C(n,i) gamma^i (1-gamma)^(n-i).
/// Exactly 1 for k <= 0 and 0 for k > n.
TailResult binom_tail(std::int64_t n, std::int64_t k, double gamma);

/// Geometric interpolation of binom_tail between floor(y) and ceil(y).
TailResult interp_binom_tail(std::int64_t n, double y, double gamma);

/// Upper tail of the standard normal.
double gaussian_tail_q(double z);

/// Pr[chi^2_{2n} >= 2x] = e^{-x} sum_{i<n} x^i / i!.
double chi2_tail_even(std::int64_t n_pairs, double x);

struct FisherResult {
  double p_value = 1.0;
  double statistic = 0.0;  // -2 sum log p_i
  std::int64_t dof = 0;
  bool zero_input = false;  // some p_i was exactly 0
};

/// Fisher's combination of independent P-values.
FisherResult fisher_combine(std::span<const double> pvalues);

}  // namespace bellcert
