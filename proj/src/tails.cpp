#include "bellcert/tails.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "bellcert/core.hpp"
#include "numeric.hpp"

namespace bellcert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// lgamma(n+1) - (n+1/2) log n + n - log sqrt(2 pi), for n = 0..15.
constexpr double kStirlingError[16] = {
    0.0,
    0.08106146679532725822,
    0.041340695955409294094,
    0.027677925684998339149,
    0.020790672103765093112,
    0.016644691189821192163,
    0.013876128823070747999,
    0.011896709945891770095,
    0.010411265261972096497,
    0.0092554621827127329177,
    0.0083305634333628712565,
    0.007573675487951840795,
    0.0069428401072095298657,
    0.0064089941880042070684,
    0.0059513701127588477356,
    0.005554733551962801371,
};

double stirling_error(std::int64_t n) {
  if (n <= 15) return kStirlingError[n];
  constexpr double s0 = 1.0 / 12.0;
  constexpr double s1 = 1.0 / 360.0;
  constexpr double s2 = 1.0 / 1260.0;
  constexpr double s3 = 1.0 / 1680.0;
  constexpr double s4 = 1.0 / 1188.0;
  const double x = static_cast<double>(n);
  const double nn = x * x;
  if (n > 500) return (s0 - s1 / nn) / x;
  if (n > 80) return (s0 - (s1 - s2 / nn) / nn) / x;
  if (n > 35) return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / x;
  return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / x;
}

// x log(x/m) + m - x without cancellation when x is close to m.
double deviance(double x, double m) {
  if (std::fabs(x - m) < 0.1 * (x + m)) {
    double v = (x - m) / (x + m);
    double s = (x - m) * v;
    if (std::fabs(s) < std::numeric_limits<double>::min()) return s;
    double ej = 2.0 * x * v;
    v *= v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v;
      const double s1 = s + ej / (2 * j + 1);
      if (s1 == s) return s1;
      s = s1;
    }
    return s;
  }
  return x * std::log(x / m) + m - x;
}

void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InputError("gamma must lie in [0, 1]");
}

TailResult from_log(double log_value) { return TailResult{std::exp(log_value), log_value}; }

}  // namespace

double log_binom_pmf(std::int64_t n, std::int64_t k, double gamma) {
  check_gamma(gamma);
  if (k < 0 || k > n) return -kInf;
  const double q = 1.0 - gamma;
  if (gamma == 0.0) return k == 0 ? 0.0 : -kInf;
  if (gamma == 1.0) return k == n ? 0.0 : -kInf;
  const double dn = static_cast<double>(n);
  if (k == 0) return dn * std::log1p(-gamma);
  if (k == n) return dn * std::log(gamma);
  const double dk = static_cast<double>(k);
  const double lc = stirling_error(n) - stirling_error(k) - stirling_error(n - k) -
                    deviance(dk, dn * gamma) - deviance(dn - dk, dn * q);
  const double lf = std::log(2.0 * std::numbers::pi) + std::log(dk) + std::log1p(-dk / dn);
  return lc - 0.5 * lf;
}

TailResult binom_tail(std::int64_t n, std::int64_t k, double gamma) {
  check_gamma(gamma);
  if (n < 0) throw InputError("n must be nonnegative");
  if (k <= 0) return {1.0, 0.0};
  if (k > n) return {0.0, -kInf};
  if (gamma == 0.0) return {0.0, -kInf};
  if (gamma == 1.0) return {1.0, 0.0};

  const double odds = gamma / (1.0 - gamma);
  const double mean = static_cast<double>(n) * gamma;

  if (static_cast<double>(k) > mean) {
    // Terms decrease from i = k upward; sum them relative to the first one.
    const double lead = log_binom_pmf(n, k, gamma);
    detail::CompensatedSum acc;
    double t = 1.0;
    acc.add(t);
    for (std::int64_t i = k; i < n; ++i) {
      t *= static_cast<double>(n - i) / static_cast<double>(i + 1) * odds;
      acc.add(t);
      if (t < acc.value() * 1e-18) break;
    }
    return from_log(lead + std::log(acc.value()));
  }

  // Tail is at least about one half: subtract the lower tail, summed from
  // i = k-1 downward where terms decrease.
  const double lead = log_binom_pmf(n, k - 1, gamma);
  detail::CompensatedSum acc;
  double t = 1.0;
  acc.add(t);
  for (std::int64_t i = k - 1; i > 0; --i) {
    t *= static_cast<double>(i) / static_cast<double>(n - i + 1) / odds;
    acc.add(t);
    if (t < acc.value() * 1e-18) break;
  }
  const double lower = std::exp(lead + std::log(acc.value()));
  return TailResult{1.0 - lower, std::log1p(-lower)};
}

TailResult interp_binom_tail(std::int64_t n, double y, double gamma) {
  check_gamma(gamma);
  if (!(y >= 0.0 && y <= static_cast<double>(n))) throw InputError("y must lie in [0, n]");
  const double lo = std::floor(y);
  const double frac = y - lo;
  const auto k = static_cast<std::int64_t>(lo);
  const TailResult below = binom_tail(n, k, gamma);
  if (frac == 0.0) return below;
  const TailResult above = binom_tail(n, k + 1, gamma);
  if (above.value == 0.0 && std::isinf(above.log_value)) return {0.0, -kInf};
  return from_log((1.0 - frac) * below.log_value + frac * above.log_value);
}

double gaussian_tail_q(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double chi2_tail_even(std::int64_t n_pairs, double x) {
  if (n_pairs < 1) throw InputError("chi-squared tail needs at least one pair of degrees of freedom");
  if (!(x >= 0.0)) throw InputError("chi-squared statistic must be nonnegative");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  // log of e^{-x} x^i / i!, combined by log-sum-exp.
  std::vector<double> logs(static_cast<std::size_t>(n_pairs));
  const double lx = std::log(x);
  double peak = -kInf;
  for (std::int64_t i = 0; i < n_pairs; ++i) {
    const double l = static_cast<double>(i) * lx - std::lgamma(static_cast<double>(i) + 1.0) - x;
    logs[static_cast<std::size_t>(i)] = l;
    peak = std::max(peak, l);
  }
  detail::CompensatedSum acc;
  for (double l : logs) acc.add(std::exp(l - peak));
  return std::min(1.0, std::exp(peak + std::log(acc.value())));
}

FisherResult fisher_combine(std::span<const double> pvalues) {
  if (pvalues.empty()) throw InputError("need at least one P-value to combine");
  FisherResult out;
  out.dof = 2 * static_cast<std::int64_t>(pvalues.size());
  detail::CompensatedSum sum_log;
  for (double p : pvalues) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("P-values must lie in [0, 1]");
    if (p == 0.0) out.zero_input = true;
    else sum_log.add(std::log(p));
  }
  if (out.zero_input) {
    out.p_value = 0.0;
    out.statistic = kInf;
    return out;
  }
  const double x = -sum_log.value();
  out.statistic = 2.0 * x;
  // e^{-x} with x = -log p is p itself.
  out.p_value = pvalues.size() == 1 ? pvalues[0] : chi2_tail_even(static_cast<std::int64_t>(pvalues.size()), x);
  return out;
}

}  // namespace bellcert
