#include "bellcert/general.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "bellcert/tails.hpp"
#include "numeric.hpp"

namespace bellcert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

PValueReport base_report(Method method, const GeneralGameParams& params, std::int64_t n, double statistic) {
  PValueReport r;
  r.method = method;
  r.n = n;
  r.statistic = statistic;
  r.params = params;
  return r;
}

PValueReport no_evidence(PValueReport r, const std::string& why) {
  r.p_value = 1.0;
  r.raw_p_value = 1.0;
  r.log_p_value = 0.0;
  r.precondition_failed = true;
  r.note = why;
  return r;
}

// Exact extremes of one site's marginal over the bias box intersected with the simplex.
void marginal_extremes(const std::vector<double>& p, double tau, std::vector<double>& lo, std::vector<double>& hi) {
  const std::size_t m = p.size();
  std::vector<double> blo(m), bhi(m);
  double sum_lo = 0.0;
  double sum_hi = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    blo[i] = std::max(0.0, p[i] - tau);
    bhi[i] = std::min(1.0, p[i] + tau);
    sum_lo += blo[i];
    sum_hi += bhi[i];
  }
  lo.resize(m);
  hi.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    lo[i] = std::max(blo[i], 1.0 - (sum_hi - bhi[i]));
    hi[i] = std::min(bhi[i], 1.0 - (sum_lo - blo[i]));
  }
}

}  // namespace

void validate_params(const GeneralGameParams& p) {
  if (!(std::isfinite(p.s_min) && std::isfinite(p.s_max) && p.s_min < p.s_max))
    throw InputError("score range needs s_min < s_max");
  if (!(p.s_min <= p.beta_min && p.beta_min <= p.beta_max && p.beta_max <= p.s_max))
    throw InputError("classical bounds must satisfy s_min <= beta_min <= beta_max <= s_max");
}

GeneralGameParams game_params(const GameSpec& spec, const BiasBound& bias, double beta_max, double beta_min) {
  check_bias(bias, spec);
  const Dims& dims = spec.dims;
  const std::size_t nin = dims.input_tuples();
  const std::size_t nout = dims.output_tuples();
  double smin = kInf;
  double smax = -kInf;

  if (bias.is_zero()) {
    for (std::size_t t = 0; t < spec.tags.size(); ++t)
      for (std::size_t i = 0; i < nin; ++i) {
        if (spec.input_distribution[i] <= 0.0) continue;
        for (std::size_t o = 0; o < nout; ++o) {
          smin = std::min(smin, spec.scores[t][i * nout + o]);
          smax = std::max(smax, spec.scores[t][i * nout + o]);
        }
      }
  } else {
    if (!is_product_distribution(spec)) throw InputError("a nonzero bias bound needs a product input distribution");
    const auto marg = site_marginals(spec);
    std::vector<std::vector<double>> lo(dims.sites()), hi(dims.sites());
    for (std::size_t k = 0; k < dims.sites(); ++k) marginal_extremes(marg[k], bias.for_site(k), lo[k], hi[k]);
    for (std::size_t i = 0; i < nin; ++i) {
      const auto x = dims.decode_inputs(i);
      double pmin = 1.0;
      double pmax = 1.0;
      for (std::size_t k = 0; k < dims.sites(); ++k) {
        pmin *= lo[k][static_cast<std::size_t>(x[k])];
        pmax *= hi[k][static_cast<std::size_t>(x[k])];
      }
      const double p = spec.input_distribution[i];
      for (std::size_t t = 0; t < spec.tags.size(); ++t)
        for (std::size_t o = 0; o < nout; ++o) {
          // The inequality coefficient s p(x) is fixed; the effective score
          // coef / q(x) moves with the biased probability q(x).
          const double coef = spec.scores[t][i * nout + o] * p;
          double a = 0.0;
          double b = 0.0;
          if (coef != 0.0) {
            if (!(pmin > 0.0))
              throw PreconditionError("an input probability can reach 0 inside the bias box; scores are unbounded");
            a = coef / pmax;
            b = coef / pmin;
          }
          smin = std::min({smin, a, b});
          smax = std::max({smax, a, b});
        }
    }
  }

  GeneralGameParams out;
  out.s_min = smin;
  out.s_max = smax;
  out.beta_max = beta_max;
  out.beta_min = beta_min;
  validate_params(out);
  out.affine.scale = 1.0 / (smax - smin);
  out.affine.offset = 0.0 - smin * out.affine.scale;
  return out;
}

PValueReport bentkus_pvalue(const GeneralGameParams& params, std::span<const double> per_trial_scores) {
  validate_params(params);
  const double range = params.s_max - params.s_min;
  const double tol = 1e-12 * range;
  detail::CompensatedSum delta;
  for (double s : per_trial_scores) {
    if (!(s >= params.s_min - tol && s <= params.s_max + tol))
      throw InputError("trial score " + std::to_string(s) + " lies outside [s_min, s_max]");
    delta.add((s - params.s_min) / range);
  }
  const auto n = static_cast<std::int64_t>(per_trial_scores.size());
  PValueReport r = base_report(Method::bentkus, params, n, 0.0);
  const double d = std::clamp(delta.value(), 0.0, static_cast<double>(n));
  r.statistic = d;
  const double g = std::clamp(params.gamma_hat(), 0.0, 1.0);
  const TailResult tail = interp_binom_tail(n, d, g);
  set_p_from_log(r, 1.0 + tail.log_value);
  return r;
}

PValueReport bentkus_pvalue_total(const GeneralGameParams& params, std::int64_t n, double total_score) {
  validate_params(params);
  if (n < 0) throw InputError("trial count must be nonnegative");
  const double range = params.s_max - params.s_min;
  const double dn = static_cast<double>(n);
  const double delta = (total_score - dn * params.s_min) / range;
  if (!(delta >= -1e-12 * dn && delta <= dn * (1.0 + 1e-12)))
    throw InputError("total score lies outside [n s_min, n s_max]");
  PValueReport r = base_report(Method::bentkus, params, n, std::clamp(delta, 0.0, dn));
  const TailResult tail = interp_binom_tail(n, r.statistic, std::clamp(params.gamma_hat(), 0.0, 1.0));
  set_p_from_log(r, 1.0 + tail.log_value);
  return r;
}

PValueReport mcdiarmid_pvalue(const GeneralGameParams& params, double total_score, std::int64_t n) {
  validate_params(params);
  if (n < 0) throw InputError("trial count must be nonnegative");
  PValueReport r = base_report(Method::mcdiarmid, params, n, total_score);
  if (n == 0) return no_evidence(r, "no trials");
  const double range = params.s_max - params.s_min;
  const double q = total_score / static_cast<double>(n);
  if (q > params.s_max + 1e-12 * range || q < params.s_min - 1e-12 * range)
    throw InputError("average score lies outside [s_min, s_max]");
  if (q < params.beta_max) return no_evidence(r, "average score below beta_max");
  const double t = std::clamp((q - params.s_min) / range, 0.0, 1.0);
  const double g = std::clamp(params.gamma_hat(), 0.0, 1.0);
  // n [ (1-t) log((1-g)/(1-t)) + t log(g/t) ], with 0 log(./0) = 0.
  double per = 0.0;
  if (t < 1.0) per += (1.0 - t) * (std::log1p(-g) - std::log1p(-t));
  if (t > 0.0) per += t * (std::log(g) - std::log(t));
  set_p_from_log(r, static_cast<double>(n) * std::min(per, 0.0));
  return r;
}

double azuma_d(const GeneralGameParams& params, const AzumaOptions& options) {
  if (options.d) {
    if (!(*options.d > 0.0 && std::isfinite(*options.d))) throw InputError("Azuma d must be positive");
    return *options.d;
  }
  const double up = params.beta_max - params.s_min;
  const double other = options.mode == AzumaMode::symmetric ? params.s_max - params.beta_max
                                                            : params.s_min - params.beta_min;
  return std::max(up, other);
}

PValueReport azuma_pvalue(const GeneralGameParams& params, double total_score, std::int64_t n,
                          const AzumaOptions& options) {
  validate_params(params);
  if (n < 0) throw InputError("trial count must be nonnegative");
  PValueReport r = base_report(Method::azuma, params, n, total_score);
  if (options.mode == AzumaMode::printed && !options.d) r.note = "printed increment range";
  if (n == 0) return no_evidence(r, "no trials");
  const double q = total_score / static_cast<double>(n);
  if (q < params.beta_max) return no_evidence(r, "average score below beta_max");
  const double d = azuma_d(params, options);
  if (!(d > 0.0)) return no_evidence(r, "Azuma increment range is not positive");
  const double gap = q - params.beta_max;
  set_p_from_log(r, -static_cast<double>(n) * gap * gap / (2.0 * d * d));
  return r;
}

}  // namespace bellcert
