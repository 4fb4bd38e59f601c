#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "bellcert/core.hpp"

namespace bellcert {

enum class Method { binomial, bentkus, mcdiarmid, azuma, gaussian_nonrigorous };

enum class BetaProvenance { analytic_chsh, enumeration, user_supplied };

const char* to_string(Method method);
const char* to_string(BetaProvenance provenance);

struct WinLoseBound {
  double beta_win = 0.0;
  BetaProvenance provenance = BetaProvenance::user_supplied;
  BiasBound bias;
};

/// Score range and classical bounds entering the martingale bounds.
struct GeneralGameParams {
  double s_min = 0.0;
  double s_max = 1.0;
  double beta_max = 0.0;
  double beta_min = 0.0;
  Affine affine;  // map from original scores onto [0, 1]

  double gamma_hat() const { return (beta_max - s_min) / (s_max - s_min); }
};

struct PValueReport {
  Method method = Method::binomial;
  std::int64_t n = 0;
  double statistic = 0.0;  // c for binomial/gaussian, delta for bentkus, total score otherwise
  std::variant<WinLoseBound, GeneralGameParams> params;
  double p_value = 1.0;      // capped at 1
  double raw_p_value = 1.0;  // before capping
  double log_p_value = 0.0;  // log of raw_p_value
  bool certifying = true;
  bool precondition_failed = false;
  std::string note;
};

/// Fills p_value and log_p_value from a raw value given in log space.
void set_p_from_log(PValueReport& report, double log_raw);

}  // namespace bellcert
