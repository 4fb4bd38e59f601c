#include "bellcert/report.hpp"

#include <cmath>

namespace bellcert {

const char* to_string(Method method) {
  switch (method) {
    case Method::binomial: return "binomial";
    case Method::bentkus: return "bentkus";
    case Method::mcdiarmid: return "mcdiarmid";
    case Method::azuma: return "azuma";
    case Method::gaussian_nonrigorous: return "gaussian_nonrigorous";
  }
  return "unknown";
}

const char* to_string(BetaProvenance provenance) {
  switch (provenance) {
    case BetaProvenance::analytic_chsh: return "analytic_chsh";
    case BetaProvenance::enumeration: return "enumeration";
    case BetaProvenance::user_supplied: return "user_supplied";
  }
  return "unknown";
}

void set_p_from_log(PValueReport& report, double log_raw) {
  report.log_p_value = log_raw;
  report.raw_p_value = std::exp(log_raw);
  report.p_value = log_raw >= 0.0 ? 1.0 : report.raw_p_value;
}

}  // namespace bellcert
