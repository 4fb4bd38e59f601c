#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace bellcert::cli {

enum ExitCode : int {
  kOk = 0,
  kInternalError = 1,
  kInputError = 2,
  kPreconditionFailed = 3,
  kCapExceeded = 4,
};

/// Runs the command line `args` (without the program name). Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Strategy enumeration cap: BELLCERT_CAP if set, else the library default.
std::uint64_t resolve_cap();

/// printf("%.10g") with "inf", "-inf" and "nan" spelled out.
std::string format_number(double value);

}  // namespace bellcert::cli
