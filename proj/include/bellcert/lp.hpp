#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace bellcert {

enum class Sense { le, eq, ge };

enum class LPStatus { optimal, infeasible, unbounded, numerical_failure };

const char* to_string(LPStatus status);

/// maximize (or minimize) c.x subject to rows[i].x (sense) rhs[i] and
/// lower <= x <= upper. Empty bound vectors mean x >= 0 with no upper bound;
/// infinite entries are allowed in either bound vector.
struct LPProblem {
  std::vector<double> objective;
  std::vector<std::vector<double>> rows;
  std::vector<Sense> senses;
  std::vector<double> rhs;
  std::vector<double> lower;
  std::vector<double> upper;
  bool maximize = true;

  std::size_t variables() const { return objective.size(); }
};

/// `duals` has one entry per constraint row followed by one per finite upper
/// bound of a variable with a finite lower bound (in variable order).
///
/// When optimal, `duals` are the shadow prices of the maximization form:
/// nonnegative on <= rows, nonpositive on >= rows.
///
/// When infeasible, `duals` hold a Farkas certificate y: nonnegative on <=
/// rows, nonpositive on >= rows, y.A >= 0 on every nonnegative shifted
/// variable and y.b' < 0 with b' the shifted right-hand side. Certificates
/// are only emitted for problems whose variables have finite lower bounds.
struct LPSolution {
  LPStatus status = LPStatus::numerical_failure;
  double objective = 0.0;
  std::vector<double> x;
  std::vector<double> duals;
  std::size_t iterations = 0;
  std::string diagnostics;
};

/// Dense two-phase simplex. Dantzig pricing with a fallback to Bland's rule
/// once the iteration count passes 2 * (rows + columns).
LPSolution simplex_solve(const LPProblem& problem);

}  // namespace bellcert
