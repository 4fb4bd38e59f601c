#include <algorithm>
#include <cmath>
#include <limits>

#include "bellcert/core.hpp"
#include "bellcert/lp.hpp"

namespace bellcert {

const char* to_string(LPStatus status) {
  switch (status) {
    case LPStatus::optimal: return "optimal";
    case LPStatus::infeasible: return "infeasible";
    case LPStatus::unbounded: return "unbounded";
    case LPStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-10;
constexpr double kCostTol = 1e-9;
constexpr double kZero = 1e-14;

// How one original variable is expressed through standard-form columns.
struct VarMap {
  enum class Kind { shifted, mirrored, split } kind = Kind::shifted;
  std::size_t col = 0;  // z, or z+ for split (z- is col + 1)
  double base = 0.0;    // lo for shifted, hi for mirrored
};

class Tableau {
 public:
  Tableau(std::vector<std::vector<double>> a, std::vector<double> b, std::size_t first_artificial)
      : t_(std::move(a)), b_(std::move(b)), first_art_(first_artificial) {
    const std::size_t m = b_.size();
    basis_.resize(m);
    for (std::size_t i = 0; i < m; ++i) basis_[i] = first_art_ + i;
    ncols_ = m == 0 ? first_art_ : t_[0].size();
  }

  std::size_t rows() const { return b_.size(); }
  std::size_t cols() const { return ncols_; }
  bool is_artificial(std::size_t j) const { return j >= first_art_; }

  enum class Outcome { optimal, unbounded, stalled };

  // Maximizes cost.z over the current feasible basis; artificial columns
  // may enter only if `allow_artificial`.
  Outcome optimize(const std::vector<double>& cost, bool allow_artificial, std::size_t& iterations) {
    const std::size_t m = rows();
    const std::size_t bland_after = 2 * (m + ncols_);
    const std::size_t limit = 50 * (m + ncols_) + 1000;
    std::vector<double> d(ncols_);
    for (std::size_t j = 0; j < ncols_; ++j) {
      double v = cost[j];
      for (std::size_t i = 0; i < m; ++i) v -= cost[basis_[i]] * t_[i][j];
      d[j] = v;
    }
    for (std::size_t local = 0;; ++local) {
      const bool bland = local >= bland_after;
      std::size_t q = ncols_;
      double best = kCostTol;
      for (std::size_t j = 0; j < ncols_; ++j) {
        if (!allow_artificial && is_artificial(j)) continue;
        if (d[j] > best) {
          q = j;
          if (bland) break;
          best = d[j];
        }
      }
      if (q == ncols_) return Outcome::optimal;
      if (local >= limit) return Outcome::stalled;

      std::size_t r = m;
      double ratio = kInf;
      for (std::size_t i = 0; i < m; ++i) {
        const double a = t_[i][q];
        if (a <= kPivotTol) continue;
        const double v = std::max(b_[i], 0.0) / a;
        if (r == m || v < ratio - 1e-12) {
          r = i;
          ratio = v;
        } else if (v <= ratio + 1e-12 && (bland ? basis_[i] < basis_[r] : a > t_[r][q])) {
          r = i;
          ratio = std::min(ratio, v);
        }
      }
      if (r == m) return Outcome::unbounded;
      pivot(r, q, &d);
      ++iterations;
    }
  }

  void pivot(std::size_t r, std::size_t q, std::vector<double>* d) {
    const std::size_t m = rows();
    auto& pr = t_[r];
    const double inv = 1.0 / pr[q];
    for (double& v : pr) v *= inv;
    b_[r] *= inv;
    pr[q] = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == r) continue;
      const double f = t_[i][q];
      if (f == 0.0) continue;
      auto& row = t_[i];
      for (std::size_t j = 0; j < ncols_; ++j) {
        row[j] -= f * pr[j];
        if (std::fabs(row[j]) < kZero) row[j] = 0.0;
      }
      row[q] = 0.0;
      b_[i] -= f * b_[r];
      if (std::fabs(b_[i]) < kZero) b_[i] = 0.0;
    }
    if (d != nullptr) {
      const double f = (*d)[q];
      for (std::size_t j = 0; j < ncols_; ++j) (*d)[j] -= f * pr[j];
      (*d)[q] = 0.0;
    }
    basis_[r] = q;
  }

  // Pivots basic artificials out where possible; rows where that fails are
  // redundant and keep their artificial at zero.
  void expel_artificials() {
    for (std::size_t r = 0; r < rows(); ++r) {
      if (!is_artificial(basis_[r])) continue;
      std::size_t q = ncols_;
      double best = 1e-9;
      for (std::size_t j = 0; j < first_art_; ++j) {
        if (std::fabs(t_[r][j]) > best) {
          best = std::fabs(t_[r][j]);
          q = j;
        }
      }
      if (q != ncols_) pivot(r, q, nullptr);
    }
  }

  // u = c_B B^{-1}, read off the artificial columns.
  std::vector<double> duals(const std::vector<double>& cost) const {
    const std::size_t m = rows();
    std::vector<double> u(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      const double cb = cost[basis_[k]];
      if (cb == 0.0) continue;
      for (std::size_t i = 0; i < m; ++i) u[i] += cb * t_[k][first_art_ + i];
    }
    return u;
  }

  std::vector<double> solution() const {
    std::vector<double> z(ncols_, 0.0);
    for (std::size_t i = 0; i < rows(); ++i) z[basis_[i]] = b_[i];
    return z;
  }

 private:
  std::vector<std::vector<double>> t_;
  std::vector<double> b_;
  std::vector<std::size_t> basis_;
  std::size_t first_art_;
  std::size_t ncols_;
};

void check_problem(const LPProblem& p) {
  const std::size_t n = p.variables();
  if (p.rows.size() != p.senses.size() || p.rows.size() != p.rhs.size())
    throw InputError("LP: rows, senses and rhs must have equal length");
  for (const auto& row : p.rows)
    if (row.size() != n) throw InputError("LP: constraint row has the wrong number of coefficients");
  if (!p.lower.empty() && p.lower.size() != n) throw InputError("LP: lower bounds have the wrong length");
  if (!p.upper.empty() && p.upper.size() != n) throw InputError("LP: upper bounds have the wrong length");
  for (double c : p.objective)
    if (!std::isfinite(c)) throw InputError("LP: objective must be finite");
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    if (!std::isfinite(p.rhs[i])) throw InputError("LP: right-hand side must be finite");
    for (double a : p.rows[i])
      if (!std::isfinite(a)) throw InputError("LP: constraint coefficients must be finite");
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = p.lower.empty() ? 0.0 : p.lower[j];
    const double hi = p.upper.empty() ? kInf : p.upper[j];
    if (std::isnan(lo) || std::isnan(hi) || lo == kInf || hi == -kInf)
      throw InputError("LP: invalid variable bound");
  }
}

}  // namespace

LPSolution simplex_solve(const LPProblem& problem) {
  check_problem(problem);
  const std::size_t n = problem.variables();
  LPSolution out;

  // Express every variable through nonnegative columns.
  std::vector<VarMap> vars(n);
  std::size_t ncol = 0;
  struct BoundRow {
    std::size_t col;
    double width;
  };
  std::vector<BoundRow> bound_rows;
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = problem.lower.empty() ? 0.0 : problem.lower[j];
    const double hi = problem.upper.empty() ? kInf : problem.upper[j];
    if (lo > hi) {
      out.status = LPStatus::infeasible;
      out.diagnostics = "variable " + std::to_string(j) + " has lower bound above upper bound";
      return out;
    }
    if (std::isfinite(lo)) {
      vars[j] = {VarMap::Kind::shifted, ncol++, lo};
      if (std::isfinite(hi)) bound_rows.push_back({vars[j].col, hi - lo});
    } else if (std::isfinite(hi)) {
      vars[j] = {VarMap::Kind::mirrored, ncol++, hi};
    } else {
      vars[j] = {VarMap::Kind::split, ncol, 0.0};
      ncol += 2;
    }
  }
  const std::size_t nstruct = ncol;
  const std::size_t m_orig = problem.rows.size();
  const std::size_t m = m_orig + bound_rows.size();

  std::vector<std::vector<double>> a(m, std::vector<double>(nstruct, 0.0));
  std::vector<double> b(m, 0.0);
  std::vector<Sense> sense(m, Sense::le);
  for (std::size_t i = 0; i < m_orig; ++i) {
    double rhs = problem.rhs[i];
    for (std::size_t j = 0; j < n; ++j) {
      const double c = problem.rows[i][j];
      if (c == 0.0) continue;
      switch (vars[j].kind) {
        case VarMap::Kind::shifted:
          a[i][vars[j].col] += c;
          rhs -= c * vars[j].base;
          break;
        case VarMap::Kind::mirrored:
          a[i][vars[j].col] -= c;
          rhs -= c * vars[j].base;
          break;
        case VarMap::Kind::split:
          a[i][vars[j].col] += c;
          a[i][vars[j].col + 1] -= c;
          break;
      }
    }
    b[i] = rhs;
    sense[i] = problem.senses[i];
  }
  for (std::size_t k = 0; k < bound_rows.size(); ++k) {
    a[m_orig + k][bound_rows[k].col] = 1.0;
    b[m_orig + k] = bound_rows[k].width;
  }

  // Slack and surplus columns, then one artificial per row.
  std::size_t nslack = 0;
  for (Sense s : sense)
    if (s != Sense::eq) ++nslack;
  const std::size_t first_art = nstruct + nslack;
  const std::size_t total = first_art + m;
  std::vector<double> flip(m, 1.0);
  std::size_t slack = nstruct;
  for (std::size_t i = 0; i < m; ++i) {
    a[i].resize(total, 0.0);
    if (sense[i] == Sense::le) a[i][slack++] = 1.0;
    else if (sense[i] == Sense::ge) a[i][slack++] = -1.0;
    if (b[i] < 0.0) {
      flip[i] = -1.0;
      for (std::size_t j = 0; j < first_art; ++j) a[i][j] = -a[i][j];
      b[i] = -b[i];
    }
    a[i][first_art + i] = 1.0;
  }

  double bscale = 1.0;
  for (double v : b) bscale = std::max(bscale, std::fabs(v));

  Tableau tab(std::move(a), std::move(b), first_art);

  // Phase 1: drive the artificials to zero.
  std::vector<double> cost1(total, 0.0);
  for (std::size_t i = 0; i < m; ++i) cost1[first_art + i] = -1.0;
  auto outcome = tab.optimize(cost1, true, out.iterations);
  if (outcome == Tableau::Outcome::stalled) {
    out.diagnostics = "phase 1 hit the iteration limit";
    return out;
  }
  {
    const auto z = tab.solution();
    double infeas = 0.0;
    for (std::size_t i = 0; i < m; ++i) infeas += z[first_art + i];
    if (infeas > 1e-9 * bscale) {
      out.status = LPStatus::infeasible;
      const auto u = tab.duals(cost1);
      out.duals.resize(m);
      for (std::size_t i = 0; i < m; ++i) out.duals[i] = u[i] * flip[i];
      out.diagnostics = "phase 1 residual " + std::to_string(infeas);
      return out;
    }
  }
  tab.expel_artificials();

  // Phase 2 on the original objective, in maximization form.
  const double sign = problem.maximize ? 1.0 : -1.0;
  std::vector<double> cost2(total, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double c = sign * problem.objective[j];
    switch (vars[j].kind) {
      case VarMap::Kind::shifted: cost2[vars[j].col] = c; break;
      case VarMap::Kind::mirrored: cost2[vars[j].col] = -c; break;
      case VarMap::Kind::split:
        cost2[vars[j].col] = c;
        cost2[vars[j].col + 1] = -c;
        break;
    }
  }
  outcome = tab.optimize(cost2, false, out.iterations);
  if (outcome == Tableau::Outcome::stalled) {
    out.diagnostics = "phase 2 hit the iteration limit";
    return out;
  }
  if (outcome == Tableau::Outcome::unbounded) {
    out.status = LPStatus::unbounded;
    return out;
  }

  const auto z = tab.solution();
  out.x.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    switch (vars[j].kind) {
      case VarMap::Kind::shifted: out.x[j] = vars[j].base + z[vars[j].col]; break;
      case VarMap::Kind::mirrored: out.x[j] = vars[j].base - z[vars[j].col]; break;
      case VarMap::Kind::split: out.x[j] = z[vars[j].col] - z[vars[j].col + 1]; break;
    }
  }
  double obj = 0.0;
  for (std::size_t j = 0; j < n; ++j) obj += problem.objective[j] * out.x[j];
  out.objective = obj;
  const auto u = tab.duals(cost2);
  out.duals.resize(m);
  for (std::size_t i = 0; i < m; ++i) out.duals[i] = u[i] * flip[i];
  out.status = LPStatus::optimal;
  return out;
}

}  // namespace bellcert
