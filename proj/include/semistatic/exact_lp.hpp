#pragma once

// Exact rational linear programming: a two-phase revised simplex method with
// Bland's smallest-index rule, returning strong-duality, Farkas or ray
// certificates that can be re-verified independently of the solver.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "semistatic/rational.hpp"

namespace semistatic {

enum class Relation { kLessEqual, kEqual, kGreaterEqual };
enum class Sense { kMaximize, kMinimize };
enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

inline const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    default: return "unbounded";
  }
}

/// Sparse linear form sum_j coeff_j * x_j.
struct LinearExpr {
  std::vector<std::pair<std::size_t, Rational>> terms;

  LinearExpr() = default;
  LinearExpr(std::size_t var, const Rational& coeff) { add(var, coeff); }

  LinearExpr& add(std::size_t var, const Rational& coeff) {
    if (sgn(coeff) != 0) terms.emplace_back(var, coeff);
    return *this;
  }
  LinearExpr& add(const LinearExpr& other, const Rational& scale = 1) {
    if (sgn(scale) == 0) return *this;
    for (const auto& [v, c] : other.terms) terms.emplace_back(v, c * scale);
    return *this;
  }
  Rational evaluate(const RationalVector& x) const {
    Rational s = 0;
    for (const auto& [v, c] : terms) s += c * x.at(v);
    return s;
  }
};

struct LpVariable {
  std::string name;
  std::optional<Rational> lower = Rational(0);
  std::optional<Rational> upper;
};

struct LpConstraint {
  std::string name;
  LinearExpr expr;
  Relation rel = Relation::kLessEqual;
  Rational rhs = 0;
};

class LpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LpProblem {
 public:
  Sense sense = Sense::kMaximize;
  std::vector<LpVariable> variables;
  RationalVector objective;
  std::vector<LpConstraint> constraints;

  std::size_t add_variable(std::string name, std::optional<Rational> lower = Rational(0),
                           std::optional<Rational> upper = std::nullopt, const Rational& cost = 0) {
    variables.push_back({std::move(name), std::move(lower), std::move(upper)});
    objective.push_back(cost);
    return variables.size() - 1;
  }
  std::size_t add_free_variable(std::string name, const Rational& cost = 0) {
    return add_variable(std::move(name), std::nullopt, std::nullopt, cost);
  }
  std::size_t add_constraint(LinearExpr expr, Relation rel, const Rational& rhs, std::string name = "") {
    if (name.empty()) name = "r" + std::to_string(constraints.size());
    constraints.push_back({std::move(name), std::move(expr), rel, rhs});
    return constraints.size() - 1;
  }
  std::size_t num_variables() const { return variables.size(); }
  void set_objective(const LinearExpr& e) {
    objective.assign(variables.size(), Rational(0));
    for (const auto& [v, c] : e.terms) objective.at(v) += c;
  }

  void validate() const {
    if (objective.size() != variables.size()) throw LpError("objective length differs from variable count");
    for (const auto& c : constraints) {
      for (const auto& [v, coef] : c.expr.terms) {
        if (v >= variables.size()) throw LpError("constraint '" + c.name + "' references unknown variable");
      }
    }
    for (const auto& v : variables) {
      if (v.lower && v.upper && *v.lower > *v.upper) throw LpError("variable '" + v.name + "' has empty bounds");
    }
  }
};

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  /// Optimal point, or a feasible point when unbounded.
  RationalVector x;
  /// One multiplier per constraint. Max problems: <= rows carry y >= 0, >= rows
  /// y <= 0; min problems the opposite. objective == sum y_i rhs_i + bound terms.
  RationalVector duals;
  /// Multipliers of finite bounds (other than the native x >= 0), same convention.
  RationalVector lower_bound_duals;
  RationalVector upper_bound_duals;
  Rational objective = 0;
  /// Infeasibility witness: y (rows) and bound multipliers with y'A >= 0 on
  /// sign-constrained columns, = 0 on the rest, and y'b < 0.
  RationalVector farkas;
  RationalVector farkas_lower;
  RationalVector farkas_upper;
  /// Improving direction when unbounded.
  RationalVector ray;
  std::size_t iterations = 0;
};

namespace detail {

/// Internal standard form max c'z, Az = b, z >= 0 with b >= 0.
class StandardForm {
 public:
  explicit StandardForm(const LpProblem& p) : problem_(p) {
    const std::size_t n = p.num_variables();
    plus_col_.assign(n, npos);
    minus_col_.assign(n, npos);
    native_.assign(n, false);
    // Rows: user constraints then finite-bound rows.
    for (std::size_t i = 0; i < p.constraints.size(); ++i) {
      rows_.push_back({p.constraints[i].rel, p.constraints[i].rhs});
    }
    lower_row_.assign(n, npos);
    upper_row_.assign(n, npos);
    for (std::size_t j = 0; j < n; ++j) {
      const auto& v = p.variables[j];
      const bool native = v.lower && sgn(*v.lower) == 0 && !v.upper;
      native_[j] = native;
      if (native) continue;
      if (v.lower) {
        lower_row_[j] = rows_.size();
        rows_.push_back({Relation::kGreaterEqual, *v.lower});
      }
      if (v.upper) {
        upper_row_[j] = rows_.size();
        rows_.push_back({Relation::kLessEqual, *v.upper});
      }
    }
    const std::size_t m = rows_.size();
    sign_.assign(m, 1);
    for (std::size_t i = 0; i < m; ++i) {
      if (sgn(rows_[i].rhs) < 0) sign_[i] = -1;
    }
    // Row-major sparse copy of the constraint matrix in original orientation.
    std::vector<std::vector<std::pair<std::size_t, Rational>>> col_entries(n);
    for (std::size_t i = 0; i < p.constraints.size(); ++i) {
      for (const auto& [v, c] : p.constraints[i].expr.terms) col_entries[v].emplace_back(i, c);
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (lower_row_[j] != npos) col_entries[j].emplace_back(lower_row_[j], Rational(1));
      if (upper_row_[j] != npos) col_entries[j].emplace_back(upper_row_[j], Rational(1));
    }
    const Rational flip = (p.sense == Sense::kMaximize) ? 1 : -1;
    for (std::size_t j = 0; j < n; ++j) {
      auto merged = merge(col_entries[j]);
      plus_col_[j] = add_column(merged, p.objective[j] * flip);
      if (!native_[j]) {
        for (auto& [r, c] : merged) c = -c;
        minus_col_[j] = add_column(merged, -p.objective[j] * flip);
      }
    }
    num_structural_ = cols_.size();
    for (std::size_t i = 0; i < m; ++i) {
      if (rows_[i].rel == Relation::kEqual) continue;
      const Rational s = rows_[i].rel == Relation::kLessEqual ? 1 : -1;
      add_column({{i, s}}, 0);
    }
    num_real_ = cols_.size();
    for (std::size_t i = 0; i < m; ++i) add_column({{i, Rational(1)}}, 0, /*already_signed=*/true);
    b_.resize(m);
    for (std::size_t i = 0; i < m; ++i) b_[i] = rows_[i].rhs * sign_[i];
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  struct Row {
    Relation rel;
    Rational rhs;
  };

  std::size_t m() const { return rows_.size(); }
  std::size_t ncols() const { return cols_.size(); }
  std::size_t num_real() const { return num_real_; }
  const std::vector<std::pair<std::size_t, Rational>>& col(std::size_t j) const { return cols_[j]; }
  const Rational& cost(std::size_t j) const { return cost_[j]; }
  const RationalVector& b() const { return b_; }
  int sign(std::size_t i) const { return sign_[i]; }

  RationalVector to_original(const RationalVector& z) const {
    RationalVector x(problem_.num_variables(), Rational(0));
    for (std::size_t j = 0; j < x.size(); ++j) {
      x[j] = z[plus_col_[j]];
      if (minus_col_[j] != npos) x[j] -= z[minus_col_[j]];
    }
    return x;
  }

  /// Splits row multipliers w (for the signed standard form) into user-row and
  /// bound-row multipliers in the original orientation.
  void split_rows(const RationalVector& w, RationalVector& rows, RationalVector& lower,
                  RationalVector& upper) const {
    const std::size_t n = problem_.num_variables();
    rows.assign(problem_.constraints.size(), Rational(0));
    lower.assign(n, Rational(0));
    upper.assign(n, Rational(0));
    for (std::size_t i = 0; i < problem_.constraints.size(); ++i) rows[i] = w[i] * sign_[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (lower_row_[j] != npos) lower[j] = w[lower_row_[j]] * sign_[lower_row_[j]];
      if (upper_row_[j] != npos) upper[j] = w[upper_row_[j]] * sign_[upper_row_[j]];
    }
  }

 private:
  static std::vector<std::pair<std::size_t, Rational>> merge(std::vector<std::pair<std::size_t, Rational>> e) {
    std::sort(e.begin(), e.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<std::size_t, Rational>> out;
    for (auto& [r, c] : e) {
      if (!out.empty() && out.back().first == r) {
        out.back().second += c;
      } else {
        out.emplace_back(r, c);
      }
    }
    std::erase_if(out, [](const auto& t) { return sgn(t.second) == 0; });
    return out;
  }

  std::size_t add_column(std::vector<std::pair<std::size_t, Rational>> entries, const Rational& cost,
                         bool already_signed = false) {
    if (!already_signed) {
      for (auto& [r, c] : entries) {
        if (sign_[r] < 0) c = -c;
      }
    }
    cols_.push_back(std::move(entries));
    cost_.push_back(cost);
    return cols_.size() - 1;
  }

  const LpProblem& problem_;
  std::vector<Row> rows_;
  std::vector<int> sign_;
  std::vector<bool> native_;
  std::vector<std::size_t> plus_col_, minus_col_, lower_row_, upper_row_;
  std::vector<std::vector<std::pair<std::size_t, Rational>>> cols_;
  RationalVector cost_;
  RationalVector b_;
  std::size_t num_structural_ = 0;
  std::size_t num_real_ = 0;
};

/// Revised simplex with an explicit basis inverse.
class RevisedSimplex {
 public:
  explicit RevisedSimplex(const StandardForm& sf) : sf_(sf), m_(sf.m()) {
    binv_.assign(m_, RationalVector(m_, Rational(0)));
    basis_.resize(m_);
    in_basis_.assign(sf.ncols(), false);
    for (std::size_t i = 0; i < m_; ++i) {
      binv_[i][i] = 1;
      basis_[i] = sf.num_real() + i;
      in_basis_[basis_[i]] = true;
    }
    xb_ = sf.b();
  }

  enum class Outcome { kOptimal, kUnbounded };

  /// Maximizes cost'z over columns with allowed[j]; Bland's rule throughout.
  Outcome run(const RationalVector& cost, const std::vector<bool>& allowed, std::size_t& iterations) {
    while (true) {
      const RationalVector y = duals(cost);
      std::size_t enter = StandardForm::npos;
      for (std::size_t j = 0; j < sf_.ncols(); ++j) {
        if (in_basis_[j] || !allowed[j]) continue;
        Rational d = cost[j];
        for (const auto& [r, a] : sf_.col(j)) {
          if (sgn(y[r]) != 0) d -= y[r] * a;
        }
        if (sgn(d) > 0) {
          enter = j;
          break;
        }
      }
      if (enter == StandardForm::npos) return Outcome::kOptimal;
      const RationalVector u = column(enter);
      std::size_t leave = StandardForm::npos;
      Rational best;
      for (std::size_t i = 0; i < m_; ++i) {
        if (sgn(u[i]) <= 0) continue;
        Rational ratio = xb_[i] / u[i];
        if (leave == StandardForm::npos || ratio < best ||
            (ratio == best && basis_[i] < basis_[leave])) {
          leave = i;
          best = std::move(ratio);
        }
      }
      if (leave == StandardForm::npos) {
        unbounded_column_ = enter;
        unbounded_direction_ = u;
        return Outcome::kUnbounded;
      }
      pivot(leave, enter, u);
      ++iterations;
    }
  }

  RationalVector duals(const RationalVector& cost) const {
    RationalVector y(m_, Rational(0));
    for (std::size_t i = 0; i < m_; ++i) {
      const Rational& cb = cost[basis_[i]];
      if (sgn(cb) == 0) continue;
      const RationalVector& row = binv_[i];
      for (std::size_t k = 0; k < m_; ++k) {
        if (sgn(row[k]) != 0) y[k] += cb * row[k];
      }
    }
    return y;
  }

  RationalVector column(std::size_t j) const {
    RationalVector u(m_, Rational(0));
    for (const auto& [r, a] : sf_.col(j)) {
      for (std::size_t i = 0; i < m_; ++i) {
        if (sgn(binv_[i][r]) != 0) u[i] += binv_[i][r] * a;
      }
    }
    return u;
  }

  void pivot(std::size_t r, std::size_t enter, const RationalVector& u) {
    const Rational piv = u[r];
    RationalVector& prow = binv_[r];
    for (auto& v : prow) {
      if (sgn(v) != 0) v /= piv;
    }
    xb_[r] /= piv;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r || sgn(u[i]) == 0) continue;
      const Rational f = u[i];
      RationalVector& row = binv_[i];
      for (std::size_t k = 0; k < m_; ++k) {
        if (sgn(prow[k]) != 0) row[k] -= f * prow[k];
      }
      xb_[i] -= f * xb_[r];
    }
    in_basis_[basis_[r]] = false;
    basis_[r] = enter;
    in_basis_[enter] = true;
  }

  /// After phase one: pivot zero-level artificials out wherever a real column
  /// has a nonzero entry in their row; rows where none does are redundant.
  void expel_artificials(std::size_t& iterations) {
    for (std::size_t r = 0; r < m_; ++r) {
      if (basis_[r] < sf_.num_real()) continue;
      for (std::size_t j = 0; j < sf_.num_real(); ++j) {
        if (in_basis_[j]) continue;
        Rational entry = 0;
        for (const auto& [row, a] : sf_.col(j)) entry += binv_[r][row] * a;
        if (sgn(entry) != 0) {
          pivot(r, j, column(j));
          ++iterations;
          break;
        }
      }
    }
  }

  RationalVector point() const {
    RationalVector z(sf_.ncols(), Rational(0));
    for (std::size_t i = 0; i < m_; ++i) z[basis_[i]] = xb_[i];
    return z;
  }

  RationalVector ray() const {
    RationalVector z(sf_.ncols(), Rational(0));
    z[unbounded_column_] = 1;
    for (std::size_t i = 0; i < m_; ++i) {
      if (sgn(unbounded_direction_[i]) != 0) z[basis_[i]] = -unbounded_direction_[i];
    }
    return z;
  }

  Rational value(const RationalVector& cost) const {
    Rational v = 0;
    for (std::size_t i = 0; i < m_; ++i) v += cost[basis_[i]] * xb_[i];
    return v;
  }

 private:
  const StandardForm& sf_;
  std::size_t m_;
  std::vector<RationalVector> binv_;
  std::vector<std::size_t> basis_;
  std::vector<bool> in_basis_;
  RationalVector xb_;
  std::size_t unbounded_column_ = 0;
  RationalVector unbounded_direction_;
};

}  // namespace detail

/// Solves `problem` exactly. Deterministic: identical input, identical output.
inline LpSolution solve(const LpProblem& problem) {
  problem.validate();
  const detail::StandardForm sf(problem);
  detail::RevisedSimplex simplex(sf);
  LpSolution sol;
  const std::size_t nc = sf.ncols();

  RationalVector phase1(nc, Rational(0));
  for (std::size_t j = sf.num_real(); j < nc; ++j) phase1[j] = -1;
  const std::vector<bool> all(nc, true);
  simplex.run(phase1, all, sol.iterations);
  if (sgn(simplex.value(phase1)) < 0) {
    sol.status = LpStatus::kInfeasible;
    sf.split_rows(simplex.duals(phase1), sol.farkas, sol.farkas_lower, sol.farkas_upper);
    return sol;
  }
  simplex.expel_artificials(sol.iterations);

  RationalVector phase2(nc, Rational(0));
  for (std::size_t j = 0; j < sf.num_real(); ++j) phase2[j] = sf.cost(j);
  std::vector<bool> real(nc, false);
  for (std::size_t j = 0; j < sf.num_real(); ++j) real[j] = true;
  const auto outcome = simplex.run(phase2, real, sol.iterations);
  sol.x = sf.to_original(simplex.point());
  if (outcome == detail::RevisedSimplex::Outcome::kUnbounded) {
    sol.status = LpStatus::kUnbounded;
    sol.ray = sf.to_original(simplex.ray());
    return sol;
  }
  sol.status = LpStatus::kOptimal;
  RationalVector w = simplex.duals(phase2);
  if (problem.sense == Sense::kMinimize) {
    for (auto& v : w) v = -v;
  }
  sf.split_rows(w, sol.duals, sol.lower_bound_duals, sol.upper_bound_duals);
  sol.objective = 0;
  for (std::size_t j = 0; j < problem.num_variables(); ++j) sol.objective += problem.objective[j] * sol.x[j];
  return sol;
}

namespace detail {

inline bool satisfies(const Rational& lhs, Relation rel, const Rational& rhs) {
  switch (rel) {
    case Relation::kLessEqual: return lhs <= rhs;
    case Relation::kGreaterEqual: return lhs >= rhs;
    default: return lhs == rhs;
  }
}

inline bool native_nonnegative(const LpVariable& v) { return v.lower && sgn(*v.lower) == 0 && !v.upper; }

/// Multiplier sign rule in "max" orientation: <= rows y >= 0, >= rows y <= 0.
inline bool sign_ok(const Rational& y, Relation rel, Sense sense) {
  const int s = sense == Sense::kMaximize ? sgn(y) : -sgn(y);
  if (rel == Relation::kLessEqual) return s >= 0;
  if (rel == Relation::kGreaterEqual) return s <= 0;
  return true;
}

}  // namespace detail

/// Re-verifies a solution's certificate from the problem data alone. Returns an
/// empty string when valid, otherwise a description of the first violation.
inline std::string verify_certificate(const LpProblem& p, const LpSolution& s) {
  const std::size_t n = p.num_variables();
  const auto primal_feasible = [&](const RationalVector& x) -> std::string {
    if (x.size() != n) return "primal vector has wrong length";
    for (const auto& c : p.constraints) {
      if (!detail::satisfies(c.expr.evaluate(x), c.rel, c.rhs)) return "primal violates constraint '" + c.name + "'";
    }
    for (std::size_t j = 0; j < n; ++j) {
      const auto& v = p.variables[j];
      if ((v.lower && x[j] < *v.lower) || (v.upper && x[j] > *v.upper)) return "primal violates bounds of '" + v.name + "'";
    }
    return "";
  };
  // Column sums y'A_j including bound multipliers.
  const auto column_sums = [&](const RationalVector& y, const RationalVector& yl, const RationalVector& yu) {
    RationalVector cs(n, Rational(0));
    for (std::size_t i = 0; i < p.constraints.size(); ++i) {
      for (const auto& [v, c] : p.constraints[i].expr.terms) cs[v] += y[i] * c;
    }
    for (std::size_t j = 0; j < n; ++j) cs[j] += yl[j] + yu[j];
    return cs;
  };
  const auto bound_sign_ok = [&](const RationalVector& yl, const RationalVector& yu, Sense sense) -> std::string {
    for (std::size_t j = 0; j < n; ++j) {
      const auto& v = p.variables[j];
      const bool native = detail::native_nonnegative(v);
      if ((native || !v.lower) && sgn(yl[j]) != 0) return "multiplier on absent lower bound of '" + v.name + "'";
      if (!v.upper && sgn(yu[j]) != 0) return "multiplier on absent upper bound of '" + v.name + "'";
      if (!detail::sign_ok(yl[j], Relation::kGreaterEqual, sense)) return "lower-bound multiplier sign of '" + v.name + "'";
      if (!detail::sign_ok(yu[j], Relation::kLessEqual, sense)) return "upper-bound multiplier sign of '" + v.name + "'";
    }
    return "";
  };

  if (s.status == LpStatus::kOptimal) {
    if (auto e = primal_feasible(s.x); !e.empty()) return e;
    if (s.duals.size() != p.constraints.size()) return "dual vector has wrong length";
    for (std::size_t i = 0; i < p.constraints.size(); ++i) {
      if (!detail::sign_ok(s.duals[i], p.constraints[i].rel, p.sense)) return "dual sign of '" + p.constraints[i].name + "'";
    }
    if (auto e = bound_sign_ok(s.lower_bound_duals, s.upper_bound_duals, p.sense); !e.empty()) return e;
    const RationalVector cs = column_sums(s.duals, s.lower_bound_duals, s.upper_bound_duals);
    for (std::size_t j = 0; j < n; ++j) {
      const Rational reduced = p.objective[j] - cs[j];
      if (detail::native_nonnegative(p.variables[j])) {
        const int sg = p.sense == Sense::kMaximize ? sgn(reduced) : -sgn(reduced);
        if (sg > 0) return "reduced cost of '" + p.variables[j].name + "' has the wrong sign";
      } else if (sgn(reduced) != 0) {
        return "reduced cost of '" + p.variables[j].name + "' is nonzero";
      }
    }
    Rational primal = 0;
    for (std::size_t j = 0; j < n; ++j) primal += p.objective[j] * s.x[j];
    Rational dual = 0;
    for (std::size_t i = 0; i < p.constraints.size(); ++i) dual += s.duals[i] * p.constraints[i].rhs;
    for (std::size_t j = 0; j < n; ++j) {
      if (p.variables[j].lower && sgn(s.lower_bound_duals[j]) != 0) dual += s.lower_bound_duals[j] * *p.variables[j].lower;
      if (p.variables[j].upper && sgn(s.upper_bound_duals[j]) != 0) dual += s.upper_bound_duals[j] * *p.variables[j].upper;
    }
    if (primal != s.objective) return "reported objective differs from c'x";
    if (primal != dual) return "primal objective " + to_string(primal) + " != dual objective " + to_string(dual);
    return "";
  }
  if (s.status == LpStatus::kInfeasible) {
    if (s.farkas.size() != p.constraints.size()) return "Farkas vector has wrong length";
    for (std::size_t i = 0; i < p.constraints.size(); ++i) {
      if (!detail::sign_ok(s.farkas[i], p.constraints[i].rel, Sense::kMaximize)) return "Farkas sign of '" + p.constraints[i].name + "'";
    }
    if (auto e = bound_sign_ok(s.farkas_lower, s.farkas_upper, Sense::kMaximize); !e.empty()) return e;
    const RationalVector cs = column_sums(s.farkas, s.farkas_lower, s.farkas_upper);
    for (std::size_t j = 0; j < n; ++j) {
      if (detail::native_nonnegative(p.variables[j]) ? sgn(cs[j]) < 0 : sgn(cs[j]) != 0) {
        return "Farkas column condition fails at '" + p.variables[j].name + "'";
      }
    }
    Rational yb = 0;
    for (std::size_t i = 0; i < p.constraints.size(); ++i) yb += s.farkas[i] * p.constraints[i].rhs;
    for (std::size_t j = 0; j < n; ++j) {
      if (p.variables[j].lower && sgn(s.farkas_lower[j]) != 0) yb += s.farkas_lower[j] * *p.variables[j].lower;
      if (p.variables[j].upper && sgn(s.farkas_upper[j]) != 0) yb += s.farkas_upper[j] * *p.variables[j].upper;
    }
    if (sgn(yb) >= 0) return "Farkas right-hand side is not negative";
    return "";
  }
  if (auto e = primal_feasible(s.x); !e.empty()) return e;
  if (s.ray.size() != n) return "ray has wrong length";
  for (const auto& c : p.constraints) {
    if (!detail::satisfies(c.expr.evaluate(s.ray), c.rel, Rational(0))) return "ray leaves constraint '" + c.name + "'";
  }
  for (std::size_t j = 0; j < n; ++j) {
    const auto& v = p.variables[j];
    if ((v.lower && sgn(s.ray[j]) < 0) || (v.upper && sgn(s.ray[j]) > 0)) return "ray leaves bounds of '" + v.name + "'";
  }
  Rational gain = 0;
  for (std::size_t j = 0; j < n; ++j) gain += p.objective[j] * s.ray[j];
  if (p.sense == Sense::kMaximize ? sgn(gain) <= 0 : sgn(gain) >= 0) return "ray does not improve the objective";
  return "";
}

/// Debug dump in CPLEX LP text format. Coefficients are rendered as decimals,
/// so the dump is lossy and flagged as such in its header.
inline void write_lp_format(std::ostream& out, const LpProblem& p) {
  const auto name = [&](std::size_t j) {
    std::string s = p.variables[j].name;
    for (auto& ch : s) {
      if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_') ch = '_';
    }
    return "x" + std::to_string(j) + "_" + s;
  };
  const auto term = [&](const Rational& c, std::size_t j, bool first) {
    std::ostringstream t;
    if (sgn(c) < 0) {
      t << " - " << to_decimal(-c, 17);
    } else {
      t << (first ? " " : " + ") << to_decimal(c, 17);
    }
    t << " " << name(j);
    return t.str();
  };
  out << "\\ LOSSY: exact rational coefficients rendered as decimals\n";
  out << (p.sense == Sense::kMaximize ? "Maximize\n" : "Minimize\n") << " obj:";
  bool first = true;
  for (std::size_t j = 0; j < p.num_variables(); ++j) {
    if (sgn(p.objective[j]) == 0) continue;
    out << term(p.objective[j], j, first);
    first = false;
  }
  if (first) out << " 0 " << (p.num_variables() ? name(0) : "x");
  out << "\nSubject To\n";
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    const auto& c = p.constraints[i];
    out << " c" << i << ":";
    bool f = true;
    for (const auto& [v, coef] : c.expr.terms) {
      out << term(coef, v, f);
      f = false;
    }
    if (f) out << " 0 " << (p.num_variables() ? name(0) : "x");
    out << (c.rel == Relation::kLessEqual ? " <= " : c.rel == Relation::kEqual ? " = " : " >= ")
        << to_decimal(c.rhs, 17) << "\n";
  }
  out << "Bounds\n";
  for (std::size_t j = 0; j < p.num_variables(); ++j) {
    const auto& v = p.variables[j];
    if (detail::native_nonnegative(v)) continue;
    if (!v.lower && !v.upper) {
      out << " " << name(j) << " free\n";
      continue;
    }
    out << " " << (v.lower ? to_decimal(*v.lower, 17) : std::string("-inf")) << " <= " << name(j) << " <= "
        << (v.upper ? to_decimal(*v.upper, 17) : std::string("+inf")) << "\n";
  }
  out << "End\n";
}

}  // namespace semistatic
