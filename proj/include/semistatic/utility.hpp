#pragma once

// Floating-point utility maximization on a finite market. The primal is
// max E_P U(p) over p >= 0 with E_Q p <= x at every vertex Q of the closed
// pricing polytope; the dual is min E_P V(q) over q = y * sum_j l_j Q_j / P,
// l >= 0, sum l <= 1. Both are solved by a log-barrier Newton method.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "semistatic/measures.hpp"
#include "semistatic/tree_market.hpp"

namespace semistatic {

/// U(x) = log x (gamma = 0) or x^gamma / gamma with 0 < gamma < 1.
struct Utility {
  double gamma = 0;

  bool is_log() const { return gamma == 0; }
  std::string name() const { return is_log() ? "log" : "power:" + std::to_string(gamma); }

  double u(double x) const { return is_log() ? std::log(x) : std::pow(x, gamma) / gamma; }
  double du(double x) const { return is_log() ? 1 / x : std::pow(x, gamma - 1); }
  double d2u(double x) const { return is_log() ? -1 / (x * x) : (gamma - 1) * std::pow(x, gamma - 2); }
  /// I = (U')^{-1}.
  double inv_du(double y) const { return is_log() ? 1 / y : std::pow(y, 1 / (gamma - 1)); }
  /// Conjugate V(y) = sup_x U(x) - x y.
  double v(double y) const {
    return is_log() ? -std::log(y) - 1 : (1 - gamma) / gamma * std::pow(y, gamma / (gamma - 1));
  }
  double dv(double y) const { return -inv_du(y); }
  double d2v(double y) const { return is_log() ? 1 / (y * y) : -std::pow(y, 1 / (gamma - 1) - 1) / (gamma - 1); }
};

inline Utility log_utility() { return {}; }

inline Utility power_utility(double gamma) {
  if (!(gamma > 0 && gamma < 1)) throw std::invalid_argument("power utility needs 0 < gamma < 1");
  return Utility{gamma};
}

/// "log" or "power:<gamma>" with gamma a decimal or p/q.
inline Utility parse_utility(const std::string& text) {
  if (text == "log") return log_utility();
  const std::string prefix = "power:";
  if (text.rfind(prefix, 0) != 0) throw std::invalid_argument("unknown utility '" + text + "' (expected log or power:<gamma>)");
  const std::string g = text.substr(prefix.size());
  double gamma = 0;
  try {
    gamma = g.find('/') != std::string::npos ? parse_rational(g).get_d() : std::stod(g);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad exponent in '" + text + "'");
  }
  return power_utility(gamma);
}

class UtilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct UtilityOptions {
  /// Newton decrement target per barrier stage.
  double newton_tol = 1e-14;
  /// Final barrier weight times constraint count.
  double gap_tol = 1e-13;
  int iteration_cap = 100000;
};

struct Optimum {
  double value = 0;
  std::vector<double> point;
  int iterations = 0;
};

namespace detail {

struct BarrierProblem {
  std::function<double(const Eigen::VectorXd&)> f;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hess;
  std::function<bool(const Eigen::VectorXd&)> in_domain;
  /// Constraints A z <= b, kept strict.
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
};

/// Minimizes f subject to A z <= b from a strictly feasible z.
inline Eigen::VectorXd barrier_minimize(const BarrierProblem& p, Eigen::VectorXd z, const UtilityOptions& o, int& iterations) {
  const auto m = static_cast<double>(p.b.size());
  const auto phi = [&](const Eigen::VectorXd& x, double mu) {
    const Eigen::VectorXd s = p.b - p.a * x;
    return p.f(x) - mu * s.array().log().sum();
  };
  const auto feasible = [&](const Eigen::VectorXd& x) {
    return p.in_domain(x) && ((p.b - p.a * x).array() > 0).all();
  };
  if (!feasible(z)) throw UtilityError("barrier start is not strictly feasible");
  double mu = 1;
  while (true) {
    for (int inner = 0;; ++inner) {
      if (++iterations > o.iteration_cap) throw UtilityError("barrier Newton method exceeded its iteration cap");
      const Eigen::VectorXd s = p.b - p.a * z;
      const Eigen::VectorXd inv = s.cwiseInverse();
      const Eigen::VectorXd g = p.grad(z) + mu * p.a.transpose() * inv;
      Eigen::MatrixXd h = p.hess(z) + mu * p.a.transpose() * inv.cwiseAbs2().asDiagonal() * p.a;
      h.diagonal().array() += 1e-14 * (1 + h.diagonal().cwiseAbs().maxCoeff());
      const Eigen::VectorXd step = -h.ldlt().solve(g);
      if (!step.allFinite()) throw UtilityError("Newton system is singular");
      const double decrement = -g.dot(step);
      if (decrement / 2 < o.newton_tol) break;
      double t = 1;
      const double base = phi(z, mu);
      while (!feasible(z + t * step) || phi(z + t * step, mu) > base - 0.25 * t * decrement) {
        t /= 2;
        if (t < 1e-20) break;
      }
      if (t < 1e-20) break;
      z += t * step;
    }
    if (mu * m < o.gap_tol) return z;
    mu /= 10;
  }
}

}  // namespace detail

/// Densities of the vertices of the closed pricing polytope relative to the
/// reference probability, precomputed once.
class UtilityModel {
 public:
  UtilityModel(const MarketSpec& m, const Measure& prior, Utility utility, CapOptions caps = {}, UtilityOptions o = {})
      : u_(utility), o_(o) {
    if (!prior.is_probability()) throw std::invalid_argument("reference measure is not a probability");
    const std::size_t n = m.tree.leaf_count();
    if (prior.size() != n) throw std::invalid_argument("reference measure does not match the leaf count");
    p_.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      if (sgn(prior[i]) <= 0) throw std::invalid_argument("reference measure must have full support");
      p_[static_cast<Eigen::Index>(i)] = prior[i].get_d();
    }
    PricingSetSpec s = pricing_set_spec(m, caps);
    if (!max_slack(s).positive()) throw UtilityError("strict no-arbitrage fails; the utility problem is degenerate");
    const auto verts = closure_vertices(s);
    q_.resize(static_cast<Eigen::Index>(verts.size()), static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < verts.size(); ++j) {
      for (std::size_t i = 0; i < n; ++i) q_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = verts[j][i].get_d();
    }
    z_ = q_.array().rowwise() / p_.transpose().array();
  }

  const Utility& utility() const { return u_; }
  const Eigen::VectorXd& prior() const { return p_; }
  /// Vertex measures, one per row.
  const Eigen::MatrixXd& vertices() const { return q_; }
  /// Vertex densities Q_j / P, one per row.
  const Eigen::MatrixXd& densities() const { return z_; }

  Optimum primal(double x) const {
    if (!(x > 0)) throw std::invalid_argument("initial wealth must be positive");
    const auto n = p_.size();
    detail::BarrierProblem bp;
    bp.f = [&](const Eigen::VectorXd& v) {
      double s = 0;
      for (Eigen::Index i = 0; i < n; ++i) s -= p_[i] * u_.u(v[i]);
      return s;
    };
    bp.grad = [&](const Eigen::VectorXd& v) {
      Eigen::VectorXd g(n);
      for (Eigen::Index i = 0; i < n; ++i) g[i] = -p_[i] * u_.du(v[i]);
      return g;
    };
    bp.hess = [&](const Eigen::VectorXd& v) {
      Eigen::VectorXd d(n);
      for (Eigen::Index i = 0; i < n; ++i) d[i] = -p_[i] * u_.d2u(v[i]);
      return Eigen::MatrixXd(d.asDiagonal());
    };
    bp.in_domain = [](const Eigen::VectorXd& v) { return (v.array() > 0).all(); };
    bp.a = q_;
    bp.b = Eigen::VectorXd::Constant(q_.rows(), x);
    Optimum out;
    const Eigen::VectorXd p = detail::barrier_minimize(bp, Eigen::VectorXd::Constant(n, x / 2), o_, out.iterations);
    out.value = -bp.f(p);
    out.point.assign(p.data(), p.data() + n);
    return out;
  }

  /// Returns v(y) and q-hat(y) (leaf values of the dual density).
  Optimum dual(double y) const {
    if (!(y > 0)) throw std::invalid_argument("dual variable must be positive");
    const auto k = z_.rows();
    const auto q_of = [&](const Eigen::VectorXd& l) -> Eigen::VectorXd { return y * (z_.transpose() * l); };
    detail::BarrierProblem bp;
    bp.f = [&](const Eigen::VectorXd& l) {
      const Eigen::VectorXd q = q_of(l);
      double s = 0;
      for (Eigen::Index i = 0; i < q.size(); ++i) s += p_[i] * u_.v(q[i]);
      return s;
    };
    bp.grad = [&](const Eigen::VectorXd& l) {
      const Eigen::VectorXd q = q_of(l);
      Eigen::VectorXd w(q.size());
      for (Eigen::Index i = 0; i < q.size(); ++i) w[i] = p_[i] * u_.dv(q[i]) * y;
      return Eigen::VectorXd(z_ * w);
    };
    bp.hess = [&](const Eigen::VectorXd& l) {
      const Eigen::VectorXd q = q_of(l);
      Eigen::VectorXd w(q.size());
      for (Eigen::Index i = 0; i < q.size(); ++i) w[i] = p_[i] * u_.d2v(q[i]) * y * y;
      return Eigen::MatrixXd(z_ * w.asDiagonal() * z_.transpose());
    };
    bp.in_domain = [&](const Eigen::VectorXd& l) { return (q_of(l).array() > 0).all(); };
    bp.a.resize(k + 1, k);
    bp.a.topRows(k) = -Eigen::MatrixXd::Identity(k, k);
    bp.a.row(k) = Eigen::RowVectorXd::Ones(k);
    bp.b = Eigen::VectorXd::Zero(k + 1);
    bp.b[k] = 1;
    Optimum out;
    const Eigen::VectorXd l = detail::barrier_minimize(bp, Eigen::VectorXd::Constant(k, 0.5 / static_cast<double>(k)), o_,
                                                       out.iterations);
    out.value = bp.f(l);
    const Eigen::VectorXd q = q_of(l);
    out.point.assign(q.data(), q.data() + q.size());
    return out;
  }

 private:
  Utility u_;
  UtilityOptions o_;
  Eigen::VectorXd p_;
  Eigen::MatrixXd q_;
  Eigen::MatrixXd z_;
};

inline Optimum primal_u(const UtilityModel& model, double x) { return model.primal(x); }
inline Optimum dual_v(const UtilityModel& model, double y) { return model.dual(y); }

namespace detail {

/// Golden-section search for the minimum of a unimodal f on [lo, hi] in log scale.
inline double golden_min_log(const std::function<double(double)>& f, double lo, double hi, double& arg) {
  const double r = (std::sqrt(5.0) - 1) / 2;
  double a = std::log(lo), b = std::log(hi);
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(std::exp(c)), fd = f(std::exp(d));
  while (b - a > 1e-11) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(std::exp(d));
    }
  }
  arg = std::exp((a + b) / 2);
  return f(arg);
}

}  // namespace detail

struct AuditRow {
  double x = 0;
  double y = 0;
  double u = 0;
  double v = 0;
  /// |u(x) - inf_y [v(y) + x y]|.
  double conjugacy = 0;
  /// max over leaves |p-hat - I(q-hat)|.
  double relation = 0;
  /// |E[p-hat q-hat] - x y|.
  double budget = 0;
  /// |u'(x) - E[p-hat U'(p-hat)] / x| with u' by central differences.
  double du_formula = 0;
  /// |v'(y) - E[q-hat V'(q-hat)] / y| with v' by central differences.
  double dv_formula = 0;
  std::vector<double> p_hat;
  std::vector<double> q_hat;
};

struct DualRow {
  double y = 0;
  double v = 0;
  /// |v(y) - sup_x [u(x) - x y]|.
  double conjugacy = 0;
};

struct DualityReport {
  std::string utility;
  double tolerance = 1e-6;
  double derivative_tolerance = 1e-5;
  /// x U'(x) / U(x) at large x.
  double asymptotic_elasticity = 0;
  std::vector<AuditRow> x_rows;
  std::vector<DualRow> y_rows;
  double worst_conjugacy = 0;
  double worst_relation = 0;
  double worst_budget = 0;
  double worst_derivative = 0;
  /// Largest discrete second difference of u on the sorted x grid.
  double concavity = 0;
  /// u' increases as x decreases towards 0 and v' tends to 0 as y grows.
  bool inada_trend = true;
  std::vector<std::string> failures;

  bool passed() const { return failures.empty(); }
};

/// Checks conjugacy both ways, p-hat = I(q-hat) at y = u'(x),
/// E[p-hat q-hat] = x y and the two derivative formulas on the grids.
inline DualityReport duality_audit(const UtilityModel& model, std::vector<double> x_grid, std::vector<double> y_grid,
                                   double tol = 1e-6, double deriv_tol = 1e-5) {
  const Utility& uu = model.utility();
  const Eigen::VectorXd& prob = model.prior();
  DualityReport r;
  r.utility = uu.name();
  r.tolerance = tol;
  r.derivative_tolerance = deriv_tol;
  for (double x : x_grid) {
    if (!(x > 0)) throw std::invalid_argument("grid points must be positive");
  }
  for (double y : y_grid) {
    if (!(y > 0)) throw std::invalid_argument("grid points must be positive");
  }
  r.asymptotic_elasticity = 1e8 * uu.du(1e8) / uu.u(1e8);
  if (!(r.asymptotic_elasticity < 1)) throw UtilityError("asymptotic elasticity is not below 1");
  const auto u = [&](double x) { return model.primal(x).value; };
  const auto v = [&](double y) { return model.dual(y).value; };
  const auto central = [](const std::function<double(double)>& f, double x) {
    const double h = 1e-4 * x;
    return (f(x + h) - f(x - h)) / (2 * h);
  };
  const auto expect = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += prob[static_cast<Eigen::Index>(i)] * a[i] * b[i];
    return s;
  };
  const auto fail = [&](const std::string& what, double at, double residual) {
    r.failures.push_back(what + " at " + std::to_string(at) + ": residual " + std::to_string(residual));
  };
  std::sort(x_grid.begin(), x_grid.end());
  for (double x : x_grid) {
    AuditRow row;
    row.x = x;
    const Optimum pr = model.primal(x);
    row.u = pr.value;
    row.p_hat = pr.point;
    row.y = central(u, x);
    const Optimum du = model.dual(row.y);
    row.v = du.value;
    row.q_hat = du.point;
    for (std::size_t i = 0; i < row.p_hat.size(); ++i) {
      row.relation = std::max(row.relation, std::abs(row.p_hat[i] - uu.inv_du(row.q_hat[i])));
    }
    row.budget = std::abs(expect(row.p_hat, row.q_hat) - x * row.y);
    std::vector<double> mu(row.p_hat.size()), nu(row.q_hat.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
      mu[i] = uu.du(row.p_hat[i]);
      nu[i] = uu.dv(row.q_hat[i]);
    }
    row.du_formula = std::abs(row.y - expect(row.p_hat, mu) / x);
    row.dv_formula = std::abs(central(v, row.y) - expect(row.q_hat, nu) / row.y);
    double arg = 0;
    const double inf = detail::golden_min_log([&](double y) { return v(y) + x * y; }, row.y / 100, row.y * 100, arg);
    row.conjugacy = std::abs(row.u - inf);
    if (row.relation > tol) fail("p-hat = I(q-hat)", x, row.relation);
    if (row.budget > tol) fail("E[p-hat q-hat] = x y", x, row.budget);
    if (row.conjugacy > tol) fail("u = inf_y [v + x y]", x, row.conjugacy);
    if (row.du_formula > deriv_tol) fail("u'(x) formula", x, row.du_formula);
    if (row.dv_formula > deriv_tol) fail("v'(y) formula", x, row.dv_formula);
    r.worst_relation = std::max(r.worst_relation, row.relation);
    r.worst_budget = std::max(r.worst_budget, row.budget);
    r.worst_conjugacy = std::max(r.worst_conjugacy, row.conjugacy);
    r.worst_derivative = std::max({r.worst_derivative, row.du_formula, row.dv_formula});
    r.x_rows.push_back(std::move(row));
  }
  for (double y : y_grid) {
    DualRow row;
    row.y = y;
    row.v = v(y);
    const double guess = -central(v, y);
    double arg = 0;
    const double sup = -detail::golden_min_log([&](double x) { return x * y - u(x); }, guess / 100, guess * 100, arg);
    row.conjugacy = std::abs(row.v - sup);
    if (row.conjugacy > tol) fail("v = sup_x [u - x y]", y, row.conjugacy);
    r.worst_conjugacy = std::max(r.worst_conjugacy, row.conjugacy);
    r.y_rows.push_back(row);
  }
  for (std::size_t i = 1; i + 1 < r.x_rows.size(); ++i) {
    const double a = r.x_rows[i - 1].x, b = r.x_rows[i].x, c = r.x_rows[i + 1].x;
    const double s1 = (r.x_rows[i].u - r.x_rows[i - 1].u) / (b - a);
    const double s2 = (r.x_rows[i + 1].u - r.x_rows[i].u) / (c - b);
    r.concavity = std::max(r.concavity, s2 - s1);
  }
  if (r.concavity > tol) fail("concavity of u", 0, r.concavity);
  double prev = 0;
  for (double x : {1e-1, 1e-2, 1e-3}) {
    const double d = central(u, x);
    if (d <= prev) r.inada_trend = false;
    prev = d;
  }
  if (!(std::abs(central(v, 1e3)) < std::abs(central(v, 1e1)))) r.inada_trend = false;
  return r;
}

}  // namespace semistatic
