#pragma once

// Martingale-measure systems, the closed pricing polytope, slack maximization
// and exact membership tests. Constraints quantified over all stopping times
// are either expanded by enumeration or generated lazily from Snell envelopes.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "semistatic/exact_lp.hpp"
#include "semistatic/polytope.hpp"
#include "semistatic/stopping.hpp"
#include "semistatic/tree_market.hpp"

namespace semistatic {

enum class CapMode { kAuto, kEnumerate, kLazy };

struct CapOptions {
  CapMode mode = CapMode::kAuto;
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;
  /// kAuto enumerates when the tree has at most this many stopping times.
  std::uint64_t auto_limit = 64;

  bool enumerate(const EventTree& tree) const {
    switch (mode) {
      case CapMode::kEnumerate: return true;
      case CapMode::kLazy: return false;
      default:
        return count_stopping_times(tree) <= std::min(auto_limit, enumeration_cap);
    }
  }
};

/// The family of rows  sum_leaf h_tau(leaf) * measure[leaf] + offset <= rhs,
/// one for every stopping time tau.
struct StoppingFamily {
  std::string name;
  ScalarProcess h;
  std::vector<LinearExpr> measure;
  LinearExpr offset;
  Rational rhs = 0;

  LinearExpr row(const EventTree& tree, const StoppingTime& tau) const {
    LinearExpr e;
    const RationalVector payoff = stopped_payoff(tree, tau, h);
    for (std::size_t i = 0; i < payoff.size(); ++i) e.add(measure[i], payoff[i]);
    e.add(offset);
    return e;
  }
};

struct CutRecord {
  std::size_t family = 0;
  std::size_t row = 0;
  StoppingTime tau;
};

struct CutLoopResult {
  LpProblem lp;
  LpSolution solution;
  std::vector<CutRecord> cuts;
  std::size_t rounds = 0;
};

/// Solves `lp` subject to every family, expanding the families up front or
/// adding violated rows until the Snell oracle finds none.
inline CutLoopResult solve_with_families(LpProblem lp, const EventTree& tree,
                                         const std::vector<StoppingFamily>& families,
                                         const CapOptions& options = {}) {
  CutLoopResult out;
  std::vector<std::set<StoppingTime>> seen(families.size());
  const auto add_cut = [&](std::size_t f, const StoppingTime& tau) {
    if (!seen[f].insert(tau).second) return false;
    const std::size_t row = lp.add_constraint(families[f].row(tree, tau), Relation::kLessEqual, families[f].rhs,
                                              families[f].name + "_cut" + std::to_string(seen[f].size()));
    out.cuts.push_back({f, row, tau});
    return true;
  };
  const bool enumerate = options.enumerate(tree);
  if (enumerate && !families.empty()) {
    const auto taus = enumerate_stopping_times(tree, options.enumeration_cap);
    for (std::size_t f = 0; f < families.size(); ++f) {
      for (const auto& tau : taus) add_cut(f, tau);
    }
  } else {
    for (std::size_t f = 0; f < families.size(); ++f) {
      add_cut(f, constant_stopping_time(tree, 0));
      add_cut(f, constant_stopping_time(tree, tree.horizon()));
    }
  }
  while (true) {
    ++out.rounds;
    out.solution = solve(lp);
    if (out.solution.status != LpStatus::kOptimal || enumerate) break;
    bool added = false;
    for (std::size_t f = 0; f < families.size(); ++f) {
      RationalVector m(tree.leaf_count());
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = families[f].measure[i].evaluate(out.solution.x);
      const SnellResult snell = snell_envelope(tree, Measure(m), families[f].h);
      const Rational lhs = families[f].row(tree, snell.greedy).evaluate(out.solution.x);
      if (lhs > families[f].rhs) {
        if (!add_cut(f, snell.greedy)) throw std::logic_error("separation oracle repeated a cut");
        added = true;
      }
    }
    if (!added) break;
  }
  out.lp = std::move(lp);
  return out;
}

/// Linear program over leaf weights q.
struct MeasureProgram {
  LpProblem lp;
  std::vector<std::size_t> q;
  std::vector<StoppingFamily> families;

  std::vector<LinearExpr> measure_exprs() const {
    std::vector<LinearExpr> m;
    for (std::size_t v : q) m.emplace_back(v, 1);
    return m;
  }
  LinearExpr expectation(const RationalVector& payoff) const {
    LinearExpr e;
    for (std::size_t i = 0; i < q.size(); ++i) e.add(q[i], payoff[i]);
    return e;
  }
  Measure measure(const LpSolution& s) const {
    RationalVector w;
    for (std::size_t v : q) w.push_back(s.x.at(v));
    return Measure(w);
  }
};

/// Martingale equations at every decision node and asset component, total
/// mass one, q >= 0, and q = 0 outside `allowed`.
inline MeasureProgram martingale_system(const MarketSpec& m, const LeafSet& allowed) {
  const EventTree& tree = m.tree;
  MeasureProgram p;
  for (std::size_t i = 0; i < tree.leaf_count(); ++i) {
    std::optional<Rational> upper;
    if (!allowed.at(i)) upper = Rational(0);
    p.q.push_back(p.lp.add_variable("q_" + tree.id(tree.leaves()[i]), Rational(0), upper));
  }
  for (NodeId n : tree.decision_nodes()) {
    for (std::size_t l = 0; l < m.dim(); ++l) {
      LinearExpr e;
      for (NodeId c : tree.children(n)) {
        const Rational step = m.stock.at(c, l) - m.stock.at(n, l);
        const auto [b, en] = tree.leaf_range(c);
        for (std::size_t i = b; i < en; ++i) e.add(p.q[i], step);
      }
      p.lp.add_constraint(std::move(e), Relation::kEqual, 0,
                          "martingale_" + tree.id(n) + (m.dim() > 1 ? "_" + std::to_string(l) : ""));
    }
  }
  LinearExpr total;
  for (std::size_t v : p.q) total.add(v, 1);
  p.lp.add_constraint(std::move(total), Relation::kEqual, 1, "mass");
  return p;
}

inline MeasureProgram martingale_system(const MarketSpec& m) { return martingale_system(m, m.reference_support); }

/// Describes a closed pricing set and which of its constraints are strict in
/// the open version.
struct PricingSetSpec {
  const MarketSpec* market = nullptr;
  std::vector<ExtendedRational> g_cap;
  std::vector<ExtendedRational> h_cap;
  LeafSet allowed;
  LeafSet floor;
  bool strict_g = true;
  bool strict_h = true;
  bool strict_floor = true;
  bool price_f = true;
  CapOptions caps;
};

/// Caps at the quoted prices, mass confined to and positive on the reference support.
inline PricingSetSpec pricing_set_spec(const MarketSpec& m, CapOptions caps = {}) {
  PricingSetSpec s;
  s.market = &m;
  for (const auto& g : m.buy_only) s.g_cap.emplace_back(g.price);
  for (const auto& h : m.american) s.h_cap.emplace_back(h.price);
  s.allowed = m.reference_support;
  s.floor = m.reference_support;
  s.caps = caps;
  return s;
}

namespace detail {

inline void check_spec(const PricingSetSpec& s) {
  if (!s.market) throw std::invalid_argument("pricing set without a market");
  if (s.g_cap.size() != s.market->buy_only.size() || s.h_cap.size() != s.market->american.size()) {
    throw std::invalid_argument("cap lengths do not match the option lists");
  }
  const std::size_t leaves = s.market->tree.leaf_count();
  if (s.allowed.size() != leaves || (!s.floor.empty() && s.floor.size() != leaves)) {
    throw std::invalid_argument("leaf sets do not match the leaf count");
  }
}

}  // namespace detail

/// Q-space program for the closed set with an optional uniform slack variable
/// subtracted from every strict cap (and imposed as a floor on q).
inline MeasureProgram pricing_program(const PricingSetSpec& s, std::optional<std::size_t>* slack = nullptr) {
  detail::check_spec(s);
  const MarketSpec& m = *s.market;
  MeasureProgram p = martingale_system(m, s.allowed);
  std::optional<std::size_t> t;
  if (slack) {
    t = p.lp.add_variable("slack", std::nullopt, Rational(1), Rational(1));
    *slack = t;
  }
  if (s.price_f) {
    for (const auto& f : m.two_sided) {
      p.lp.add_constraint(p.expectation(f.payoff.values), Relation::kEqual, f.price, "price_" + f.name);
    }
  }
  for (std::size_t j = 0; j < m.buy_only.size(); ++j) {
    if (!s.g_cap[j].finite()) continue;
    LinearExpr e = p.expectation(m.buy_only[j].payoff.values);
    if (t && s.strict_g) e.add(*t, 1);
    p.lp.add_constraint(std::move(e), Relation::kLessEqual, s.g_cap[j].value(), "cap_" + m.buy_only[j].name);
  }
  for (std::size_t k = 0; k < m.american.size(); ++k) {
    if (!s.h_cap[k].finite()) continue;
    StoppingFamily fam;
    fam.name = "cap_" + m.american[k].name;
    fam.h = m.american[k].payoff;
    fam.measure = p.measure_exprs();
    if (t && s.strict_h) fam.offset.add(*t, 1);
    fam.rhs = s.h_cap[k].value();
    p.families.push_back(std::move(fam));
  }
  if (t && s.strict_floor) {
    for (std::size_t i = 0; i < p.q.size(); ++i) {
      if (s.floor.empty() || !s.floor[i]) continue;
      LinearExpr e(p.q[i], 1);
      e.add(*t, -1);
      p.lp.add_constraint(std::move(e), Relation::kGreaterEqual, 0, "floor_" + m.tree.id(m.tree.leaves()[i]));
    }
  }
  return p;
}

struct MaxSlackResult {
  LpStatus status = LpStatus::kInfeasible;
  /// Optimal uniform slack t (capped at 1); meaningful when status is optimal.
  Rational optimum = 0;
  /// Smallest strict cap slack at the witness (empty when there is no strict cap).
  std::optional<Rational> cap_slack;
  /// Smallest weight on the floor leaves at the witness.
  std::optional<Rational> floor_slack;
  Measure witness;
  RationalVector eps_g;
  RationalVector eps_h;
  CutLoopResult certificate;

  bool positive() const { return status == LpStatus::kOptimal && sgn(optimum) > 0; }
};

/// Evaluation of E_Q g and Snell values of every American option.
inline std::pair<RationalVector, RationalVector> option_values(const MarketSpec& m, const Measure& q) {
  RationalVector g, h;
  for (const auto& o : m.buy_only) g.push_back(expectation(q, o.payoff.values));
  for (const auto& o : m.american) h.push_back(snell_value(m.tree, q, o.payoff));
  return {g, h};
}

/// max t s.t. Q in the closed set, E g + t <= g_cap, Snell + t <= h_cap and
/// q >= t on the floor (for the families flagged strict), t <= 1.
inline MaxSlackResult max_slack(const PricingSetSpec& s) {
  std::optional<std::size_t> t;
  MeasureProgram p = pricing_program(s, &t);
  MaxSlackResult r;
  r.certificate = solve_with_families(std::move(p.lp), s.market->tree, p.families, s.caps);
  r.status = r.certificate.solution.status;
  if (r.status != LpStatus::kOptimal) return r;
  r.optimum = r.certificate.solution.x.at(*t);
  r.witness = p.measure(r.certificate.solution);
  const auto [gv, hv] = option_values(*s.market, r.witness);
  for (std::size_t j = 0; j < gv.size(); ++j) {
    r.eps_g.push_back(s.g_cap[j].finite() ? Rational(s.g_cap[j].value() - gv[j]) : Rational(1));
    if (s.strict_g && s.g_cap[j].finite()) r.cap_slack = r.cap_slack ? rmin(*r.cap_slack, r.eps_g.back()) : r.eps_g.back();
  }
  for (std::size_t k = 0; k < hv.size(); ++k) {
    r.eps_h.push_back(s.h_cap[k].finite() ? Rational(s.h_cap[k].value() - hv[k]) : Rational(1));
    if (s.strict_h && s.h_cap[k].finite()) r.cap_slack = r.cap_slack ? rmin(*r.cap_slack, r.eps_h.back()) : r.eps_h.back();
  }
  for (std::size_t i = 0; i < r.witness.size(); ++i) {
    if (s.floor.empty() || !s.floor[i]) continue;
    r.floor_slack = r.floor_slack ? rmin(*r.floor_slack, r.witness[i]) : r.witness[i];
  }
  return r;
}

struct MembershipReport {
  bool member = true;
  std::vector<std::string> violations;

  void fail(std::string what) {
    member = false;
    violations.push_back(std::move(what));
  }
};

/// Exact membership of q in the closed (strict = false) or open (strict = true) set.
inline MembershipReport membership(const Measure& q, const PricingSetSpec& s, bool strict) {
  detail::check_spec(s);
  const MarketSpec& m = *s.market;
  const EventTree& tree = m.tree;
  MembershipReport r;
  if (q.size() != tree.leaf_count()) {
    r.fail("measure has " + std::to_string(q.size()) + " weights for " + std::to_string(tree.leaf_count()) + " leaves");
    return r;
  }
  Rational total = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const std::string leaf = tree.id(tree.leaves()[i]);
    total += q[i];
    if (q[i] < 0) r.fail("negative weight at leaf '" + leaf + "'");
    if (!s.allowed[i] && sgn(q[i]) != 0) r.fail("mass outside the allowed support at leaf '" + leaf + "'");
    if (strict && s.strict_floor && !s.floor.empty() && s.floor[i] && sgn(q[i]) <= 0) {
      r.fail("no mass at support leaf '" + leaf + "'");
    }
  }
  if (total != 1) r.fail("total mass " + to_string(total) + " != 1");
  const RationalVector mass = node_masses(tree, q.weights);
  for (NodeId n : tree.decision_nodes()) {
    for (std::size_t l = 0; l < m.dim(); ++l) {
      Rational drift = 0;
      for (NodeId c : tree.children(n)) drift += mass[c] * (m.stock.at(c, l) - m.stock.at(n, l));
      if (sgn(drift) != 0) r.fail("martingale condition fails at node '" + tree.id(n) + "'");
    }
  }
  if (s.price_f) {
    for (const auto& f : m.two_sided) {
      if (expectation(q, f.payoff.values) != f.price) r.fail("two-sided option '" + f.name + "' mispriced");
    }
  }
  const auto [gv, hv] = option_values(m, q);
  for (std::size_t j = 0; j < gv.size(); ++j) {
    if (!s.g_cap[j].finite()) continue;
    const bool ok = (strict && s.strict_g) ? gv[j] < s.g_cap[j].value() : gv[j] <= s.g_cap[j].value();
    if (!ok) r.fail("buy-only option '" + m.buy_only[j].name + "': E_Q = " + to_string(gv[j]) + " vs cap " + s.g_cap[j].str());
  }
  for (std::size_t k = 0; k < hv.size(); ++k) {
    if (!s.h_cap[k].finite()) continue;
    const bool ok = (strict && s.strict_h) ? hv[k] < s.h_cap[k].value() : hv[k] <= s.h_cap[k].value();
    if (!ok) r.fail("American option '" + m.american[k].name + "': Snell value " + to_string(hv[k]) + " vs cap " + s.h_cap[k].str());
  }
  return r;
}

struct ClosurePolytope {
  Polytope polytope;
  /// Stopping times whose cap rows appear in the H-representation, per option.
  std::vector<std::vector<StoppingTime>> cap_rows;
  bool lazy = false;
};

/// H-representation of the closed pricing set in leaf-weight coordinates. In
/// lazy mode the returned polytope also carries its vertex list.
inline ClosurePolytope closure_polytope(const PricingSetSpec& s) {
  detail::check_spec(s);
  const MarketSpec& m = *s.market;
  const EventTree& tree = m.tree;
  const std::size_t n = tree.leaf_count();
  const MeasureProgram p = pricing_program(s);
  std::vector<HalfSpace> rows;
  for (const auto& c : p.lp.constraints) {
    HalfSpace h;
    h.a.assign(n, Rational(0));
    for (const auto& [v, coef] : c.expr.terms) h.a[v] += coef;
    h.rel = c.rel;
    h.b = c.rhs;
    rows.push_back(std::move(h));
  }
  for (std::size_t i = 0; i < n; ++i) {
    HalfSpace h;
    h.a.assign(n, Rational(0));
    h.a[i] = s.allowed[i] ? -1 : 1;
    h.rel = s.allowed[i] ? Relation::kLessEqual : Relation::kEqual;
    h.b = 0;
    rows.push_back(std::move(h));
  }
  ClosurePolytope out;
  out.cap_rows.resize(m.american.size());
  std::vector<std::size_t> family_option;
  for (std::size_t k = 0; k < m.american.size(); ++k) {
    if (s.h_cap[k].finite()) family_option.push_back(k);
  }
  const auto add_row = [&](std::size_t f, const StoppingTime& tau) {
    HalfSpace h;
    h.a = stopped_payoff(tree, tau, p.families[f].h);
    h.rel = Relation::kLessEqual;
    h.b = p.families[f].rhs;
    rows.push_back(std::move(h));
    out.cap_rows[family_option[f]].push_back(tau);
  };
  if (s.caps.enumerate(tree)) {
    if (!p.families.empty()) {
      const auto taus = enumerate_stopping_times(tree, s.caps.enumeration_cap);
      for (std::size_t f = 0; f < p.families.size(); ++f) {
        for (const auto& tau : taus) add_row(f, tau);
      }
    }
    out.polytope = Polytope::from_h(n, std::move(rows));
    return out;
  }
  out.lazy = true;
  std::vector<std::set<StoppingTime>> seen(p.families.size());
  for (std::size_t f = 0; f < p.families.size(); ++f) {
    for (int t : {0, tree.horizon()}) {
      const StoppingTime tau = constant_stopping_time(tree, t);
      if (seen[f].insert(tau).second) add_row(f, tau);
    }
  }
  while (true) {
    Polytope current = Polytope::from_h(n, rows);
    const auto verts = vertices(current);
    bool added = false;
    for (const auto& v : verts) {
      for (std::size_t f = 0; f < p.families.size(); ++f) {
        const SnellResult snell = snell_envelope(tree, Measure(v), p.families[f].h);
        if (snell.value > p.families[f].rhs && seen[f].insert(snell.greedy).second) {
          add_row(f, snell.greedy);
          added = true;
        }
      }
    }
    if (!added) {
      current.vertex_list = verts;
      current.has_v = true;
      out.polytope = std::move(current);
      return out;
    }
  }
}

inline std::vector<RationalVector> closure_vertices(const PricingSetSpec& s) {
  return vertices(closure_polytope(s).polytope);
}

/// Barycenter of the vertices; empty when the polytope is empty.
inline std::optional<Measure> barycenter(const std::vector<RationalVector>& verts) {
  if (verts.empty()) return std::nullopt;
  RationalVector c(verts.front().size(), Rational(0));
  for (const auto& v : verts) {
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += v[i];
  }
  for (auto& x : c) x /= static_cast<long>(verts.size());
  return Measure(c);
}

/// Planar image of the closed set under conditional one-step probabilities.
struct ParameterRegion {
  std::vector<std::string> params;
  std::size_t free_parameters = 0;
  /// Counter-clockwise polygon (or segment / point / empty).
  std::vector<RationalVector> polygon;
};

/// Number of free parameters of the martingale (and two-sided pricing) system
/// on the allowed leaves.
inline std::size_t free_parameter_count(const PricingSetSpec& s) {
  const MarketSpec& m = *s.market;
  MeasureProgram p = martingale_system(m, s.allowed);
  std::vector<RationalVector> rows;
  const std::size_t n = m.tree.leaf_count();
  std::size_t allowed = 0;
  for (std::size_t i = 0; i < n; ++i) allowed += s.allowed[i] ? 1 : 0;
  const auto push = [&](const LinearExpr& e) {
    RationalVector r(n, Rational(0));
    for (const auto& [v, c] : e.terms) {
      if (s.allowed[v]) r[v] += c;
    }
    rows.push_back(std::move(r));
  };
  for (const auto& c : p.lp.constraints) push(c.expr);
  if (s.price_f) {
    for (const auto& f : m.two_sided) push(p.expectation(f.payoff.values));
  }
  return allowed - matrix_rank(rows);
}

/// Region of the closed pricing set in coordinates Q(leaf)/Q(parent) for the
/// named leaves. Requires at most two free parameters and one coordinate per
/// free parameter; each parent's mass must be constant over the set.
inline ParameterRegion parameter_region(const PricingSetSpec& s, const std::vector<std::string>& leaf_params) {
  const MarketSpec& m = *s.market;
  const EventTree& tree = m.tree;
  ParameterRegion out;
  out.params = leaf_params;
  out.free_parameters = free_parameter_count(s);
  if (out.free_parameters > 2) {
    throw std::invalid_argument("parameter region needs at most 2 free parameters, market has " +
                                std::to_string(out.free_parameters));
  }
  if (leaf_params.size() != out.free_parameters) {
    throw std::invalid_argument("expected " + std::to_string(out.free_parameters) + " parameter leaves, got " +
                                std::to_string(leaf_params.size()));
  }
  std::vector<std::size_t> idx;
  for (const auto& name : leaf_params) {
    const auto node = tree.find(name);
    if (!node || !tree.is_leaf(*node)) throw std::invalid_argument("'" + name + "' is not a leaf");
    idx.push_back(tree.leaf_index(*node));
  }
  const auto verts = closure_vertices(s);
  std::vector<RationalVector> pts;
  std::optional<RationalVector> parent_mass;
  for (const auto& v : verts) {
    const RationalVector mass = node_masses(tree, v);
    RationalVector pm, pt;
    for (std::size_t i : idx) {
      const NodeId parent = *tree.parent(tree.leaves()[i]);
      pm.push_back(mass[parent]);
      if (sgn(mass[parent]) == 0) throw std::invalid_argument("parameter leaf has a zero-mass parent");
      pt.push_back(v[i] / mass[parent]);
    }
    if (parent_mass && *parent_mass != pm) {
      throw std::invalid_argument("parent mass varies over the set; coordinates are not affine");
    }
    parent_mass = pm;
    if (idx.size() == 1) pt.push_back(0);
    pts.push_back(std::move(pt));
  }
  if (idx.size() == 2) {
    out.polygon = planar_hull(pts);
  } else {
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (idx.size() == 1 && pts.size() > 2) pts = {pts.front(), pts.back()};
    for (auto& p : pts) p.resize(idx.size());
    out.polygon = pts;
  }
  return out;
}

}  // namespace semistatic
