#pragma once

// Markets with a finite family of priors. Quasi-sure statements hold
// pointwise on the union of the prior supports; a measure Q is dominated by
// the family when its support lies in that union.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "semistatic/exact_lp.hpp"
#include "semistatic/ftap.hpp"
#include "semistatic/hedging.hpp"
#include "semistatic/measures.hpp"
#include "semistatic/stopping.hpp"
#include "semistatic/tree_market.hpp"

namespace semistatic {

struct RobustSpec {
  MarketSpec market;
  std::vector<Measure> priors;

  void validate() const {
    if (priors.empty()) throw std::invalid_argument("prior set is empty");
    for (std::size_t i = 0; i < priors.size(); ++i) {
      if (priors[i].size() != market.tree.leaf_count()) {
        throw std::invalid_argument("prior " + std::to_string(i) + " does not match the leaf count");
      }
      if (!priors[i].is_probability()) throw std::invalid_argument("prior " + std::to_string(i) + " is not a probability");
    }
  }
};

inline LeafSet union_support(const std::vector<Measure>& priors) {
  if (priors.empty()) throw std::invalid_argument("prior set is empty");
  LeafSet u(priors.front().size(), false);
  for (const auto& p : priors) {
    const LeafSet s = p.support();
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = u[i] || s.at(i);
  }
  return u;
}

/// Martingale measures with support in `support`, two-sided options priced,
/// closed caps; no positivity requirement.
inline PricingSetSpec component_spec(const MarketSpec& m, const LeafSet& support, std::vector<ExtendedRational> g_cap,
                                     std::vector<ExtendedRational> h_cap, const CapOptions& caps = {}) {
  PricingSetSpec s = pricing_set_spec(m, caps);
  s.g_cap = std::move(g_cap);
  s.h_cap = std::move(h_cap);
  s.allowed = support;
  s.floor.clear();
  return s;
}

inline std::vector<ExtendedRational> quoted(const RationalVector& v) { return {v.begin(), v.end()}; }

/// One closed polytope per prior; the pricing set is their union.
inline std::vector<ClosurePolytope> robust_pricing_set(const RobustSpec& spec, const std::vector<ExtendedRational>& g_cap,
                                                       const std::vector<ExtendedRational>& h_cap,
                                                       const CapOptions& caps = {}) {
  spec.validate();
  std::vector<ClosurePolytope> out;
  for (const auto& p : spec.priors) out.push_back(closure_polytope(component_spec(spec.market, p.support(), g_cap, h_cap, caps)));
  return out;
}

/// Supports of the dual components: every prior, plus the union support when
/// no prior carries it (the family is read as its convex hull).
inline std::vector<LeafSet> hedge_components(const RobustSpec& spec) {
  std::vector<LeafSet> out;
  for (const auto& p : spec.priors) out.push_back(p.support());
  const LeafSet u = union_support(spec.priors);
  if (std::find(out.begin(), out.end(), u) == out.end()) out.push_back(u);
  return out;
}

struct RobustVerdict {
  ArbitrageVerdict verdict;
  /// Slack-maximization per prior: Q dominated by the family, positive on supp P.
  std::vector<MaxSlackResult> per_prior;
  bool holds() const { return verdict.verdict == Verdict::kNoArbitrage; }
};

namespace detail {

inline MarketSpec on_support(MarketSpec m, const LeafSet& support) {
  m.reference_support = support;
  return m;
}

inline MaxSlackResult prior_slack(const MarketSpec& m, const LeafSet& u, const Measure& prior, const CapOptions& caps) {
  PricingSetSpec s = pricing_set_spec(m, caps);
  s.allowed = u;
  s.floor = prior.support();
  return max_slack(s);
}

}  // namespace detail

/// Strict no-arbitrage quasi-surely, decided twice: by the strategy LP on
/// the union support and by one slack LP per prior (a dominated Q that is
/// positive on supp P with strict caps); the two must agree.
inline RobustVerdict check_sna_robust(const RobustSpec& spec, const CapOptions& caps = {}) {
  spec.validate();
  const LeafSet u = union_support(spec.priors);
  const MarketSpec m = detail::on_support(spec.market, u);
  RobustVerdict out;
  out.verdict = check_sna(m, caps);
  bool all = true;
  for (const auto& p : spec.priors) {
    out.per_prior.push_back(detail::prior_slack(m, u, p, caps));
    all = all && out.per_prior.back().positive();
  }
  if (all != out.holds()) throw VerificationError({"union-support verdict and per-prior slack LPs disagree"});
  if (all) {
    RationalVector mix(m.tree.leaf_count(), Rational(0));
    for (const auto& r : out.per_prior) {
      for (std::size_t i = 0; i < mix.size(); ++i) mix[i] += r.witness[i] / static_cast<long>(out.per_prior.size());
    }
    out.verdict.measure = Measure(mix);
    const auto [gv, hv] = option_values(m, *out.verdict.measure);
    out.verdict.eps_g.clear();
    out.verdict.eps_h.clear();
    for (std::size_t j = 0; j < gv.size(); ++j) out.verdict.eps_g.push_back(m.buy_only[j].price - gv[j]);
    for (std::size_t k = 0; k < hv.size(); ++k) out.verdict.eps_h.push_back(m.american[k].price - hv[k]);
  }
  return out;
}

struct RobustHedgeResult {
  HedgeResult hedge;
  std::vector<LeafSet> components;
  std::vector<ExtendedRational> component_values;
  std::vector<std::optional<Measure>> component_duals;
  std::optional<std::size_t> attaining;
  bool pricing_set_empty = false;
};

namespace detail {

inline MarketSpec without_american(MarketSpec m) {
  m.american.clear();
  return m;
}

inline void require_robust_hypothesis(const RobustSpec& spec, const CapOptions& caps) {
  RobustSpec base{without_american(spec.market), spec.priors};
  const RobustVerdict v = check_sna_robust(base, caps);
  if (!v.holds()) {
    for (const auto& r : v.per_prior) {
      if (!r.positive()) throw SnaRequired(r);
    }
    throw SnaRequired(MaxSlackResult{});
  }
}

inline RobustHedgeResult robust_hedge(const RobustSpec& spec, HedgeKind kind, RationalVector claim,
                                      std::optional<ScalarProcess> am, const CapOptions& caps) {
  spec.validate();
  require_robust_hypothesis(spec, caps);
  RobustHedgeResult out;
  HedgeResult& r = out.hedge;
  r.kind = kind;
  r.claim = std::move(claim);
  r.american_claim = std::move(am);
  r.support = union_support(spec.priors);
  solve_primal(spec.market, r);
  out.components = hedge_components(spec);
  r.dual_value = ExtendedRational::plus_infinity();
  for (std::size_t c = 0; c < out.components.size(); ++c) {
    HedgeResult part = r;
    part.dual.reset();
    solve_dual(spec.market, caps, out.components[c], part);
    out.component_values.push_back(part.dual_value);
    out.component_duals.push_back(part.dual);
    if (part.dual_value < r.dual_value) {
      r.dual_value = part.dual_value;
      r.dual = part.dual;
      r.cut_rounds = part.cut_rounds;
      out.attaining = c;
    }
  }
  out.pricing_set_empty = !out.attaining.has_value();
  finish(r);
  return out;
}

}  // namespace detail

/// Largest x with Phi + psi >= x quasi-surely; dual: minimum over the
/// prior components of min E_Q psi.
inline RobustHedgeResult sub_hedge_robust(const RobustSpec& spec, const TerminalClaim& psi, const CapOptions& caps = {}) {
  return detail::robust_hedge(spec, HedgeKind::kSubEuropean, psi.values, std::nullopt, caps);
}

inline RobustHedgeResult sub_hedge_robust(const RobustSpec& spec, const ScalarProcess& phi, const CapOptions& caps = {}) {
  return detail::robust_hedge(spec, HedgeKind::kSubAmerican, {}, phi, caps);
}

inline std::vector<std::string> robust_hedge_violations(const RobustSpec& spec, const RobustHedgeResult& r) {
  return hedge_violations(detail::on_support(spec.market, r.hedge.support), r.hedge);
}

struct DominatingMeasure {
  RationalVector g_tilde;
  RationalVector h_tilde;
  Measure q;
  /// Mixture weight used at each induction step (one per American option).
  RationalVector lambdas;
};

inline std::vector<std::string> dominating_violations(const RobustSpec& spec, const Measure& prior,
                                                      const DominatingMeasure& d) {
  const MarketSpec& m = spec.market;
  std::vector<std::string> out;
  const LeafSet u = union_support(spec.priors);
  for (std::size_t j = 0; j < d.g_tilde.size(); ++j) {
    if (!(d.g_tilde[j] < m.buy_only[j].price)) out.push_back("g-tilde not below the price of '" + m.buy_only[j].name + "'");
  }
  for (std::size_t k = 0; k < d.h_tilde.size(); ++k) {
    if (!(d.h_tilde[k] < m.american[k].price)) out.push_back("h-tilde not below the price of '" + m.american[k].name + "'");
  }
  const PricingSetSpec s = component_spec(m, u, quoted(d.g_tilde), quoted(d.h_tilde));
  for (const auto& v : membership(d.q, s, false).violations) out.push_back(v);
  for (std::size_t i = 0; i < prior.size(); ++i) {
    if (prior[i] > 0 && sgn(d.q[i]) <= 0) out.push_back("Q misses leaf '" + m.tree.id(m.tree.leaves()[i]) + "' charged by P");
  }
  return out;
}

namespace detail {

inline DominatingMeasure dominate(const RobustSpec& spec, const Measure& prior, std::size_t n, const CapOptions& caps) {
  const MarketSpec& full = spec.market;
  const LeafSet u = union_support(spec.priors);
  MarketSpec m = full;
  m.american.resize(n);
  if (n == 0) {
    const MaxSlackResult r = prior_slack(m, u, prior, caps);
    if (!r.positive()) throw SnaRequired(r);
    DominatingMeasure d;
    d.q = r.witness;
    for (const auto& g : m.buy_only) d.g_tilde.push_back(expectation(d.q, g.payoff.values));
    return d;
  }
  const DominatingMeasure star = dominate(spec, prior, n - 1, caps);
  RobustSpec prev{m, spec.priors};
  prev.market.american.resize(n - 1);
  const AmericanOption& hn = full.american[n - 1];
  const RobustHedgeResult pi = sub_hedge_robust(prev, hn.payoff, caps);
  if (!pi.hedge.price.finite() || !pi.hedge.dual) throw std::logic_error("American sub-hedge price is not finite");
  const Rational hbar = hn.price;
  if (!(pi.hedge.price.value() < hbar)) {
    throw std::runtime_error("sub-hedge price of '" + hn.name + "' is not below its price");
  }
  const Rational hhat = (pi.hedge.price.value() + hbar) / 2;
  const Rational mid = (hhat + hbar) / 2;
  Rational c = rmax(hbar, -hbar);
  for (const auto& v : hn.payoff.values) c = rmax(c, rmax(v, -v));
  c += 1;
  const Rational lambda = (hbar - mid) / (2 * (c - mid));
  const Measure& qhat = *pi.hedge.dual;
  DominatingMeasure d;
  RationalVector w(qhat.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = lambda * star.q[i] + (1 - lambda) * qhat[i];
  d.q = Measure(w);
  for (std::size_t j = 0; j < m.buy_only.size(); ++j) {
    d.g_tilde.push_back(lambda * star.g_tilde[j] + (1 - lambda) * m.buy_only[j].price);
  }
  for (std::size_t k = 0; k + 1 < n; ++k) d.h_tilde.push_back(lambda * star.h_tilde[k] + (1 - lambda) * m.american[k].price);
  d.h_tilde.push_back(lambda * c + (1 - lambda) * mid);
  d.lambdas = star.lambdas;
  d.lambdas.push_back(lambda);
  return d;
}

}  // namespace detail

/// A measure dominating `prior` with E g <= g-tilde < g-bar and Snell values
/// <= h-tilde < h-bar, built by induction on the number of American options:
/// mixes the measure for the first n-1 options with a near-optimal measure
/// for the American sub-hedge of option n. Every output inequality is
/// re-verified exactly.
inline DominatingMeasure dominating_measure(const RobustSpec& spec, const Measure& prior, const CapOptions& caps = {},
                                            bool check_hypothesis = true) {
  spec.validate();
  if (check_hypothesis) {
    const RobustVerdict v = check_sna_robust(spec, caps);
    if (!v.holds()) throw SnaRequired(MaxSlackResult{});
  }
  DominatingMeasure d = detail::dominate(spec, prior, spec.market.american.size(), caps);
  auto bad = dominating_violations(spec, prior, d);
  if (!bad.empty()) throw VerificationError(std::move(bad));
  return d;
}

struct MinimaxResult {
  Rational lhs;
  Rational mid;
  Rational rhs;
  /// Convex weights of the attaining R* over the vertices.
  RationalVector weights;
  Measure r_star;
  /// Exercise strategies attaining the left-hand side.
  std::vector<LiquidatingStrategy> mu;

  bool consistent() const { return lhs == mid && mid == rhs; }
};

/// sup_mu inf_R, inf_R sup_mu and inf_R sum_k sup_tau over the convex hull of
/// the given vertex measures, each by its own LP.
inline MinimaxResult minimax_check(const EventTree& tree, const std::vector<Measure>& vertices,
                                   const std::vector<ScalarProcess>& hs, const CapOptions& caps = {}) {
  if (vertices.empty()) throw std::invalid_argument("minimax: no vertex measures");
  for (const auto& v : vertices) {
    if (v.size() != tree.leaf_count()) throw std::invalid_argument("minimax: vertex does not match the leaf count");
  }
  for (const auto& h : hs) {
    if (h.size() != tree.size()) throw std::invalid_argument("minimax: process does not match the node count");
  }
  std::vector<RationalVector> masses;
  for (const auto& v : vertices) masses.push_back(node_masses(tree, v.weights));
  MinimaxResult out;

  // sup over liquidating strategies of the worst vertex.
  {
    LpProblem lp;
    const std::size_t t = lp.add_free_variable("t", 1);
    std::vector<std::vector<std::size_t>> eta(hs.size());
    for (std::size_t k = 0; k < hs.size(); ++k) {
      for (NodeId n = 0; n < tree.size(); ++n) {
        eta[k].push_back(lp.add_variable("eta" + std::to_string(k) + "_" + tree.id(n)));
      }
      for (std::size_t i = 0; i < tree.leaf_count(); ++i) {
        LinearExpr e;
        for (NodeId n : tree.path(i)) e.add(eta[k][n], 1);
        lp.add_constraint(std::move(e), Relation::kEqual, 1);
      }
    }
    for (std::size_t v = 0; v < vertices.size(); ++v) {
      LinearExpr e;
      for (std::size_t k = 0; k < hs.size(); ++k) {
        for (NodeId n = 0; n < tree.size(); ++n) e.add(eta[k][n], hs[k][n] * masses[v][n]);
      }
      e.add(t, -1);
      lp.add_constraint(std::move(e), Relation::kGreaterEqual, 0, "vertex" + std::to_string(v));
    }
    const LpSolution s = solve(lp);
    detail::check_lp(lp, s, "minimax sup-inf LP");
    out.lhs = s.objective;
    for (std::size_t k = 0; k < hs.size(); ++k) {
      ScalarProcess e(tree.size());
      for (NodeId n = 0; n < tree.size(); ++n) e[n] = s.x[eta[k][n]];
      out.mu.push_back({e});
    }
  }

  // inf over R of the LP dual of sup_mu: sum_leaf w^k >= h^k(n) R(n) below every node n.
  {
    LpProblem lp;
    lp.sense = Sense::kMinimize;
    std::vector<std::size_t> lam;
    LinearExpr total;
    for (std::size_t v = 0; v < vertices.size(); ++v) {
      lam.push_back(lp.add_variable("lambda" + std::to_string(v)));
      total.add(lam.back(), 1);
    }
    lp.add_constraint(std::move(total), Relation::kEqual, 1, "simplex");
    for (std::size_t k = 0; k < hs.size(); ++k) {
      std::vector<std::size_t> w;
      for (std::size_t i = 0; i < tree.leaf_count(); ++i) {
        w.push_back(lp.add_free_variable("w" + std::to_string(k) + "_" + tree.id(tree.leaves()[i]), 1));
      }
      for (NodeId n = 0; n < tree.size(); ++n) {
        LinearExpr e;
        const auto [b, en] = tree.leaf_range(n);
        for (std::size_t i = b; i < en; ++i) e.add(w[i], 1);
        for (std::size_t v = 0; v < vertices.size(); ++v) e.add(lam[v], -hs[k][n] * masses[v][n]);
        lp.add_constraint(std::move(e), Relation::kGreaterEqual, 0);
      }
    }
    const LpSolution s = solve(lp);
    detail::check_lp(lp, s, "minimax inf-sup LP");
    out.mid = s.objective;
  }

  // inf over R of the sum of Snell values, one epigraph family per option.
  {
    LpProblem lp;
    lp.sense = Sense::kMinimize;
    std::vector<std::size_t> lam;
    LinearExpr total;
    for (std::size_t v = 0; v < vertices.size(); ++v) {
      lam.push_back(lp.add_variable("lambda" + std::to_string(v)));
      total.add(lam.back(), 1);
    }
    lp.add_constraint(std::move(total), Relation::kEqual, 1, "simplex");
    std::vector<LinearExpr> r(tree.leaf_count());
    for (std::size_t i = 0; i < tree.leaf_count(); ++i) {
      for (std::size_t v = 0; v < vertices.size(); ++v) r[i].add(lam[v], vertices[v][i]);
    }
    std::vector<StoppingFamily> families;
    for (std::size_t k = 0; k < hs.size(); ++k) {
      StoppingFamily f;
      f.name = "z" + std::to_string(k);
      f.h = hs[k];
      f.measure = r;
      f.offset.add(lp.add_free_variable(f.name, 1), -1);
      families.push_back(std::move(f));
    }
    const CutLoopResult cl = solve_with_families(std::move(lp), tree, families, caps);
    detail::check_lp(cl.lp, cl.solution, "minimax Snell LP");
    out.rhs = cl.solution.objective;
    RationalVector w(tree.leaf_count(), Rational(0));
    for (std::size_t v = 0; v < vertices.size(); ++v) {
      out.weights.push_back(cl.solution.x[lam[v]]);
      for (std::size_t i = 0; i < w.size(); ++i) w[i] += out.weights.back() * vertices[v][i];
    }
    out.r_star = Measure(w);
  }
  return out;
}

}  // namespace semistatic
