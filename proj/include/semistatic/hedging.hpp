#pragma once

// Sub- and super-hedging prices. Every price is computed twice: as the optimum
// of a strategy LP (primal) and as an optimum over the closed pricing polytope
// (dual); the two values must agree exactly.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "semistatic/exact_lp.hpp"
#include "semistatic/market_io.hpp"
#include "semistatic/measures.hpp"
#include "semistatic/stopping.hpp"
#include "semistatic/strategy_lp.hpp"
#include "semistatic/tree_market.hpp"

namespace semistatic {

enum class HedgeKind { kSubEuropean, kSubAmerican, kSuperDivisible, kSuperIndivisible };

inline std::string to_string(HedgeKind k) {
  switch (k) {
    case HedgeKind::kSubEuropean: return "sub-eu";
    case HedgeKind::kSubAmerican: return "sub-am";
    case HedgeKind::kSuperDivisible: return "super-div";
    default: return "super-indiv";
  }
}

/// Strict no-arbitrage does not hold; carries the failed slack computation.
class SnaRequired : public std::runtime_error {
 public:
  explicit SnaRequired(MaxSlackResult r)
      : std::runtime_error("strict no-arbitrage fails (maximal uniform slack is not positive)"), slack(std::move(r)) {}
  MaxSlackResult slack;
};

class VerificationError : public std::runtime_error {
 public:
  explicit VerificationError(std::vector<std::string> v)
      : std::runtime_error(join(v)), violations(std::move(v)) {}
  std::vector<std::string> violations;

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "certificate verification failed";
    for (const auto& x : v) s += "; " + x;
    return s;
  }
};

struct HedgeOptions {
  CapOptions caps;
  bool require_sna = true;
};

/// Optimal value of the indivisible super-hedge for one stopping time.
struct TauValue {
  StoppingTime tau;
  ExtendedRational value;
  Rational c = 0;
};

struct HedgeResult {
  HedgeKind kind = HedgeKind::kSubEuropean;
  ExtendedRational price;
  ExtendedRational dual_value;
  Rational gap = 0;
  HedgePortfolio primal;
  std::optional<LiquidatingStrategy> eta;
  std::optional<Measure> dual;
  RationalVector claim;
  std::optional<ScalarProcess> american_claim;
  /// Leaves on which the pointwise hedging inequality is imposed.
  LeafSet support;
  std::optional<StoppingTime> tau;
  std::vector<TauValue> per_tau;
  std::size_t cut_rounds = 0;
};

/// The market in which American option k is always exercised at tau: it
/// becomes the last buy-only European option at the same price.
inline MarketSpec fix_exercise(const MarketSpec& m, std::size_t k, const StoppingTime& tau) {
  MarketSpec out = m;
  const AmericanOption& h = m.american.at(k);
  out.buy_only.push_back({h.name + "@tau", TerminalClaim(stopped_payoff(m.tree, tau, h.payoff)), h.price});
  out.american.erase(out.american.begin() + static_cast<std::ptrdiff_t>(k));
  return out;
}

namespace detail {

inline void require_sna(const MarketSpec& m, const HedgeOptions& o) {
  if (!o.require_sna) return;
  MaxSlackResult r = max_slack(pricing_set_spec(m, o.caps));
  if (!r.positive()) throw SnaRequired(std::move(r));
}

inline ExtendedRational lp_value(const LpSolution& s, Sense sense) {
  switch (s.status) {
    case LpStatus::kOptimal: return s.objective;
    case LpStatus::kUnbounded:
      return sense == Sense::kMaximize ? ExtendedRational::plus_infinity() : ExtendedRational::minus_infinity();
    default:
      return sense == Sense::kMaximize ? ExtendedRational::minus_infinity() : ExtendedRational::plus_infinity();
  }
}

inline void check_lp(const LpProblem& lp, const LpSolution& s, const char* what) {
  const std::string err = verify_certificate(lp, s);
  if (!err.empty()) throw VerificationError({std::string(what) + ": " + err});
}

/// Strategy LP: sub kinds maximize x with Phi + claim >= x, super kinds
/// minimize x with x + Phi >= claim, on every support leaf.
inline void solve_primal(const MarketSpec& m, HedgeResult& r) {
  const bool sub = r.kind == HedgeKind::kSubEuropean || r.kind == HedgeKind::kSubAmerican;
  StrategyOptions o;
  if (r.kind == HedgeKind::kSubAmerican) o.exercised_claim = *r.american_claim;
  StrategyProgram prog(m, o);
  prog.lp.sense = sub ? Sense::kMaximize : Sense::kMinimize;
  const std::size_t x = prog.lp.add_free_variable("x", 1);
  const EventTree& t = m.tree;
  for (std::size_t i = 0; i < t.leaf_count(); ++i) {
    if (!r.support[i]) continue;
    LinearExpr e = prog.phi(i);
    Rational rhs = 0;
    if (r.kind == HedgeKind::kSubAmerican) {
      e.add(prog.exercised_value(i));
    } else if (sub) {
      rhs = -r.claim[i];
    } else {
      rhs = r.claim[i];
    }
    e.add(x, sub ? -1 : 1);
    prog.lp.add_constraint(std::move(e), Relation::kGreaterEqual, rhs, "hedge_" + t.id(t.leaves()[i]));
  }
  const LpSolution s = solve(prog.lp);
  check_lp(prog.lp, s, "strategy LP");
  r.price = lp_value(s, prog.lp.sense);
  if (s.status == LpStatus::kOptimal) {
    r.primal = prog.portfolio(s);
    if (r.kind == HedgeKind::kSubAmerican) r.eta = prog.exercise(s);
  }
}

/// Measure LP over the closed pricing polytope with mass confined to
/// `allowed`: min (sub) or max (super) of E_Q claim, or min over Q of the
/// Snell value via an epigraph variable.
inline void solve_dual(const MarketSpec& m, const CapOptions& caps, const LeafSet& allowed, HedgeResult& r) {
  PricingSetSpec spec = pricing_set_spec(m, caps);
  spec.allowed = allowed;
  MeasureProgram p = pricing_program(spec);
  const bool sub = r.kind == HedgeKind::kSubEuropean || r.kind == HedgeKind::kSubAmerican;
  p.lp.sense = sub ? Sense::kMinimize : Sense::kMaximize;
  if (r.kind == HedgeKind::kSubAmerican) {
    const std::size_t z = p.lp.add_free_variable("z", 1);
    StoppingFamily epi;
    epi.name = "epigraph";
    epi.h = *r.american_claim;
    epi.measure = p.measure_exprs();
    epi.offset.add(z, -1);
    p.families.push_back(std::move(epi));
  } else {
    p.lp.set_objective(p.expectation(r.claim));
  }
  CutLoopResult cl = solve_with_families(std::move(p.lp), m.tree, p.families, caps);
  check_lp(cl.lp, cl.solution, "measure LP");
  r.cut_rounds = cl.rounds;
  r.dual_value = lp_value(cl.solution, cl.lp.sense);
  if (cl.solution.status == LpStatus::kOptimal) r.dual = p.measure(cl.solution);
}

inline void finish(HedgeResult& r) {
  if (r.price.finite() && r.dual_value.finite()) {
    r.gap = r.price.value() - r.dual_value.value();
  } else {
    r.gap = 0;
  }
}

inline HedgeResult hedge(const MarketSpec& m, HedgeKind kind, RationalVector claim, std::optional<ScalarProcess> am,
                         const HedgeOptions& o) {
  require_sna(m, o);
  HedgeResult r;
  r.kind = kind;
  r.claim = std::move(claim);
  r.american_claim = std::move(am);
  r.support = m.reference_support;
  solve_primal(m, r);
  solve_dual(m, o.caps, r.support, r);
  finish(r);
  return r;
}

}  // namespace detail

/// Largest x with Phi + psi >= x on the reference support.
inline HedgeResult sub_hedge_european(const MarketSpec& m, const TerminalClaim& psi, const HedgeOptions& o = {}) {
  return detail::hedge(m, HedgeKind::kSubEuropean, psi.values, std::nullopt, o);
}

/// Largest x with Phi + eta(phi) >= x for some liquidating strategy eta.
inline HedgeResult sub_hedge_american(const MarketSpec& m, const ScalarProcess& phi, const HedgeOptions& o = {}) {
  return detail::hedge(m, HedgeKind::kSubAmerican, {}, phi, o);
}

/// Smallest x with x + Phi >= psi, American options held in divisible units.
inline HedgeResult super_hedge_divisible(const MarketSpec& m, const TerminalClaim& psi, const HedgeOptions& o = {}) {
  return detail::hedge(m, HedgeKind::kSuperDivisible, psi.values, std::nullopt, o);
}

/// Smallest x with x + Phi >= psi when every unit of the American option is
/// exercised at one common stopping time: the minimum over tau of the
/// super-hedge in the market where the option pays h_tau. With
/// `whole_units = false` the units may be exercised separately, which is the
/// divisible problem. At most one American option is supported.
inline HedgeResult super_hedge_indivisible(const MarketSpec& m, const TerminalClaim& psi, bool whole_units = true,
                                           const HedgeOptions& o = {}) {
  if (!whole_units || m.american.empty()) {
    HedgeResult r = super_hedge_divisible(m, psi, o);
    r.kind = HedgeKind::kSuperIndivisible;
    return r;
  }
  if (m.american.size() > 1) {
    throw std::invalid_argument("indivisible super-hedging supports a single American option");
  }
  detail::require_sna(m, o);
  HedgeOptions inner = o;
  inner.require_sna = false;
  HedgeResult best;
  best.kind = HedgeKind::kSuperIndivisible;
  best.claim = psi.values;
  best.support = m.reference_support;
  best.price = ExtendedRational::plus_infinity();
  best.dual_value = ExtendedRational::plus_infinity();
  std::vector<TauValue> per_tau;
  for (const StoppingTime& tau : enumerate_stopping_times(m.tree, o.caps.enumeration_cap)) {
    const MarketSpec fixed = fix_exercise(m, 0, tau);
    HedgeResult r = super_hedge_divisible(fixed, psi, inner);
    per_tau.push_back({tau, r.price, r.price.finite() ? r.primal.b.back() : Rational(0)});
    if (best.tau && !(r.price < best.price)) continue;
    best.price = r.price;
    best.dual_value = r.dual_value;
    best.dual = r.dual;
    best.tau = tau;
    best.cut_rounds = r.cut_rounds;
    if (r.price.finite()) {
      best.primal = HedgePortfolio::zero(m);
      best.primal.H = r.primal.H;
      best.primal.a = r.primal.a;
      best.primal.b.assign(r.primal.b.begin(), r.primal.b.end() - 1);
      best.primal.c[0] = r.primal.b.back();
      best.primal.mu[0] = as_liquidating(m.tree, tau);
    }
  }
  best.per_tau = std::move(per_tau);
  detail::finish(best);
  return best;
}

/// Every violated condition of a hedge result, each naming its leaf or
/// constraint; empty when the result re-verifies.
inline std::vector<std::string> hedge_violations(const MarketSpec& m, const HedgeResult& r) {
  std::vector<std::string> v;
  const EventTree& t = m.tree;
  if (r.gap != 0) v.push_back("duality gap " + to_string(r.gap));
  if (!(r.price == r.dual_value)) v.push_back("primal value " + r.price.str() + " != dual value " + r.dual_value.str());
  if (!r.price.finite()) return v;
  const Rational x = r.price.value();
  if (!is_admissible(m, r.primal)) v.push_back("primal portfolio is not admissible");
  if (r.eta && !is_valid_liquidating(t, *r.eta)) v.push_back("exercise strategy eta is not liquidating");
  if (r.kind == HedgeKind::kSubAmerican && !r.eta) v.push_back("missing exercise strategy eta");
  if (!v.empty()) return v;
  for (std::size_t i = 0; i < t.leaf_count(); ++i) {
    if (!r.support[i]) continue;
    const std::string leaf = t.id(t.leaves()[i]);
    const Rational phi = portfolio_value(m, r.primal, i);
    switch (r.kind) {
      case HedgeKind::kSubEuropean:
        if (phi + r.claim[i] < x) v.push_back("sub-hedge fails at leaf '" + leaf + "'");
        break;
      case HedgeKind::kSubAmerican:
        if (phi + liquidate_payoff(t, *r.eta, *r.american_claim, i) < x) {
          v.push_back("sub-hedge fails at leaf '" + leaf + "'");
        }
        break;
      default:
        if (x + phi < r.claim[i]) v.push_back("super-hedge fails at leaf '" + leaf + "'");
    }
  }
  if (!r.dual) {
    v.push_back("missing dual measure");
    return v;
  }
  std::optional<MarketSpec> fixed;
  if (r.kind == HedgeKind::kSuperIndivisible && r.tau) fixed = fix_exercise(m, 0, *r.tau);
  const MarketSpec& dm = fixed ? *fixed : m;
  PricingSetSpec spec = pricing_set_spec(dm);
  spec.allowed = r.support;
  for (const auto& s : membership(*r.dual, spec, false).violations) v.push_back("dual: " + s);
  const Rational value = r.kind == HedgeKind::kSubAmerican ? snell_value(t, *r.dual, *r.american_claim)
                                                           : expectation(*r.dual, r.claim);
  if (value != r.dual_value.value()) {
    v.push_back("dual objective " + to_string(value) + " != reported dual value " + r.dual_value.str());
  }
  return v;
}

inline Json portfolio_to_json(const MarketSpec& m, const HedgePortfolio& p) {
  const EventTree& t = m.tree;
  Json j;
  Json h = Json::object();
  for (NodeId n : t.decision_nodes()) {
    Json row = Json::array();
    for (std::size_t l = 0; l < m.dim(); ++l) row.push_back(to_string(p.H.at(n, l)));
    h[t.id(n)] = row;
  }
  j["H"] = h;
  Json a = Json::object(), b = Json::object(), c = Json::object(), mu = Json::object();
  for (std::size_t i = 0; i < m.two_sided.size(); ++i) a[m.two_sided[i].name] = to_string(p.a[i]);
  for (std::size_t i = 0; i < m.buy_only.size(); ++i) b[m.buy_only[i].name] = to_string(p.b[i]);
  for (std::size_t i = 0; i < m.american.size(); ++i) {
    c[m.american[i].name] = to_string(p.c[i]);
    mu[m.american[i].name] = detail::node_payoff_json(t, p.mu[i].eta.values);
  }
  j["a"] = a;
  j["b"] = b;
  j["c"] = c;
  j["mu"] = mu;
  return j;
}

inline Json hedge_to_json(const MarketSpec& m, const HedgeResult& r) {
  const EventTree& t = m.tree;
  Json j;
  j["kind"] = to_string(r.kind);
  j["price"] = r.price.str();
  j["dual_value"] = r.dual_value.str();
  j["gap"] = to_string(r.gap);
  if (r.price.finite()) {
    Json p = portfolio_to_json(m, r.primal);
    if (r.eta) p["eta"] = detail::node_payoff_json(t, r.eta->eta.values);
    j["primal"] = p;
  }
  if (r.dual) j["dual"] = detail::leaf_payoff_json(t, r.dual->weights);
  if (r.tau) {
    Json stops = Json::array();
    for (NodeId n : t.preorder()) {
      if (r.tau->stop[n]) stops.push_back(t.id(n));
    }
    j["tau"] = stops;
  }
  if (!r.per_tau.empty()) {
    Json arr = Json::array();
    for (const auto& pt : r.per_tau) {
      Json stops = Json::array();
      for (NodeId n : t.preorder()) {
        if (pt.tau.stop[n]) stops.push_back(t.id(n));
      }
      arr.push_back({{"tau", stops}, {"value", pt.value.str()}, {"c", to_string(pt.c)}});
    }
    j["per_tau"] = arr;
  }
  j["cut_rounds"] = r.cut_rounds;
  return j;
}

/// Re-verifies primal feasibility leaf by leaf, dual membership and the exact
/// value identity; throws VerificationError on any violation, otherwise
/// returns the machine-readable certificate.
inline Json duality_gap_report(const MarketSpec& m, const HedgeResult& r) {
  auto v = hedge_violations(m, r);
  if (!v.empty()) throw VerificationError(std::move(v));
  Json j = hedge_to_json(m, r);
  j["verified"] = true;
  return j;
}

}  // namespace semistatic
