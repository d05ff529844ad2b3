#pragma once

// No-arbitrage verdicts with independently checkable certificates: an
// arbitrage portfolio, or a pricing measure with its slacks.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "semistatic/exact_lp.hpp"
#include "semistatic/hedging.hpp"
#include "semistatic/measures.hpp"
#include "semistatic/stopping.hpp"
#include "semistatic/strategy_lp.hpp"
#include "semistatic/tree_market.hpp"

namespace semistatic {

enum class Verdict { kNoArbitrage, kArbitrage, kStrictNoArbitrageFails };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kNoArbitrage: return "NO_ARBITRAGE";
    case Verdict::kArbitrage: return "ARBITRAGE";
    default: return "STRICT_NO_ARBITRAGE_FAILS";
  }
}

struct ArbitrageVerdict {
  Verdict verdict = Verdict::kNoArbitrage;
  /// True for strict no-arbitrage checks: the measure must satisfy the strict caps.
  bool strict = false;
  RationalVector g_prices;
  RationalVector h_prices;
  LeafSet support;
  std::optional<Measure> measure;
  Rational slack = 0;
  RationalVector eps_g;
  RationalVector eps_h;
  std::optional<HedgePortfolio> portfolio;
  /// Set by the indivisible check: no-arbitrage then holds per stopping time
  /// and no single pricing measure is returned.
  bool indivisible = false;
  /// Exercise times of the American options in an indivisible arbitrage.
  std::vector<StoppingTime> taus;
};

namespace detail {

inline PricingSetSpec na_spec(const MarketSpec& m, const RationalVector& g, const RationalVector& h,
                              const LeafSet& support, const CapOptions& caps, bool strict) {
  PricingSetSpec s = pricing_set_spec(m, caps);
  s.g_cap.assign(g.begin(), g.end());
  s.h_cap.assign(h.begin(), h.end());
  s.allowed = support;
  s.floor = support;
  s.strict_g = strict;
  s.strict_h = strict;
  return s;
}

/// max objective over strategies with Phi >= 0 on the support and
/// objective <= 1; objective = sum of Phi over the support, plus the
/// buy-only mass when `with_mass`.
inline std::pair<LpSolution, HedgePortfolio> cone_lp(const MarketSpec& m, const RationalVector& g,
                                                     const RationalVector& h, const LeafSet& support,
                                                     bool with_mass) {
  StrategyOptions o;
  o.g_prices = g;
  o.h_prices = h;
  StrategyProgram prog(m, o);
  const EventTree& t = m.tree;
  LinearExpr total;
  for (std::size_t i = 0; i < t.leaf_count(); ++i) {
    if (!support[i]) continue;
    LinearExpr e = prog.phi(i);
    total.add(e);
    prog.lp.add_constraint(std::move(e), Relation::kGreaterEqual, 0, "nonneg_" + t.id(t.leaves()[i]));
  }
  if (with_mass) total.add(prog.buy_only_mass());
  prog.lp.add_constraint(total, Relation::kLessEqual, 1, "normalization");
  prog.lp.set_objective(total);
  LpSolution s = solve(prog.lp);
  const std::string err = verify_certificate(prog.lp, s);
  if (!err.empty()) throw VerificationError({"no-arbitrage LP: " + err});
  if (s.status != LpStatus::kOptimal) throw std::logic_error("no-arbitrage LP is not bounded and feasible");
  HedgePortfolio p = prog.portfolio(s);
  return {std::move(s), std::move(p)};
}

inline void require_support(const MarketSpec& m, const LeafSet& support) {
  if (support.size() != m.tree.leaf_count()) throw std::invalid_argument("support does not match the leaf count");
  if (count(support) == 0) throw std::invalid_argument("support is empty");
}

}  // namespace detail

/// No arbitrage at the given buy-only and American prices on `support`.
inline ArbitrageVerdict check_na(const MarketSpec& m, const RationalVector& g_prices, const RationalVector& h_prices,
                                 const LeafSet& support, const CapOptions& caps = {}) {
  detail::require_support(m, support);
  ArbitrageVerdict v;
  v.g_prices = g_prices;
  v.h_prices = h_prices;
  v.support = support;
  auto [sol, portfolio] = detail::cone_lp(m, g_prices, h_prices, support, false);
  const MaxSlackResult ms = max_slack(detail::na_spec(m, g_prices, h_prices, support, caps, false));
  if (sgn(sol.objective) > 0) {
    if (ms.positive()) throw VerificationError({"arbitrage LP and equivalent-measure LP disagree"});
    v.verdict = Verdict::kArbitrage;
    v.portfolio = std::move(portfolio);
    return v;
  }
  if (!ms.positive()) throw VerificationError({"no arbitrage found but no equivalent pricing measure exists"});
  v.verdict = Verdict::kNoArbitrage;
  v.measure = ms.witness;
  v.slack = ms.optimum;
  v.eps_g = ms.eps_g;
  v.eps_h = ms.eps_h;
  return v;
}

inline ArbitrageVerdict check_na(const MarketSpec& m, const CapOptions& caps = {}) {
  return check_na(m, m.buy_only_prices(), m.american_prices(), m.reference_support, caps);
}

/// Strict no-arbitrage at the quoted prices. The strategy LP adds the
/// buy-only mass to the objective: a positive optimum is an arbitrage when
/// the terminal value is nonzero, and otherwise a position that becomes an
/// arbitrage after any decrease of the buy-only prices.
inline ArbitrageVerdict check_sna(const MarketSpec& m, const CapOptions& caps = {}) {
  const LeafSet& support = m.reference_support;
  detail::require_support(m, support);
  ArbitrageVerdict v;
  v.strict = true;
  v.g_prices = m.buy_only_prices();
  v.h_prices = m.american_prices();
  v.support = support;
  auto [sol, portfolio] = detail::cone_lp(m, v.g_prices, v.h_prices, support, true);
  const MaxSlackResult ms = max_slack(pricing_set_spec(m, caps));
  if (sgn(sol.objective) == 0) {
    if (!ms.positive()) throw VerificationError({"strategy LP finds no strict arbitrage but the pricing set is empty"});
    v.verdict = Verdict::kNoArbitrage;
    v.measure = ms.witness;
    v.slack = ms.optimum;
    v.eps_g = ms.eps_g;
    v.eps_h = ms.eps_h;
    return v;
  }
  if (ms.positive()) throw VerificationError({"strategy LP finds a strict arbitrage but the pricing set is nonempty"});
  bool nonzero = false;
  for (std::size_t i = 0; i < m.tree.leaf_count(); ++i) {
    if (support[i] && sgn(portfolio_value(m, portfolio, i)) != 0) nonzero = true;
  }
  v.verdict = nonzero ? Verdict::kArbitrage : Verdict::kStrictNoArbitrageFails;
  v.portfolio = std::move(portfolio);
  return v;
}

/// The slack-maximal pricing measure: full support, f priced exactly, g and
/// every American option strictly below their prices.
inline Measure find_pricing_measure(const MarketSpec& m, const CapOptions& caps = {}) {
  const MaxSlackResult ms = max_slack(pricing_set_spec(m, caps));
  if (!ms.positive()) throw SnaRequired(ms);
  return ms.witness;
}

/// No arbitrage when every American position is exercised at a single
/// stopping time: checked for every tuple of stopping times in the market
/// where option k pays h^k at tau^k.
inline ArbitrageVerdict check_na_indivisible(const MarketSpec& m, const RationalVector& g_prices,
                                             const RationalVector& h_prices, const LeafSet& support,
                                             const CapOptions& caps = {}) {
  if (m.american.empty()) return check_na(m, g_prices, h_prices, support, caps);
  const auto taus = enumerate_stopping_times(m.tree, caps.enumeration_cap);
  std::vector<std::size_t> pick(m.american.size(), 0);
  std::optional<ArbitrageVerdict> first;
  while (true) {
    MarketSpec fixed = m;
    RationalVector g = g_prices;
    for (std::size_t k = 0; k < m.american.size(); ++k) {
      fixed = fix_exercise(fixed, 0, taus[pick[k]]);
      g.push_back(h_prices[k]);
    }
    ArbitrageVerdict v = check_na(fixed, g, {}, support, caps);
    std::vector<StoppingTime> chosen;
    for (auto i : pick) chosen.push_back(taus[i]);
    if (v.verdict == Verdict::kArbitrage) {
      const std::size_t mb = m.buy_only.size();
      HedgePortfolio p = HedgePortfolio::zero(m);
      p.H = v.portfolio->H;
      p.a = v.portfolio->a;
      for (std::size_t j = 0; j < mb; ++j) p.b[j] = v.portfolio->b[j];
      for (std::size_t k = 0; k < m.american.size(); ++k) {
        p.c[k] = v.portfolio->b[mb + k];
        p.mu[k] = as_liquidating(m.tree, chosen[k]);
      }
      ArbitrageVerdict out;
      out.verdict = Verdict::kArbitrage;
      out.indivisible = true;
      out.g_prices = g_prices;
      out.h_prices = h_prices;
      out.support = support;
      out.portfolio = std::move(p);
      out.taus = std::move(chosen);
      return out;
    }
    if (!first) {
      first = ArbitrageVerdict{};
      first->indivisible = true;
      first->g_prices = g_prices;
      first->h_prices = h_prices;
      first->support = support;
    }
    std::size_t k = 0;
    while (k < pick.size() && ++pick[k] == taus.size()) pick[k++] = 0;
    if (k == pick.size()) break;
  }
  return *first;
}

/// Independent re-verification of a verdict's certificate; empty when sound.
inline std::vector<std::string> verdict_violations(const MarketSpec& m, const ArbitrageVerdict& v,
                                                   const CapOptions& caps = {}) {
  std::vector<std::string> out;
  const EventTree& t = m.tree;
  if (v.portfolio) {
    const HedgePortfolio& p = *v.portfolio;
    if (!is_admissible(m, p)) out.push_back("arbitrage portfolio is not admissible");
    if (!out.empty()) return out;
    bool positive = false;
    for (std::size_t i = 0; i < t.leaf_count(); ++i) {
      if (!v.support[i]) continue;
      const Rational x = portfolio_value_at_prices(m, p, i, v.g_prices, v.h_prices);
      if (x < 0) out.push_back("arbitrage portfolio loses at leaf '" + t.id(t.leaves()[i]) + "'");
      if (x > 0) positive = true;
    }
    Rational mass = 0;
    for (const auto& b : p.b) mass += b;
    for (const auto& c : p.c) mass += c;
    if (v.verdict == Verdict::kArbitrage && !positive) out.push_back("arbitrage portfolio is zero on the support");
    if (v.verdict == Verdict::kStrictNoArbitrageFails && sgn(mass) <= 0) {
      out.push_back("certificate holds no buy-only position");
    }
    if (v.verdict == Verdict::kNoArbitrage) out.push_back("no-arbitrage verdict carries a portfolio");
  } else if (v.verdict != Verdict::kNoArbitrage) {
    out.push_back("arbitrage verdict without a portfolio");
  }
  if (v.measure) {
    if (v.verdict != Verdict::kNoArbitrage) out.push_back("arbitrage verdict carries a pricing measure");
    const PricingSetSpec s = detail::na_spec(m, v.g_prices, v.h_prices, v.support, caps, v.strict);
    for (const auto& x : membership(*v.measure, s, true).violations) out.push_back("pricing measure: " + x);
  } else if (v.verdict == Verdict::kNoArbitrage && !v.indivisible) {
    out.push_back("no-arbitrage verdict without a pricing measure");
  }
  return out;
}

inline Json verdict_to_json(const MarketSpec& m, const ArbitrageVerdict& v) {
  const EventTree& t = m.tree;
  Json j;
  j["verdict"] = to_string(v.verdict);
  j["strict"] = v.strict;
  if (v.measure) {
    j["measure"] = detail::leaf_payoff_json(t, v.measure->weights);
    j["slack"] = to_string(v.slack);
    Json eg = Json::object(), eh = Json::object();
    for (std::size_t i = 0; i < v.eps_g.size(); ++i) eg[m.buy_only[i].name] = to_string(v.eps_g[i]);
    for (std::size_t i = 0; i < v.eps_h.size(); ++i) eh[m.american[i].name] = to_string(v.eps_h[i]);
    j["eps_g"] = eg;
    j["eps_h"] = eh;
  }
  if (v.portfolio) {
    Json p = portfolio_to_json(m, *v.portfolio);
    Json values = Json::object();
    for (std::size_t i = 0; i < t.leaf_count(); ++i) {
      if (!v.support[i]) continue;
      values[t.id(t.leaves()[i])] = to_string(portfolio_value_at_prices(m, *v.portfolio, i, v.g_prices, v.h_prices));
    }
    p["terminal_value"] = values;
    j["portfolio"] = p;
  }
  return j;
}

}  // namespace semistatic
