#pragma once

// Linear programs over semi-static strategies (H, a, b, c, mu). The product
// c^k mu^k is carried as nu^k = c^k mu^k: a nonnegative process whose sum along
// every root-to-leaf path equals c^k, which makes the terminal value linear.

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semistatic/exact_lp.hpp"
#include "semistatic/tree_market.hpp"

namespace semistatic {

struct StrategyOptions {
  bool use_two_sided = true;
  bool use_buy_only = true;
  bool use_american = true;
  /// Overrides of the buy-only and American prices (empty: quoted prices).
  RationalVector g_prices;
  RationalVector h_prices;
  /// Adds a liquidating strategy eta for an American claim being hedged.
  std::optional<ScalarProcess> exercised_claim;
};

class StrategyProgram {
 public:
  LpProblem lp;

  StrategyProgram(const MarketSpec& m, StrategyOptions opts) : m_(m), opts_(std::move(opts)) {
    const EventTree& t = m.tree;
    if (opts_.g_prices.empty()) opts_.g_prices = m.buy_only_prices();
    if (opts_.h_prices.empty()) opts_.h_prices = m.american_prices();
    h_var_.assign(t.size(), std::vector<std::size_t>(m.dim(), kNone));
    for (NodeId n : t.decision_nodes()) {
      for (std::size_t l = 0; l < m.dim(); ++l) {
        h_var_[n][l] = lp.add_free_variable("H_" + t.id(n) + (m.dim() > 1 ? "_" + std::to_string(l) : ""));
      }
    }
    if (opts_.use_two_sided) {
      for (const auto& f : m.two_sided) a_var_.push_back(lp.add_free_variable("a_" + f.name));
    }
    if (opts_.use_buy_only) {
      for (const auto& g : m.buy_only) b_var_.push_back(lp.add_variable("b_" + g.name));
    }
    if (opts_.use_american) {
      for (std::size_t k = 0; k < m.american.size(); ++k) {
        c_var_.push_back(lp.add_variable("c_" + m.american[k].name));
        std::vector<std::size_t> nu;
        for (NodeId n = 0; n < t.size(); ++n) nu.push_back(lp.add_variable("nu_" + m.american[k].name + "_" + t.id(n)));
        for (std::size_t i = 0; i < t.leaf_count(); ++i) {
          LinearExpr e;
          for (NodeId n : t.path(i)) e.add(nu[n], 1);
          e.add(c_var_.back(), -1);
          lp.add_constraint(std::move(e), Relation::kEqual, 0, "nu_path_" + m.american[k].name + "_" + t.id(t.leaves()[i]));
        }
        nu_var_.push_back(std::move(nu));
      }
    }
    if (opts_.exercised_claim) {
      for (NodeId n = 0; n < t.size(); ++n) eta_var_.push_back(lp.add_variable("eta_" + t.id(n)));
      for (std::size_t i = 0; i < t.leaf_count(); ++i) {
        LinearExpr e;
        for (NodeId n : t.path(i)) e.add(eta_var_[n], 1);
        lp.add_constraint(std::move(e), Relation::kEqual, 1, "eta_path_" + t.id(t.leaves()[i]));
      }
    }
  }

  /// Terminal portfolio value at leaf i, linear in the LP variables.
  LinearExpr phi(std::size_t i) const {
    const auto& path = m_.tree.path(i);
    LinearExpr e;
    for (std::size_t s = 0; s + 1 < path.size(); ++s) {
      for (std::size_t l = 0; l < m_.dim(); ++l) {
        e.add(h_var_[path[s]][l], m_.stock.at(path[s + 1], l) - m_.stock.at(path[s], l));
      }
    }
    for (std::size_t j = 0; j < a_var_.size(); ++j) e.add(a_var_[j], m_.two_sided[j].payoff[i] - m_.two_sided[j].price);
    for (std::size_t j = 0; j < b_var_.size(); ++j) e.add(b_var_[j], m_.buy_only[j].payoff[i] - opts_.g_prices[j]);
    for (std::size_t k = 0; k < c_var_.size(); ++k) {
      for (NodeId n : path) e.add(nu_var_[k][n], m_.american[k].payoff[n]);
      e.add(c_var_[k], -opts_.h_prices[k]);
    }
    return e;
  }

  /// eta(phi) at leaf i for the exercised claim.
  LinearExpr exercised_value(std::size_t i) const {
    LinearExpr e;
    for (NodeId n : m_.tree.path(i)) e.add(eta_var_.at(n), (*opts_.exercised_claim)[n]);
    return e;
  }

  /// sum_j b_j + sum_k c_k.
  LinearExpr buy_only_mass() const {
    LinearExpr e;
    for (auto v : b_var_) e.add(v, 1);
    for (auto v : c_var_) e.add(v, 1);
    return e;
  }

  HedgePortfolio portfolio(const LpSolution& s) const {
    HedgePortfolio p = HedgePortfolio::zero(m_);
    const EventTree& t = m_.tree;
    for (NodeId n : t.decision_nodes()) {
      for (std::size_t l = 0; l < m_.dim(); ++l) p.H.at(n, l) = s.x[h_var_[n][l]];
    }
    for (std::size_t j = 0; j < a_var_.size(); ++j) p.a[j] = s.x[a_var_[j]];
    for (std::size_t j = 0; j < b_var_.size(); ++j) p.b[j] = s.x[b_var_[j]];
    for (std::size_t k = 0; k < c_var_.size(); ++k) {
      p.c[k] = s.x[c_var_[k]];
      if (sgn(p.c[k]) > 0) {
        ScalarProcess eta(t.size());
        for (NodeId n = 0; n < t.size(); ++n) eta[n] = s.x[nu_var_[k][n]] / p.c[k];
        p.mu[k] = LiquidatingStrategy{eta};
      }
    }
    return p;
  }

  LiquidatingStrategy exercise(const LpSolution& s) const {
    ScalarProcess eta(m_.tree.size());
    for (NodeId n = 0; n < m_.tree.size(); ++n) eta[n] = s.x[eta_var_.at(n)];
    return {eta};
  }

  const StrategyOptions& options() const { return opts_; }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  const MarketSpec& m_;
  StrategyOptions opts_;
  std::vector<std::vector<std::size_t>> h_var_;
  std::vector<std::size_t> a_var_, b_var_, c_var_;
  std::vector<std::vector<std::size_t>> nu_var_;
  std::vector<std::size_t> eta_var_;
};

/// Terminal value with explicit buy-only/American prices (for shifted-price checks).
inline Rational portfolio_value_at_prices(const MarketSpec& m, const HedgePortfolio& p, std::size_t leaf_idx,
                                          const RationalVector& g_prices, const RationalVector& h_prices) {
  Rational v = portfolio_value(m, p, leaf_idx);
  for (std::size_t j = 0; j < m.buy_only.size(); ++j) v += p.b[j] * (m.buy_only[j].price - g_prices[j]);
  for (std::size_t k = 0; k < m.american.size(); ++k) v += p.c[k] * (m.american[k].price - h_prices[k]);
  return v;
}

}  // namespace semistatic
