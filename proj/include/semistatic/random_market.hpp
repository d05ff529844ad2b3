#pragma once

// Seeded generators of small markets, measures and processes for property
// checks. Option prices are set from a random martingale measure plus small
// offsets, so instances straddle the no-arbitrage boundary.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "semistatic/stopping.hpp"
#include "semistatic/tree_market.hpp"

namespace semistatic {

struct RandomMarketOptions {
  int max_horizon = 3;
  int max_branching = 3;
  int max_options = 2;
  /// Probability that a node's moves are chosen to admit a martingale measure.
  double balanced = 0.9;
  /// Probability that a two-sided option is priced off its martingale value.
  double mispriced = 0.1;
};

namespace detail {

inline int pick(std::mt19937& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline bool coin(std::mt19937& rng, double p) { return std::bernoulli_distribution(p)(rng); }

inline int random_branching(std::mt19937& rng, int max_b) {
  static const double weights[] = {0.15, 0.5, 0.35};
  std::discrete_distribution<int> d(weights, weights + std::min(max_b, 3));
  return 1 + d(rng);
}

/// Distinct increments in [-3, 3]; mixed signs (or a single zero) when balanced.
inline std::vector<int> random_moves(std::mt19937& rng, int b, bool balanced) {
  std::vector<int> pool{-3, -2, -1, 0, 1, 2, 3};
  while (true) {
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<int> moves(pool.begin(), pool.begin() + b);
    const bool up = std::any_of(moves.begin(), moves.end(), [](int x) { return x > 0; });
    const bool down = std::any_of(moves.begin(), moves.end(), [](int x) { return x < 0; });
    const bool ok = b == 1 ? moves[0] == 0 : (up && down);
    if (ok == balanced || !balanced) return moves;
  }
}

/// Positive conditional probabilities with zero drift when the moves allow it.
inline RationalVector martingale_weights(std::mt19937& rng, const std::vector<Rational>& steps) {
  RationalVector r(steps.size());
  Rational up = 0, down = 0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    r[i] = pick(rng, 1, 4);
    if (steps[i] > 0) up += r[i] * steps[i];
    if (steps[i] < 0) down -= r[i] * steps[i];
  }
  if (sgn(up) > 0 && sgn(down) > 0) {
    for (std::size_t i = 0; i < steps.size(); ++i) {
      if (steps[i] > 0) r[i] *= down;
      if (steps[i] < 0) r[i] *= up;
    }
  }
  Rational total = 0;
  for (const auto& x : r) total += x;
  for (auto& x : r) x /= total;
  return r;
}

inline Rational random_offset(std::mt19937& rng) {
  static const Rational offsets[] = {Rational(-1, 2), Rational(0), Rational(0), Rational(1, 4), Rational(1, 2), Rational(1)};
  return offsets[pick(rng, 0, 5)];
}

}  // namespace detail

/// Leaf weights from random positive conditional probabilities (martingale
/// where the moves allow it).
inline Measure random_martingale_measure(std::mt19937& rng, const MarketSpec& m) {
  const EventTree& t = m.tree;
  RationalVector mass(t.size(), Rational(0));
  mass[t.root()] = 1;
  for (NodeId n : t.preorder()) {
    const auto kids = t.children(n);
    if (kids.empty()) continue;
    std::vector<Rational> steps;
    for (NodeId c : kids) steps.push_back(m.stock.at(c, 0) - m.stock.at(n, 0));
    const RationalVector w = detail::martingale_weights(rng, steps);
    for (std::size_t i = 0; i < kids.size(); ++i) mass[kids[i]] = mass[n] * w[i];
  }
  RationalVector q;
  for (NodeId l : t.leaves()) q.push_back(mass[l]);
  return Measure(q);
}

inline MarketSpec random_market(std::mt19937& rng, const RandomMarketOptions& o = {}) {
  const int horizon = detail::pick(rng, 1, o.max_horizon);
  std::vector<EventTree::NodeSpec> specs{{"n0", std::nullopt, 0}};
  std::vector<Rational> stock{10};
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].time == horizon) continue;
    const int b = detail::random_branching(rng, o.max_branching);
    const auto moves = detail::random_moves(rng, b, detail::coin(rng, o.balanced));
    for (int mv : moves) {
      specs.push_back({"n" + std::to_string(specs.size()), specs[i].id, specs[i].time + 1});
      stock.push_back(stock[i] + mv);
    }
  }
  MarketSpec m;
  m.tree = EventTree::build(specs);
  m.stock = VectorProcess(specs.size(), 1);
  for (std::size_t i = 0; i < specs.size(); ++i) m.stock.at(*m.tree.find(specs[i].id), 0) = stock[i];
  m.reference_support = all_leaves(m.tree);
  const Measure q = random_martingale_measure(rng, m);
  const auto leaf_payoff = [&] {
    RationalVector v(m.tree.leaf_count());
    for (auto& x : v) x = detail::pick(rng, -3, 5);
    return TerminalClaim(v);
  };
  for (int j = detail::pick(rng, 0, o.max_options); j > 0; --j) {
    TerminalClaim f = leaf_payoff();
    Rational price = expectation(q, f.values);
    if (detail::coin(rng, o.mispriced)) price += Rational(1, 3);
    m.two_sided.push_back({"f" + std::to_string(m.two_sided.size()), f, price});
  }
  for (int j = detail::pick(rng, 0, o.max_options); j > 0; --j) {
    TerminalClaim g = leaf_payoff();
    const Rational price = expectation(q, g.values) + detail::random_offset(rng);
    m.buy_only.push_back({"g" + std::to_string(m.buy_only.size()), g, price});
  }
  for (int j = detail::pick(rng, 0, o.max_options); j > 0; --j) {
    ScalarProcess h(m.tree.size());
    for (NodeId n = 0; n < m.tree.size(); ++n) h[n] = detail::pick(rng, -3, 5);
    const Rational price = snell_value(m.tree, q, h) + detail::random_offset(rng);
    m.american.push_back({"h" + std::to_string(m.american.size()), h, price});
  }
  return m;
}

inline ScalarProcess random_process(std::mt19937& rng, const EventTree& t, int lo = -4, int hi = 6) {
  ScalarProcess h(t.size());
  for (NodeId n = 0; n < t.size(); ++n) h[n] = detail::pick(rng, lo, hi);
  return h;
}

/// Random probability on the leaves; each leaf is dropped with probability
/// `sparsity` (at least one leaf is kept).
inline Measure random_measure(std::mt19937& rng, std::size_t leaves, double sparsity = 0) {
  RationalVector w(leaves, Rational(0));
  Rational total = 0;
  for (auto& x : w) {
    if (!detail::coin(rng, sparsity)) x = detail::pick(rng, 1, 6);
    total += x;
  }
  if (sgn(total) == 0) {
    w[static_cast<std::size_t>(detail::pick(rng, 0, static_cast<int>(leaves) - 1))] = 1;
    total = 1;
  }
  for (auto& x : w) x /= total;
  return Measure(w);
}

}  // namespace semistatic
