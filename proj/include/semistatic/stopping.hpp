#pragma once

// Stopping times, liquidating strategies and Snell envelopes on event trees.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "semistatic/exact_lp.hpp"
#include "semistatic/tree_market.hpp"

namespace semistatic {

inline constexpr std::uint64_t kDefaultEnumerationCap = 1'000'000;

class EnumerationCapExceeded : public std::runtime_error {
 public:
  EnumerationCapExceeded(std::uint64_t count, std::uint64_t cap)
      : std::runtime_error("stopping-time enumeration needs " +
                           (count == std::numeric_limits<std::uint64_t>::max() ? std::string("more than 2^64")
                                                                               : std::to_string(count)) +
                           " stopping times, above the cap of " + std::to_string(cap) +
                           "; use the lazy cutting-plane mode instead"),
        count_(count) {}
  std::uint64_t count() const { return count_; }

 private:
  std::uint64_t count_;
};

/// stop[n] is true exactly on the stopping nodes: one per root-to-leaf path.
struct StoppingTime {
  std::vector<bool> stop;

  friend bool operator==(const StoppingTime& a, const StoppingTime& b) { return a.stop == b.stop; }
  friend bool operator<(const StoppingTime& a, const StoppingTime& b) { return a.stop < b.stop; }
};

inline bool is_valid_stopping_time(const EventTree& tree, const StoppingTime& tau) {
  if (tau.stop.size() != tree.size()) return false;
  for (std::size_t i = 0; i < tree.leaf_count(); ++i) {
    int hits = 0;
    for (NodeId n : tree.path(i)) hits += tau.stop[n] ? 1 : 0;
    if (hits != 1) return false;
  }
  return true;
}

/// Stops at every node of time t (t clamped to the horizon).
inline StoppingTime constant_stopping_time(const EventTree& tree, int t) {
  StoppingTime tau{std::vector<bool>(tree.size(), false)};
  for (NodeId n = 0; n < tree.size(); ++n) {
    if (tree.time(n) == t) tau.stop[n] = true;
  }
  return tau;
}

/// The stopping node on leaf `leaf_idx`'s path.
inline NodeId stopping_node(const EventTree& tree, const StoppingTime& tau, std::size_t leaf_idx) {
  for (NodeId n : tree.path(leaf_idx)) {
    if (tau.stop[n]) return n;
  }
  throw std::invalid_argument("stopping time never stops on a path");
}

/// Leaf-indexed h_tau.
inline RationalVector stopped_payoff(const EventTree& tree, const StoppingTime& tau, const ScalarProcess& h) {
  RationalVector out(tree.leaf_count());
  for (std::size_t i = 0; i < tree.leaf_count(); ++i) out[i] = h[stopping_node(tree, tau, i)];
  return out;
}

/// Number of stopping times below each node, N(n) = 1 + prod_c N(c), saturating.
inline std::uint64_t count_stopping_times(const EventTree& tree) {
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  std::vector<std::uint64_t> count(tree.size(), 1);
  const auto& order = tree.preorder();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId n = *it;
    if (tree.is_leaf(n)) continue;
    std::uint64_t prod = 1;
    for (NodeId c : tree.children(n)) {
      if (count[c] != 0 && prod > kMax / count[c]) {
        prod = kMax;
        break;
      }
      prod *= count[c];
    }
    count[n] = prod == kMax ? kMax : prod + 1;
  }
  return count[tree.root()];
}

/// All stopping times; root-stop first, then children's combinations in
/// lexicographic order.
inline std::vector<StoppingTime> enumerate_stopping_times(const EventTree& tree,
                                                          std::uint64_t cap = kDefaultEnumerationCap) {
  const std::uint64_t total = count_stopping_times(tree);
  if (total > cap) throw EnumerationCapExceeded(total, cap);
  // Each sub-result is a list of stopping-node sets for the subtree.
  std::vector<std::vector<std::vector<NodeId>>> below(tree.size());
  const auto& order = tree.preorder();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId n = *it;
    auto& out = below[n];
    out.push_back({n});
    if (tree.is_leaf(n)) continue;
    std::vector<std::vector<NodeId>> acc{{}};
    for (NodeId c : tree.children(n)) {
      std::vector<std::vector<NodeId>> next;
      next.reserve(acc.size() * below[c].size());
      for (const auto& prefix : acc) {
        for (const auto& tail : below[c]) {
          auto combined = prefix;
          combined.insert(combined.end(), tail.begin(), tail.end());
          next.push_back(std::move(combined));
        }
      }
      acc = std::move(next);
      below[c].clear();
      below[c].shrink_to_fit();
    }
    for (auto& s : acc) out.push_back(std::move(s));
  }
  std::vector<StoppingTime> taus;
  taus.reserve(below[tree.root()].size());
  for (const auto& nodes : below[tree.root()]) {
    StoppingTime tau{std::vector<bool>(tree.size(), false)};
    for (NodeId n : nodes) tau.stop[n] = true;
    taus.push_back(std::move(tau));
  }
  return taus;
}

inline LiquidatingStrategy as_liquidating(const EventTree& tree, const StoppingTime& tau) {
  ScalarProcess eta(tree.size());
  for (NodeId n = 0; n < tree.size(); ++n) {
    if (tau.stop[n]) eta[n] = 1;
  }
  return {eta};
}

/// eta = sum_i w_i 1{tau_i stops here}.
inline LiquidatingStrategy strategy_from_mixture(const EventTree& tree, const RationalVector& weights,
                                                 const std::vector<StoppingTime>& taus) {
  if (weights.size() != taus.size()) throw std::invalid_argument("mixture: weights and stopping times differ in length");
  Rational total = 0;
  for (const auto& w : weights) {
    if (w < 0) throw std::invalid_argument("mixture: negative weight");
    total += w;
  }
  if (total != 1) throw std::invalid_argument("mixture: weights sum to " + to_string(total) + ", not 1");
  ScalarProcess eta(tree.size());
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (!is_valid_stopping_time(tree, taus[i])) throw std::invalid_argument("mixture: invalid stopping time");
    for (NodeId n = 0; n < tree.size(); ++n) {
      if (taus[i].stop[n]) eta[n] += weights[i];
    }
  }
  return {eta};
}

/// Mass of each node's cylinder under leaf weights q.
inline RationalVector node_masses(const EventTree& tree, const RationalVector& q) {
  RationalVector mass(tree.size(), Rational(0));
  const auto& order = tree.preorder();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId n = *it;
    if (tree.is_leaf(n)) {
      mass[n] = q.at(tree.leaf_index(n));
    } else {
      for (NodeId c : tree.children(n)) mass[n] += mass[c];
    }
  }
  return mass;
}

struct SnellResult {
  ScalarProcess envelope;
  /// Conditional continuation value E[U_{t+1} | node] (equal to h at leaves).
  ScalarProcess continuation;
  Rational value;
  /// Nodes whose cylinder has zero mass; their continuation uses uniform child weights.
  std::vector<bool> zero_mass;
  /// Stop at the first node where the payoff reaches the continuation value.
  StoppingTime greedy;
};

/// Backward induction U_T = h_T, U_t = max(h_t, E_Q[U_{t+1} | node]).
inline SnellResult snell_envelope(const EventTree& tree, const Measure& q, const ScalarProcess& h) {
  if (q.size() != tree.leaf_count()) throw std::invalid_argument("snell_envelope: measure size mismatch");
  if (h.size() != tree.size()) throw std::invalid_argument("snell_envelope: process size mismatch");
  const RationalVector mass = node_masses(tree, q.weights);
  SnellResult r;
  r.envelope = ScalarProcess(tree.size());
  r.continuation = ScalarProcess(tree.size());
  r.zero_mass.assign(tree.size(), false);
  const auto& order = tree.preorder();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId n = *it;
    if (tree.is_leaf(n)) {
      r.continuation[n] = h[n];
      r.envelope[n] = h[n];
      r.zero_mass[n] = sgn(mass[n]) == 0;
      continue;
    }
    Rational cont = 0;
    const auto kids = tree.children(n);
    if (sgn(mass[n]) == 0) {
      r.zero_mass[n] = true;
      for (NodeId c : kids) cont += r.envelope[c];
      cont /= static_cast<long>(kids.size());
    } else {
      for (NodeId c : kids) {
        if (sgn(mass[c]) != 0) cont += mass[c] * r.envelope[c];
      }
      cont /= mass[n];
    }
    r.continuation[n] = cont;
    r.envelope[n] = rmax(h[n], cont);
  }
  r.value = r.envelope[tree.root()];
  r.greedy.stop.assign(tree.size(), false);
  std::vector<NodeId> stack{tree.root()};
  while (!stack.empty()) {
    const NodeId n = stack.back();
    stack.pop_back();
    if (tree.is_leaf(n) || h[n] >= r.continuation[n]) {
      r.greedy.stop[n] = true;
      continue;
    }
    for (NodeId c : tree.children(n)) stack.push_back(c);
  }
  return r;
}

inline Rational snell_value(const EventTree& tree, const Measure& q, const ScalarProcess& h) {
  return snell_envelope(tree, q, h).value;
}

/// max_tau E_Q h_tau by exhaustive scan; returns the value and a maximizer.
inline std::pair<Rational, StoppingTime> best_stopping_time_by_scan(const EventTree& tree, const Measure& q,
                                                                   const ScalarProcess& h,
                                                                   std::uint64_t cap = kDefaultEnumerationCap) {
  const auto taus = enumerate_stopping_times(tree, cap);
  std::pair<Rational, StoppingTime> best{0, {}};
  bool first = true;
  for (const auto& tau : taus) {
    const Rational v = dot(q.weights, stopped_payoff(tree, tau, h));
    if (first || v > best.first) {
      best = {v, tau};
      first = false;
    }
  }
  return best;
}

/// max over liquidating strategies of E_Q[eta(h)], solved as an exact LP.
inline std::pair<Rational, LiquidatingStrategy> best_liquidating_strategy(const EventTree& tree, const Measure& q,
                                                                         const ScalarProcess& h) {
  const RationalVector mass = node_masses(tree, q.weights);
  LpProblem lp;
  for (NodeId n = 0; n < tree.size(); ++n) lp.add_variable("eta_" + tree.id(n), Rational(0), std::nullopt, h[n] * mass[n]);
  for (std::size_t i = 0; i < tree.leaf_count(); ++i) {
    LinearExpr e;
    for (NodeId n : tree.path(i)) e.add(n, 1);
    lp.add_constraint(std::move(e), Relation::kEqual, 1, "path_" + tree.id(tree.leaves()[i]));
  }
  const LpSolution sol = solve(lp);
  if (sol.status != LpStatus::kOptimal) throw std::logic_error("liquidating-strategy LP not optimal");
  ScalarProcess eta(RationalVector(sol.x.begin(), sol.x.end()));
  return {sol.objective, LiquidatingStrategy{eta}};
}

}  // namespace semistatic
