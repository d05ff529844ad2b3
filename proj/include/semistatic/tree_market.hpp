#pragma once

// Event trees, node-indexed (hence automatically adapted) processes, the
// semi-static market tuple and terminal portfolio evaluation.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "semistatic/rational.hpp"

namespace semistatic {

using NodeId = std::size_t;

class MarketError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Finite rooted tree; a node at time t is an atom of F_t. Leaves are kept in
/// depth-first order so that every node's leaves form a contiguous range.
class EventTree {
 public:
  struct NodeSpec {
    std::string id;
    std::optional<std::string> parent;
    int time = 0;
  };

  EventTree() = default;

  static EventTree build(const std::vector<NodeSpec>& specs) {
    EventTree t;
    const std::size_t n = specs.size();
    if (n == 0) throw MarketError("tree has no nodes");
    t.ids_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!t.index_.emplace(specs[i].id, i).second) {
        throw MarketError("duplicate node id '" + specs[i].id + "'");
      }
      t.ids_.push_back(specs[i].id);
    }
    t.parent_.assign(n, std::nullopt);
    t.time_.assign(n, 0);
    t.children_.assign(n, {});
    std::optional<NodeId> root;
    for (std::size_t i = 0; i < n; ++i) {
      t.time_[i] = specs[i].time;
      if (!specs[i].parent) {
        if (root) {
          throw MarketError("second root '" + specs[i].id + "' (first is '" + t.ids_[*root] + "')");
        }
        if (specs[i].time != 0) throw MarketError("root '" + specs[i].id + "' must have time 0");
        root = i;
        continue;
      }
      const auto it = t.index_.find(*specs[i].parent);
      if (it == t.index_.end()) {
        throw MarketError("orphan node '" + specs[i].id + "': unknown parent '" +
                          *specs[i].parent + "'");
      }
      t.parent_[i] = it->second;
      t.children_[it->second].push_back(i);
    }
    if (!root) throw MarketError("tree has no root (a node without parent)");
    t.root_ = *root;
    // Times strictly increase along parent links, so the parent graph is acyclic
    // and every node reaches the root.
    for (std::size_t i = 0; i < n; ++i) {
      if (t.parent_[i] && t.time_[i] != t.time_[*t.parent_[i]] + 1) {
        throw MarketError("node '" + t.ids_[i] + "' has time " + std::to_string(t.time_[i]) +
                          " but its parent '" + t.ids_[*t.parent_[i]] + "' has time " +
                          std::to_string(t.time_[*t.parent_[i]]));
      }
    }
    t.horizon_ = *std::max_element(t.time_.begin(), t.time_.end());
    if (t.horizon_ < 1) throw MarketError("horizon must be at least 1");
    for (std::size_t i = 0; i < n; ++i) {
      if (t.children_[i].empty() && t.time_[i] != t.horizon_) {
        throw MarketError("leaf '" + t.ids_[i] + "' ends at time " + std::to_string(t.time_[i]) +
                          " before the horizon " + std::to_string(t.horizon_));
      }
    }
    t.index_leaves();
    return t;
  }

  std::size_t size() const { return ids_.size(); }
  int horizon() const { return horizon_; }
  NodeId root() const { return root_; }
  const std::string& id(NodeId n) const { return ids_.at(n); }
  std::optional<NodeId> find(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<NodeId> parent(NodeId n) const { return parent_.at(n); }
  int time(NodeId n) const { return time_.at(n); }
  std::span<const NodeId> children(NodeId n) const { return children_.at(n); }
  bool is_leaf(NodeId n) const { return children_.at(n).empty(); }

  /// Leaves in depth-first order; "leaf index" always refers to this order.
  const std::vector<NodeId>& leaves() const { return leaves_; }
  std::size_t leaf_count() const { return leaves_.size(); }
  std::size_t leaf_index(NodeId leaf) const { return leaf_pos_.at(leaf); }
  /// Half-open range of leaf indices below (or at) n.
  std::pair<std::size_t, std::size_t> leaf_range(NodeId n) const { return leaf_range_.at(n); }
  /// Root-to-leaf node path for leaf index i.
  const std::vector<NodeId>& path(std::size_t leaf_idx) const { return paths_.at(leaf_idx); }
  /// Nodes in depth-first preorder (parents before children).
  const std::vector<NodeId>& preorder() const { return preorder_; }
  const std::vector<NodeId>& decision_nodes() const { return decision_nodes_; }

  /// Ancestor of `leaf_idx`'s leaf at time t.
  NodeId node_at(std::size_t leaf_idx, int t) const { return paths_.at(leaf_idx).at(t); }

 private:
  void index_leaves() {
    const std::size_t n = size();
    leaf_pos_.assign(n, static_cast<std::size_t>(-1));
    leaf_range_.assign(n, {0, 0});
    std::vector<NodeId> stack_path;
    walk(root_, stack_path);
    for (NodeId v : preorder_) {
      if (!is_leaf(v)) decision_nodes_.push_back(v);
    }
  }

  void walk(NodeId v, std::vector<NodeId>& path) {
    preorder_.push_back(v);
    path.push_back(v);
    const std::size_t begin = leaves_.size();
    if (children_[v].empty()) {
      leaf_pos_[v] = leaves_.size();
      leaves_.push_back(v);
      paths_.push_back(path);
    } else {
      for (NodeId c : children_[v]) walk(c, path);
    }
    leaf_range_[v] = {begin, leaves_.size()};
    path.pop_back();
  }

  std::vector<std::string> ids_;
  std::map<std::string, NodeId> index_;
  std::vector<std::optional<NodeId>> parent_;
  std::vector<int> time_;
  std::vector<std::vector<NodeId>> children_;
  NodeId root_ = 0;
  int horizon_ = 0;
  std::vector<NodeId> leaves_;
  std::vector<std::size_t> leaf_pos_;
  std::vector<std::pair<std::size_t, std::size_t>> leaf_range_;
  std::vector<std::vector<NodeId>> paths_;
  std::vector<NodeId> preorder_;
  std::vector<NodeId> decision_nodes_;
};

/// Scalar adapted process: one exact value per node.
struct ScalarProcess {
  RationalVector values;

  ScalarProcess() = default;
  explicit ScalarProcess(std::size_t nodes, const Rational& fill = 0) : values(nodes, fill) {}
  explicit ScalarProcess(RationalVector v) : values(std::move(v)) {}

  const Rational& operator[](NodeId n) const { return values.at(n); }
  Rational& operator[](NodeId n) { return values.at(n); }
  std::size_t size() const { return values.size(); }
};

/// R^d-valued adapted process stored node-major.
struct VectorProcess {
  std::size_t dim = 0;
  RationalVector data;

  VectorProcess() = default;
  VectorProcess(std::size_t nodes, std::size_t d) : dim(d), data(nodes * d, Rational(0)) {}

  const Rational& at(NodeId n, std::size_t l) const { return data.at(n * dim + l); }
  Rational& at(NodeId n, std::size_t l) { return data.at(n * dim + l); }
  std::size_t nodes() const { return dim == 0 ? 0 : data.size() / dim; }
};

/// F_T-measurable payoff, indexed by leaf index.
struct TerminalClaim {
  RationalVector values;

  TerminalClaim() = default;
  explicit TerminalClaim(RationalVector v) : values(std::move(v)) {}
  const Rational& operator[](std::size_t leaf_idx) const { return values.at(leaf_idx); }
  std::size_t size() const { return values.size(); }
};

/// Nonnegative leaf weights summing to one.
struct Measure {
  RationalVector weights;

  Measure() = default;
  explicit Measure(RationalVector w) : weights(std::move(w)) {}
  const Rational& operator[](std::size_t leaf_idx) const { return weights.at(leaf_idx); }
  std::size_t size() const { return weights.size(); }

  bool is_probability() const {
    Rational total = 0;
    for (const auto& w : weights) {
      if (w < 0) return false;
      total += w;
    }
    return total == 1;
  }
  std::vector<bool> support() const {
    std::vector<bool> s(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) s[i] = weights[i] > 0;
    return s;
  }
  friend bool operator==(const Measure& a, const Measure& b) { return a.weights == b.weights; }
};

/// Exercise flow: eta_t >= 0 and the eta mass along every path sums to one
/// (the sum includes t = 0).
struct LiquidatingStrategy {
  ScalarProcess eta;
};

struct EuropeanOption {
  std::string name;
  TerminalClaim payoff;
  Rational price;
};

struct AmericanOption {
  std::string name;
  ScalarProcess payoff;
  Rational price;
};

/// (S, f, f-bar, g, g-bar, h, h-bar). Position fixes the trading side: `two_sided`
/// are f (buy and sell), `buy_only` are g, `american` are buy-only divisible h.
struct MarketSpec {
  EventTree tree;
  VectorProcess stock;
  std::vector<EuropeanOption> two_sided;
  std::vector<EuropeanOption> buy_only;
  std::vector<AmericanOption> american;
  /// Leaves outside the reference support are null; "a.s." means on the support.
  std::vector<bool> reference_support;

  std::size_t dim() const { return stock.dim; }

  RationalVector buy_only_prices() const {
    RationalVector p;
    for (const auto& g : buy_only) p.push_back(g.price);
    return p;
  }
  RationalVector american_prices() const {
    RationalVector p;
    for (const auto& h : american) p.push_back(h.price);
    return p;
  }

  /// Structural validation; throws MarketError naming the offending item.
  void validate() const {
    const std::size_t n = tree.size();
    if (stock.dim == 0) throw MarketError("stock dimension must be at least 1");
    if (stock.data.size() != n * stock.dim) throw MarketError("stock process does not cover every node");
    const auto check_claim = [&](const EuropeanOption& o) {
      if (o.payoff.size() != tree.leaf_count()) {
        throw MarketError("European option '" + o.name + "' does not cover every leaf");
      }
    };
    for (const auto& f : two_sided) check_claim(f);
    for (const auto& g : buy_only) check_claim(g);
    for (const auto& h : american) {
      if (h.payoff.size() != n) {
        throw MarketError("American option '" + h.name + "' does not cover every node");
      }
    }
    if (reference_support.size() != tree.leaf_count()) {
      throw MarketError("reference support does not match the leaf count");
    }
    if (std::none_of(reference_support.begin(), reference_support.end(), [](bool b) { return b; })) {
      throw MarketError("reference support is empty");
    }
  }
};

/// Static positions plus the dynamic stock strategy H (defined on decision nodes).
struct HedgePortfolio {
  VectorProcess H;
  RationalVector a;
  RationalVector b;
  RationalVector c;
  std::vector<LiquidatingStrategy> mu;

  static HedgePortfolio zero(const MarketSpec& m) {
    HedgePortfolio p;
    p.H = VectorProcess(m.tree.size(), m.dim());
    p.a.assign(m.two_sided.size(), Rational(0));
    p.b.assign(m.buy_only.size(), Rational(0));
    p.c.assign(m.american.size(), Rational(0));
    for (std::size_t k = 0; k < m.american.size(); ++k) {
      ScalarProcess eta(m.tree.size());
      eta[m.tree.root()] = 1;
      p.mu.push_back({eta});
    }
    return p;
  }
};

/// Sum of eta mass along leaf `leaf_idx`'s path must be one; all eta >= 0.
inline bool is_valid_liquidating(const EventTree& tree, const LiquidatingStrategy& s) {
  if (s.eta.size() != tree.size()) return false;
  for (const auto& v : s.eta.values) {
    if (v < 0) return false;
  }
  for (std::size_t i = 0; i < tree.leaf_count(); ++i) {
    Rational sum = 0;
    for (NodeId n : tree.path(i)) sum += s.eta[n];
    if (sum != 1) return false;
  }
  return true;
}

/// eta(h) on the path to leaf `leaf_idx`: sum_t h_t eta_t.
inline Rational liquidate_payoff(const EventTree& tree, const LiquidatingStrategy& s,
                                 const ScalarProcess& h, std::size_t leaf_idx) {
  Rational v = 0;
  for (NodeId n : tree.path(leaf_idx)) v += h[n] * s.eta[n];
  return v;
}

/// (H.S) up to `node`: sum_{s < time(node)} H_s . (S_{s+1} - S_s) along the root path.
inline Rational gains_to(const VectorProcess& H, const MarketSpec& m, NodeId node) {
  std::vector<NodeId> path;
  for (std::optional<NodeId> v = node; v; v = m.tree.parent(*v)) path.push_back(*v);
  std::reverse(path.begin(), path.end());
  Rational g = 0;
  for (std::size_t s = 0; s + 1 < path.size(); ++s) {
    for (std::size_t l = 0; l < m.dim(); ++l) {
      g += H.at(path[s], l) * (m.stock.at(path[s + 1], l) - m.stock.at(path[s], l));
    }
  }
  return g;
}

/// Terminal value H.S + a(f - fbar) + b(g - gbar) + c(mu(h) - hbar) at a leaf.
inline Rational portfolio_value(const MarketSpec& m, const HedgePortfolio& p, std::size_t leaf_idx) {
  const NodeId leaf = m.tree.leaves().at(leaf_idx);
  Rational v = gains_to(p.H, m, leaf);
  for (std::size_t i = 0; i < m.two_sided.size(); ++i) {
    v += p.a.at(i) * (m.two_sided[i].payoff[leaf_idx] - m.two_sided[i].price);
  }
  for (std::size_t j = 0; j < m.buy_only.size(); ++j) {
    v += p.b.at(j) * (m.buy_only[j].payoff[leaf_idx] - m.buy_only[j].price);
  }
  for (std::size_t k = 0; k < m.american.size(); ++k) {
    v += p.c.at(k) *
         (liquidate_payoff(m.tree, p.mu.at(k), m.american[k].payoff, leaf_idx) - m.american[k].price);
  }
  return v;
}

/// Sign and shape constraints of (H, a, b, c, mu).
inline bool is_admissible(const MarketSpec& m, const HedgePortfolio& p) {
  if (p.a.size() != m.two_sided.size() || p.b.size() != m.buy_only.size() ||
      p.c.size() != m.american.size() || p.mu.size() != m.american.size()) {
    return false;
  }
  if (p.H.dim != m.dim() || p.H.nodes() != m.tree.size()) return false;
  for (const auto& v : p.b) {
    if (v < 0) return false;
  }
  for (const auto& v : p.c) {
    if (v < 0) return false;
  }
  return std::all_of(p.mu.begin(), p.mu.end(),
                     [&](const LiquidatingStrategy& s) { return is_valid_liquidating(m.tree, s); });
}

/// Expectation of a leaf-indexed payoff.
inline Rational expectation(const Measure& q, const RationalVector& payoff) {
  return dot(q.weights, payoff);
}

/// Leaf set helpers (leaf-indexed boolean masks).
using LeafSet = std::vector<bool>;

inline LeafSet all_leaves(const EventTree& t) { return LeafSet(t.leaf_count(), true); }

inline std::size_t count(const LeafSet& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), true));
}

}  // namespace semistatic
