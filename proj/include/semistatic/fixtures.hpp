#pragma once

// Built-in reference markets:
//   B1  one-period binomial, S0 = 2, S1 in {3, 1}
//   T2  two-period binomial, S0 = 4, factors 2 and 1/2
//   P2  two periods, S1 in {6, 2}, trinomial second period, one American
//       option h at price 0 and the European claim psi = (h_tau12 + h_2) / 2.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "semistatic/market_io.hpp"
#include "semistatic/stopping.hpp"
#include "semistatic/tree_market.hpp"

namespace semistatic {

/// Incremental construction of a one-dimensional market.
class MarketBuilder {
 public:
  MarketBuilder& node(std::string id, std::optional<std::string> parent, const Rational& s) {
    int time = 0;
    if (parent) {
      const auto it = std::find_if(specs_.begin(), specs_.end(), [&](const auto& n) { return n.id == *parent; });
      if (it == specs_.end()) throw MarketError("builder: add parent '" + *parent + "' before its children");
      time = it->time + 1;
    }
    specs_.push_back({std::move(id), std::move(parent), time});
    stock_.push_back(s);
    return *this;
  }

  /// Builds the tree and stock; options are attached through the returned file.
  MarketFile build() const {
    MarketFile f;
    f.market.tree = EventTree::build(specs_);
    f.market.stock = VectorProcess(specs_.size(), 1);
    for (std::size_t i = 0; i < specs_.size(); ++i) f.market.stock.at(*f.market.tree.find(specs_[i].id), 0) = stock_[i];
    f.market.reference_support = all_leaves(f.market.tree);
    return f;
  }

 private:
  std::vector<EventTree::NodeSpec> specs_;
  RationalVector stock_;
};

inline RationalVector leaf_values(const EventTree& t, const std::vector<std::pair<std::string, Rational>>& kv) {
  RationalVector v(t.leaf_count());
  for (const auto& [id, x] : kv) v[t.leaf_index(*t.find(id))] = x;
  return v;
}

inline ScalarProcess node_values(const EventTree& t, const std::vector<std::pair<std::string, Rational>>& kv) {
  ScalarProcess v(t.size());
  for (const auto& [id, x] : kv) v[*t.find(id)] = x;
  return v;
}

inline MarketFile fixture_b1() {
  return MarketBuilder().node("0", std::nullopt, 2).node("u", "0", 3).node("d", "0", 1).build();
}

inline MarketFile fixture_t2() {
  return MarketBuilder()
      .node("0", std::nullopt, 4)
      .node("u", "0", 8)
      .node("uu", "u", 16)
      .node("ud", "u", 4)
      .node("d", "0", 2)
      .node("du", "d", 4)
      .node("dd", "d", 1)
      .build();
}

inline ScalarProcess p2_h(const EventTree& t) {
  return node_values(t, {{"0", -1}, {"u", 1}, {"d", -2}, {"uu", 3}, {"um", 0}, {"ud", 0},
                         {"du", 2}, {"dm", -3}, {"dd", 2}});
}

/// Stops at time 1 after an up move and at time 2 after a down move.
inline StoppingTime p2_tau12(const EventTree& t) {
  StoppingTime tau{std::vector<bool>(t.size(), false)};
  for (const char* id : {"u", "du", "dm", "dd"}) tau.stop[*t.find(id)] = true;
  return tau;
}

/// Stops at time 2 after an up move and at time 1 after a down move.
inline StoppingTime p2_footnote_tau(const EventTree& t) {
  StoppingTime tau{std::vector<bool>(t.size(), false)};
  for (const char* id : {"uu", "um", "ud", "d"}) tau.stop[*t.find(id)] = true;
  return tau;
}

inline TerminalClaim p2_psi(const EventTree& t) {
  const ScalarProcess h = p2_h(t);
  const RationalVector a = stopped_payoff(t, p2_tau12(t), h);
  const RationalVector b = stopped_payoff(t, constant_stopping_time(t, 2), h);
  RationalVector psi(t.leaf_count());
  for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = (a[i] + b[i]) / 2;
  return TerminalClaim(psi);
}

inline MarketFile fixture_p2() {
  MarketFile f = MarketBuilder()
                     .node("0", std::nullopt, 4)
                     .node("u", "0", 6)
                     .node("uu", "u", 9)
                     .node("um", "u", 6)
                     .node("ud", "u", 3)
                     .node("d", "0", 2)
                     .node("du", "d", 3)
                     .node("dm", "d", 2)
                     .node("dd", "d", 1)
                     .build();
  f.market.american.push_back({"h", p2_h(f.market.tree), 0});
  f.european_claims.push_back({"psi", p2_psi(f.market.tree)});
  return f;
}

/// Measure of P2 with up-branch parameter p = Q(uu | u) = Q(ud | u) and
/// down-branch parameter q = Q(du | d) = Q(dd | d). Not necessarily
/// nonnegative outside [0, 1/2]^2.
inline Measure p2_measure(const EventTree& t, const Rational& p, const Rational& q) {
  const Rational half(1, 2);
  return Measure(leaf_values(t, {{"uu", half * p}, {"um", half * (1 - 2 * p)}, {"ud", half * p},
                                 {"du", half * q}, {"dm", half * (1 - 2 * q)}, {"dd", half * q}}));
}

inline MarketFile load_fixture(const std::string& name) {
  if (name == "B1") return fixture_b1();
  if (name == "T2") return fixture_t2();
  if (name == "P2") return fixture_p2();
  throw std::invalid_argument("unknown fixture '" + name + "' (expected B1, T2 or P2)");
}

/// Recomputes the closed-form expressions that pin down P2 from the stored
/// tree. Returns the list of mismatches (empty on success).
inline std::vector<std::string> p2_self_test() {
  std::vector<std::string> failures;
  const MarketFile f = fixture_p2();
  const MarketSpec& m = f.market;
  const EventTree& t = m.tree;
  const RationalVector psi = f.european_claims.at(0).payoff.values;
  // E_Q psi is affine in (p, q); recover its coefficients from three points.
  const auto e = [&](const Rational& p, const Rational& q) { return dot(p2_measure(t, p, q).weights, psi); };
  const Rational c0 = e(0, 0);
  const Rational cp = e(1, 0) - c0;
  const Rational cq = e(0, 1) - c0;
  if (cp != Rational(3, 4) || cq != 5 || c0 != Rational(-5, 4)) {
    failures.push_back("E_Q psi = " + to_string(cp) + " p + " + to_string(cq) + " q + " + to_string(c0) +
                       ", expected 3/4 p + 5 q - 5/4");
  }
  if (e(Rational(1, 3), Rational(1, 5)) != 0) failures.push_back("E_Q psi does not vanish at (1/3, 1/5)");
  // Martingale property of the parametrized family, and nothing else.
  for (const auto& [p, q] : std::vector<std::pair<Rational, Rational>>{{0, 0}, {Rational(1, 3), Rational(1, 5)}, {Rational(1, 2), Rational(1, 7)}}) {
    const RationalVector mass = node_masses(t, p2_measure(t, p, q).weights);
    for (NodeId n : t.decision_nodes()) {
      Rational drift = 0;
      for (NodeId c : t.children(n)) drift += mass[c] * (m.stock.at(c, 0) - m.stock.at(n, 0));
      if (sgn(drift) != 0) failures.push_back("parametrized family is not a martingale at '" + t.id(n) + "'");
    }
  }
  // Snell root of h equals ((1/2)[(3p) v 1] + (1/2)[(10q - 3) v (-2)]) v (-1).
  for (int i = 0; i <= 4; ++i) {
    for (int j = 0; j <= 4; ++j) {
      const Rational p = frac(i, 8), q = frac(j, 8);
      const Rational expected =
          rmax(Rational(-1), Rational(rmax(3 * p, Rational(1)) / 2 + rmax(Rational(10 * q - 3), Rational(-2)) / 2));
      const Rational got = snell_value(t, p2_measure(t, p, q), m.american.at(0).payoff);
      if (got != expected) {
        failures.push_back("Snell value at (" + to_string(p) + ", " + to_string(q) + ") is " + to_string(got) +
                           ", expected " + to_string(expected));
      }
    }
  }
  if (count_stopping_times(t) != 5) failures.push_back("P2 should have five stopping times");
  return failures;
}

}  // namespace semistatic
