#include <gtest/gtest.h>

#include <random>

#include "semistatic/fixtures.hpp"
#include "semistatic/stopping.hpp"

using namespace semistatic;

namespace {

/// Independent count: a stopping time either stops at n or, for a non-leaf n,
/// picks one stopping time in every child subtree.
std::uint64_t recursive_count(const EventTree& t, NodeId n) {
  if (t.is_leaf(n)) return 1;
  std::uint64_t prod = 1;
  for (NodeId c : t.children(n)) prod *= recursive_count(t, c);
  return prod + 1;
}

ScalarProcess put(const MarketSpec& m, int strike) {
  ScalarProcess h(m.tree.size());
  for (NodeId n = 0; n < m.tree.size(); ++n) h[n] = rmax(Rational(0), Rational(strike - m.stock.at(n, 0)));
  return h;
}

}  // namespace

TEST(Enumerate, OnePeriod) {
  const EventTree t = fixture_b1().market.tree;
  const auto taus = enumerate_stopping_times(t);
  EXPECT_EQ(taus.size(), 2u);
  EXPECT_NE(std::find(taus.begin(), taus.end(), constant_stopping_time(t, 0)), taus.end());
  EXPECT_NE(std::find(taus.begin(), taus.end(), constant_stopping_time(t, 1)), taus.end());
}

TEST(Enumerate, TwoPeriodTreesHaveFive) {
  for (const char* name : {"T2", "P2"}) {
    const EventTree t = load_fixture(name).market.tree;
    const auto taus = enumerate_stopping_times(t);
    EXPECT_EQ(taus.size(), 5u) << name;
    std::set<StoppingTime> unique(taus.begin(), taus.end());
    EXPECT_EQ(unique.size(), taus.size());
    for (const auto& tau : taus) EXPECT_TRUE(is_valid_stopping_time(t, tau));
  }
}

TEST(Enumerate, CountMatchesRecursion) {
  MarketBuilder b;
  b.node("0", std::nullopt, 1);
  for (const char* a : {"a", "b", "c"}) {
    b.node(a, "0", 1);
    for (const char* c : {"x", "y", "z"}) {
      const std::string id = std::string(a) + c;
      b.node(id, a, 1);
      for (const char* d : {"1", "2", "3"}) b.node(id + d, id, 1);
    }
  }
  const EventTree t = b.build().market.tree;
  EXPECT_EQ(count_stopping_times(t), recursive_count(t, t.root()));
  EXPECT_EQ(count_stopping_times(t), 730u);
  EXPECT_EQ(enumerate_stopping_times(t).size(), 730u);
  EXPECT_THROW(enumerate_stopping_times(t, 100), EnumerationCapExceeded);
}

TEST(Liquidate, ExerciseAtZero) {
  const MarketSpec m = fixture_p2().market;
  const auto s = as_liquidating(m.tree, constant_stopping_time(m.tree, 0));
  for (std::size_t i = 0; i < m.tree.leaf_count(); ++i) {
    EXPECT_EQ(liquidate_payoff(m.tree, s, m.american[0].payoff, i), m.american[0].payoff[m.tree.root()]);
  }
}

TEST(Liquidate, EmbeddingMatchesStoppedPayoff) {
  const MarketSpec m = fixture_p2().market;
  for (const auto& tau : enumerate_stopping_times(m.tree)) {
    const auto s = as_liquidating(m.tree, tau);
    EXPECT_TRUE(is_valid_liquidating(m.tree, s));
    const auto payoff = stopped_payoff(m.tree, tau, m.american[0].payoff);
    for (std::size_t i = 0; i < m.tree.leaf_count(); ++i) {
      EXPECT_EQ(liquidate_payoff(m.tree, s, m.american[0].payoff, i), payoff[i]);
    }
  }
}

TEST(Mixture, P2PsiIsHalfHalf) {
  const MarketFile f = fixture_p2();
  const EventTree& t = f.market.tree;
  const auto eta = strategy_from_mixture(t, {Rational(1, 2), Rational(1, 2)}, {p2_tau12(t), constant_stopping_time(t, 2)});
  EXPECT_TRUE(is_valid_liquidating(t, eta));
  for (std::size_t i = 0; i < t.leaf_count(); ++i) {
    EXPECT_EQ(liquidate_payoff(t, eta, f.market.american[0].payoff, i), f.european_claims[0].payoff[i]);
  }
}

TEST(Mixture, SingleAndDuplicate) {
  const EventTree t = fixture_t2().market.tree;
  const StoppingTime tau = constant_stopping_time(t, 1);
  const auto one = strategy_from_mixture(t, {1}, {tau});
  const auto two = strategy_from_mixture(t, {Rational(1, 2), Rational(1, 2)}, {tau, tau});
  EXPECT_EQ(one.eta.values, as_liquidating(t, tau).eta.values);
  EXPECT_EQ(one.eta.values, two.eta.values);
  EXPECT_THROW(strategy_from_mixture(t, {Rational(1, 2)}, {tau}), std::invalid_argument);
}

TEST(Snell, Constant) {
  const MarketSpec m = fixture_t2().market;
  const ScalarProcess h(m.tree.size(), Rational(7, 3));
  const auto r = snell_envelope(m.tree, Measure({1, 0, 0, 0}), h);
  EXPECT_EQ(r.value, Rational(7, 3));
  for (const auto& v : r.envelope.values) EXPECT_EQ(v, Rational(7, 3));
  EXPECT_TRUE(r.zero_mass[*m.tree.find("d")]);
}

TEST(Snell, T2PutStrikeFive) {
  const MarketSpec m = fixture_t2().market;
  const Measure q({Rational(1, 9), Rational(2, 9), Rational(2, 9), Rational(4, 9)});
  const ScalarProcess h = put(m, 5);
  const auto r = snell_envelope(m.tree, q, h);
  EXPECT_EQ(r.value, Rational(20, 9));
  EXPECT_EQ(r.envelope[*m.tree.find("u")], Rational(2, 3));
  EXPECT_EQ(r.envelope[*m.tree.find("d")], 3);
  EXPECT_EQ(best_stopping_time_by_scan(m.tree, q, h).first, Rational(20, 9));
}

TEST(Snell, B1) {
  const MarketSpec m = fixture_b1().market;
  const ScalarProcess h = node_values(m.tree, {{"0", 1}, {"u", 0}, {"d", 3}});
  EXPECT_EQ(snell_value(m.tree, Measure({Rational(1, 2), Rational(1, 2)}), h), Rational(3, 2));
}

TEST(Snell, SupermartingaleDominatesAndMatchesScanAndLp) {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> val(-5, 7), w(0, 4);
  const MarketSpec m = fixture_p2().market;
  for (int trial = 0; trial < 50; ++trial) {
    ScalarProcess h(m.tree.size());
    for (auto& v : h.values) v = frac(val(rng), 1 + trial % 4);
    RationalVector q(m.tree.leaf_count());
    Rational total = 0;
    for (auto& x : q) total += (x = w(rng));
    if (sgn(total) == 0) continue;
    for (auto& x : q) x /= total;
    const Measure mq(q);
    const auto r = snell_envelope(m.tree, mq, h);
    const RationalVector mass = node_masses(m.tree, q);
    for (NodeId n = 0; n < m.tree.size(); ++n) {
      EXPECT_GE(r.envelope[n], h[n]);
      if (!m.tree.is_leaf(n) && sgn(mass[n]) > 0) {
        Rational cond = 0;
        for (NodeId c : m.tree.children(n)) cond += mass[c] * r.envelope[c];
        EXPECT_LE(cond / mass[n], r.envelope[n]);
      }
    }
    EXPECT_EQ(best_stopping_time_by_scan(m.tree, mq, h).first, r.value);
    EXPECT_EQ(best_liquidating_strategy(m.tree, mq, h).first, r.value);
    EXPECT_EQ(dot(q, stopped_payoff(m.tree, r.greedy, h)), r.value);
  }
}
