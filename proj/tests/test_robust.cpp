#include <gtest/gtest.h>

#include "semistatic/fixtures.hpp"
#include "semistatic/robust.hpp"

using namespace semistatic;

namespace {

ScalarProcess put(const MarketSpec& m, const Rational& strike) {
  ScalarProcess p(m.tree.size());
  for (NodeId n = 0; n < m.tree.size(); ++n) p[n] = rmax(Rational(0), strike - m.stock.at(n, 0));
  return p;
}

Measure uniform(std::size_t n) { return Measure(RationalVector(n, Rational(1, static_cast<long>(n)))); }

/// T2 with a full-support prior and a prior on {uu, ud, du}.
RobustSpec t2_two_priors() {
  RobustSpec s{fixture_t2().market, {}};
  s.priors.push_back(uniform(4));
  s.priors.push_back(Measure(leaf_values(s.market.tree, {{"uu", Rational(1, 3)}, {"ud", Rational(1, 3)}, {"du", Rational(1, 3)}})));
  return s;
}

}  // namespace

TEST(UnionSupport, Examples) {
  EXPECT_EQ(union_support({uniform(3)}), LeafSet(3, true));
  EXPECT_EQ(union_support({Measure({1, 0, 0}), Measure({0, 0, 1})}), (LeafSet{true, false, true}));
  EXPECT_EQ(union_support(t2_two_priors().priors), LeafSet(4, true));
}

TEST(RobustPricingSet, PartialSupportComponentIsEmpty) {
  const RobustSpec s = t2_two_priors();
  const auto comps = robust_pricing_set(s, {}, {});
  ASSERT_EQ(comps.size(), 2u);
  EXPECT_EQ(vertices(comps[0].polytope).size(), 1u);
  EXPECT_TRUE(vertices(comps[1].polytope).empty());
}

TEST(RobustPricingSet, SingletonReducesToClosure) {
  const MarketSpec m = fixture_p2().market;
  const RobustSpec s{m, {uniform(m.tree.leaf_count())}};
  const auto comps = robust_pricing_set(s, {}, quoted(m.american_prices()));
  EXPECT_EQ(vertices(comps[0].polytope), closure_vertices(pricing_set_spec(m)));
}

TEST(RobustPricingSet, InfiniteCapsArePureMartingalePolytopes) {
  const MarketSpec m = fixture_p2().market;
  const RobustSpec s{m, {uniform(m.tree.leaf_count())}};
  const auto comps = robust_pricing_set(s, {}, {ExtendedRational::plus_infinity()});
  PricingSetSpec mm = pricing_set_spec(m);
  mm.h_cap = {ExtendedRational::plus_infinity()};
  EXPECT_EQ(vertices(comps[0].polytope), closure_vertices(mm));
  EXPECT_EQ(vertices(comps[0].polytope).size(), 4u);
}

TEST(SubHedgeRobust, SingletonMatchesSinglePrior) {
  const MarketFile f = fixture_p2();
  const RobustSpec s{f.market, {uniform(f.market.tree.leaf_count())}};
  const RobustHedgeResult r = sub_hedge_robust(s, f.european_claims[0].payoff);
  EXPECT_EQ(r.hedge.price, sub_hedge_european(f.market, f.european_claims[0].payoff).price);
  EXPECT_TRUE(robust_hedge_violations(s, r).empty());
  const RobustHedgeResult a = sub_hedge_robust(s, p2_h(f.market.tree));
  EXPECT_EQ(a.hedge.price, sub_hedge_american(f.market, p2_h(f.market.tree)).price);
}

TEST(SubHedgeRobust, T2PutWithTwoPriors) {
  const RobustSpec s = t2_two_priors();
  const RobustHedgeResult r = sub_hedge_robust(s, put(s.market, 5));
  EXPECT_EQ(r.hedge.price, ExtendedRational(Rational(20, 9)));
  EXPECT_EQ(r.hedge.gap, 0);
  ASSERT_EQ(r.component_values.size(), 2u);
  EXPECT_EQ(r.component_values[1], ExtendedRational::plus_infinity());
  ASSERT_TRUE(r.hedge.dual.has_value());
  EXPECT_EQ(snell_value(s.market.tree, *r.hedge.dual, put(s.market, 5)), Rational(20, 9));
  for (const auto& v : robust_hedge_violations(s, r)) ADD_FAILURE() << v;
}

TEST(SubHedgeRobust, ConstantClaim) {
  const RobustSpec s = t2_two_priors();
  EXPECT_EQ(sub_hedge_robust(s, TerminalClaim(RationalVector(4, Rational(3, 7)))).hedge.price,
            ExtendedRational(Rational(3, 7)));
}

TEST(SubHedgeRobust, DisjointPriorsUseTheHull) {
  // B1-like fork per period: priors on {uu, dd} and {ud, du} only.
  RobustSpec s{fixture_t2().market, {}};
  s.priors.push_back(Measure(leaf_values(s.market.tree, {{"uu", Rational(1, 2)}, {"dd", Rational(1, 2)}})));
  s.priors.push_back(Measure(leaf_values(s.market.tree, {{"ud", Rational(1, 2)}, {"du", Rational(1, 2)}})));
  const TerminalClaim psi(leaf_values(s.market.tree, {{"uu", 1}, {"ud", 0}, {"du", 0}, {"dd", 0}}));
  const RobustHedgeResult r = sub_hedge_robust(s, psi);
  EXPECT_EQ(r.components.size(), 3u);
  EXPECT_EQ(r.hedge.price, r.hedge.dual_value);
  EXPECT_EQ(r.hedge.price, ExtendedRational(Rational(1, 9)));
}

TEST(CheckSnaRobust, SingletonAgreesWithCheckSna) {
  for (const char* name : {"B1", "T2", "P2"}) {
    const MarketSpec m = load_fixture(name).market;
    const RobustSpec s{m, {uniform(m.tree.leaf_count())}};
    EXPECT_EQ(check_sna_robust(s).verdict.verdict, check_sna(m).verdict) << name;
  }
}

TEST(CheckSnaRobust, TwoPriorPlainStock) {
  const RobustSpec s = t2_two_priors();
  const RobustVerdict v = check_sna_robust(s);
  EXPECT_TRUE(v.holds());
  for (const auto& x : verdict_violations(s.market, v.verdict)) ADD_FAILURE() << x;
}

TEST(CheckSnaRobust, QuasiSureArbitrage) {
  RobustSpec s = t2_two_priors();
  // The stock itself as a two-sided claim priced off its value.
  s.market.two_sided.push_back({"stock", TerminalClaim(leaf_values(s.market.tree, {{"uu", 16}, {"ud", 4}, {"du", 4}, {"dd", 1}})), 5});
  const RobustVerdict v = check_sna_robust(s);
  EXPECT_EQ(v.verdict.verdict, Verdict::kArbitrage);
  for (const auto& x : verdict_violations(s.market, v.verdict)) ADD_FAILURE() << x;
}

TEST(DominatingMeasure, BaseCaseIsTheFtapWitness) {
  const MarketSpec m = fixture_t2().market;
  const RobustSpec s{m, {uniform(4)}};
  const DominatingMeasure d = dominating_measure(s, s.priors[0]);
  EXPECT_EQ(d.q, find_pricing_measure(m));
}

TEST(DominatingMeasure, CheapAmericanCapOnT2) {
  RobustSpec s = t2_two_priors();
  s.market.american.push_back({"put", put(s.market, 5), Rational(5, 2)});
  for (const auto& p : s.priors) {
    const DominatingMeasure d = dominating_measure(s, p);
    ASSERT_EQ(d.h_tilde.size(), 1u);
    EXPECT_LT(d.h_tilde[0], Rational(5, 2));
    EXPECT_LE(snell_value(s.market.tree, d.q, s.market.american[0].payoff), d.h_tilde[0]);
    EXPECT_TRUE(dominating_violations(s, p, d).empty());
    ASSERT_EQ(d.lambdas.size(), 1u);
    EXPECT_GT(d.lambdas[0], 0);
  }
}

TEST(DominatingMeasure, P2WithSmallPrior) {
  const MarketSpec m = fixture_p2().market;
  RobustSpec s{m, {Measure(leaf_values(m.tree, {{"uu", 1}})), uniform(m.tree.leaf_count())}};
  const DominatingMeasure d = dominating_measure(s, s.priors[0]);
  EXPECT_GT(d.q[m.tree.leaf_index(*m.tree.find("uu"))], 0);
  EXPECT_LT(snell_value(m.tree, d.q, m.american[0].payoff), 0);
}

TEST(DominatingMeasure, FailsWithoutStrictNoArbitrage) {
  MarketSpec m = fixture_t2().market;
  m.american.push_back({"put", put(m, 5), Rational(20, 9)});
  const RobustSpec s{m, {uniform(4)}};
  EXPECT_FALSE(check_sna_robust(s).holds());
  EXPECT_ANY_THROW(dominating_measure(s, s.priors[0], {}, false));
}

TEST(Minimax, SingletonIsSnellSum) {
  const MarketSpec m = fixture_t2().market;
  const Measure emm({Rational(1, 9), Rational(2, 9), Rational(2, 9), Rational(4, 9)});
  const MinimaxResult r = minimax_check(m.tree, {emm}, {put(m, 5), put(m, 3)});
  EXPECT_TRUE(r.consistent());
  EXPECT_EQ(r.rhs, snell_value(m.tree, emm, put(m, 5)) + snell_value(m.tree, emm, put(m, 3)));
}

TEST(Minimax, T2SegmentAndDoubling) {
  const MarketSpec m = fixture_t2().market;
  const Measure emm({Rational(1, 9), Rational(2, 9), Rational(2, 9), Rational(4, 9)});
  const MinimaxResult r = minimax_check(m.tree, {emm, uniform(4)}, {put(m, 5)});
  EXPECT_TRUE(r.consistent()) << r.lhs << " " << r.mid << " " << r.rhs;
  EXPECT_EQ(snell_value(m.tree, r.r_star, put(m, 5)), r.rhs);
  const MinimaxResult twice = minimax_check(m.tree, {emm, uniform(4)}, {put(m, 5), put(m, 5)});
  EXPECT_TRUE(twice.consistent());
  EXPECT_EQ(twice.rhs, 2 * r.rhs);
  // Scan along the segment: no convex combination on a fine grid beats R*.
  for (int i = 0; i <= 24; ++i) {
    const Rational l = frac(i, 24);
    RationalVector w(4);
    for (std::size_t j = 0; j < 4; ++j) w[j] = l * emm[j] + (1 - l) * uniform(4)[j];
    EXPECT_GE(snell_value(m.tree, Measure(w), put(m, 5)), r.rhs);
  }
}
