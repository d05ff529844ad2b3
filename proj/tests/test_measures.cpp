#include <gtest/gtest.h>

#include "semistatic/fixtures.hpp"
#include "semistatic/measures.hpp"

using namespace semistatic;

namespace {

MarketSpec b1_with_call(const Rational& price) {
  MarketSpec m = fixture_b1().market;
  m.buy_only.push_back({"call2", TerminalClaim(leaf_values(m.tree, {{"u", 1}, {"d", 0}})), price});
  return m;
}

}  // namespace

TEST(MartingaleSystem, B1) {
  const MarketSpec m = fixture_b1().market;
  const MeasureProgram p = martingale_system(m);
  EXPECT_EQ(p.lp.constraints.size(), 2u);
  const auto v = closure_vertices(pricing_set_spec(m));
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0], (RationalVector{Rational(1, 2), Rational(1, 2)}));
}

TEST(MartingaleSystem, T2HasThreeNodeEquations) {
  const MarketSpec m = fixture_t2().market;
  const MeasureProgram p = martingale_system(m);
  EXPECT_EQ(p.lp.constraints.size(), 4u);
  EXPECT_EQ(free_parameter_count(pricing_set_spec(m)), 0u);
}

TEST(MartingaleSystem, P2HasTwoParameters) {
  const MarketSpec m = fixture_p2().market;
  EXPECT_EQ(free_parameter_count(pricing_set_spec(m)), 2u);
}

TEST(ClosurePolytope, InfeasibleCapsGiveEmptySet) {
  MarketSpec m = fixture_p2().market;
  m.american[0].price = Rational(-3, 2);  // below the minimal Snell value -1
  EXPECT_TRUE(closure_vertices(pricing_set_spec(m)).empty());
}

TEST(ClosurePolytope, LazyEqualsEnumeration) {
  for (const char* name : {"P2", "T2"}) {
    MarketSpec m = load_fixture(name).market;
    if (m.american.empty()) {
      ScalarProcess h(m.tree.size());
      for (NodeId n = 0; n < m.tree.size(); ++n) h[n] = rmax(Rational(0), Rational(5 - m.stock.at(n, 0)));
      m.american.push_back({"put", h, 3});
    }
    PricingSetSpec s = pricing_set_spec(m);
    s.caps.mode = CapMode::kEnumerate;
    auto a = closure_vertices(s);
    s.caps.mode = CapMode::kLazy;
    const ClosurePolytope lazy = closure_polytope(s);
    EXPECT_TRUE(lazy.lazy);
    auto b = vertices(lazy.polytope);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b) << name;
  }
}

TEST(ClosurePolytope, VerticesRespectCaps) {
  const MarketSpec m = fixture_p2().market;
  for (const auto& v : closure_vertices(pricing_set_spec(m))) {
    EXPECT_LE(snell_value(m.tree, Measure(v), m.american[0].payoff), m.american[0].price);
  }
}

TEST(MaxSlack, B1CallExample) {
  const MarketSpec m = b1_with_call(Rational(3, 4));
  PricingSetSpec s = pricing_set_spec(m);
  s.strict_floor = false;
  const auto r = max_slack(s);
  ASSERT_EQ(r.status, LpStatus::kOptimal);
  EXPECT_EQ(r.optimum, Rational(1, 4));
  EXPECT_EQ(r.witness[0], Rational(1, 2));
  EXPECT_EQ(verify_certificate(r.certificate.lp, r.certificate.solution), "");
}

TEST(MaxSlack, PriceBelowInfimumHasNoSlack) {
  const MarketSpec m = b1_with_call(Rational(1, 3));
  const auto r = max_slack(pricing_set_spec(m));
  ASSERT_EQ(r.status, LpStatus::kOptimal);
  EXPECT_LE(r.optimum, 0);
  EXPECT_FALSE(r.positive());
}

TEST(MaxSlack, P2WitnessInsideRegionA) {
  const MarketSpec m = fixture_p2().market;
  const PricingSetSpec s = pricing_set_spec(m);
  const auto r = max_slack(s);
  ASSERT_TRUE(r.positive());
  EXPECT_TRUE(membership(r.witness, s, true).member);
  EXPECT_EQ(verify_certificate(r.certificate.lp, r.certificate.solution), "");
}

TEST(MaxSlack, DensityOfStrictSet) {
  const MarketSpec m = fixture_p2().market;
  const PricingSetSpec s = pricing_set_spec(m);
  const auto r = max_slack(s);
  ASSERT_TRUE(r.positive());
  for (const auto& v : closure_vertices(s)) {
    for (const Rational& lambda : {Rational(1), Rational(1, 2), Rational(1, 1000)}) {
      RationalVector mix(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) mix[i] = lambda * r.witness[i] + (1 - lambda) * v[i];
      EXPECT_TRUE(membership(Measure(mix), s, true).member);
    }
  }
}

TEST(Membership, Examples) {
  const MarketFile t2 = fixture_t2();
  PricingSetSpec st = pricing_set_spec(t2.market);
  EXPECT_TRUE(membership(Measure({Rational(1, 9), Rational(2, 9), Rational(2, 9), Rational(4, 9)}), st, true).member);

  const MarketFile p2 = fixture_p2();
  const PricingSetSpec s = pricing_set_spec(p2.market);
  const EventTree& t = p2.market.tree;
  EXPECT_TRUE(membership(p2_measure(t, Rational(1, 3), Rational(1, 5)), s, false).member);
  const auto bad = membership(p2_measure(t, frac(45, 100), frac(45, 100)), s, false);
  EXPECT_FALSE(bad.member);
  ASSERT_FALSE(bad.violations.empty());
  EXPECT_NE(bad.violations.front().find("'h'"), std::string::npos) << bad.violations.front();
}

TEST(Membership, ReportsMartingaleViolation) {
  const MarketSpec m = fixture_b1().market;
  const auto r = membership(Measure({Rational(1, 3), Rational(2, 3)}), pricing_set_spec(m), false);
  EXPECT_FALSE(r.member);
  EXPECT_NE(r.violations.front().find("'0'"), std::string::npos);
}

TEST(ParameterRegion, T2IsAPoint) {
  const MarketSpec m = fixture_t2().market;
  const auto r = parameter_region(pricing_set_spec(m), {});
  EXPECT_EQ(r.free_parameters, 0u);
  EXPECT_EQ(r.polygon.size(), 1u);
}

TEST(ParameterRegion, EmptyWhenCapsInfeasible) {
  MarketSpec m = fixture_p2().market;
  m.american[0].price = -2;
  EXPECT_TRUE(parameter_region(pricing_set_spec(m), {"uu", "du"}).polygon.empty());
}

TEST(ParameterRegion, ContainsEvaluationPoint) {
  const MarketSpec m = fixture_p2().market;
  const auto r = parameter_region(pricing_set_spec(m), {"uu", "du"});
  const RationalVector pt{Rational(1, 3), Rational(1, 5)};
  EXPECT_NE(std::find(r.polygon.begin(), r.polygon.end(), pt), r.polygon.end());
  EXPECT_THROW(parameter_region(pricing_set_spec(m), {"uu"}), std::invalid_argument);
}
