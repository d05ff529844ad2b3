#include <gtest/gtest.h>

#include "semistatic/fixtures.hpp"
#include "semistatic/ftap.hpp"

using namespace semistatic;

namespace {

void expect_sound(const MarketSpec& m, const ArbitrageVerdict& v) {
  for (const auto& x : verdict_violations(m, v)) ADD_FAILURE() << to_string(v.verdict) << ": " << x;
}

/// P2 with the claim psi sold at `price`, i.e. buy-only -psi at -price.
MarketSpec p2_selling_psi(const Rational& price) {
  const MarketFile f = fixture_p2();
  MarketSpec m = f.market;
  RationalVector neg = f.european_claims[0].payoff.values;
  for (auto& v : neg) v = -v;
  m.buy_only.push_back({"minus_psi", TerminalClaim(neg), -price});
  return m;
}

}  // namespace

TEST(CheckNa, B1Plain) {
  const MarketSpec m = fixture_b1().market;
  const ArbitrageVerdict v = check_na(m);
  EXPECT_EQ(v.verdict, Verdict::kNoArbitrage);
  expect_sound(m, v);
}

TEST(CheckNa, B1OverpricedForward) {
  MarketSpec m = fixture_b1().market;
  m.two_sided.push_back({"fwd", TerminalClaim(leaf_values(m.tree, {{"u", 3}, {"d", 1}})), 3});
  const ArbitrageVerdict v = check_na(m);
  ASSERT_EQ(v.verdict, Verdict::kArbitrage);
  expect_sound(m, v);
  // The certificate sells the forward.
  EXPECT_LT(v.portfolio->a[0], 0);
}

TEST(CheckNa, P2AtZeroPrice) {
  const MarketSpec m = fixture_p2().market;
  const ArbitrageVerdict v = check_na(m);
  EXPECT_EQ(v.verdict, Verdict::kNoArbitrage);
  expect_sound(m, v);
}

TEST(CheckNa, StockWithoutDownsideIsArbitrage) {
  const MarketSpec m = MarketBuilder().node("0", std::nullopt, 2).node("u", "0", 3).node("d", "0", 2).build().market;
  EXPECT_EQ(check_na(m).verdict, Verdict::kArbitrage);
  const ArbitrageVerdict s = check_sna(m);
  EXPECT_EQ(s.verdict, Verdict::kArbitrage);
  expect_sound(m, s);
}

TEST(CheckSna, P2WitnessIsInsideA) {
  const MarketSpec m = fixture_p2().market;
  const ArbitrageVerdict v = check_sna(m);
  ASSERT_EQ(v.verdict, Verdict::kNoArbitrage);
  expect_sound(m, v);
  EXPECT_TRUE(membership(*v.measure, pricing_set_spec(m), true).member);
  ASSERT_EQ(v.eps_h.size(), 1u);
  EXPECT_GT(v.eps_h[0], 0);
}

TEST(CheckSna, ShiftedPricesKeepNoArbitrage) {
  const MarketSpec m = fixture_p2().market;
  const ArbitrageVerdict v = check_sna(m);
  ASSERT_EQ(v.verdict, Verdict::kNoArbitrage);
  RationalVector h = m.american_prices();
  for (std::size_t k = 0; k < h.size(); ++k) h[k] -= v.eps_h[k];
  EXPECT_EQ(check_na(m, m.buy_only_prices(), h, m.reference_support).verdict, Verdict::kNoArbitrage);
}

TEST(CheckSna, ReplicablePriceFailsOnlyStrictly) {
  MarketSpec m = fixture_b1().market;
  m.buy_only.push_back({"digital", TerminalClaim(leaf_values(m.tree, {{"u", 1}, {"d", 0}})), Rational(1, 2)});
  EXPECT_EQ(check_na(m).verdict, Verdict::kNoArbitrage);
  const ArbitrageVerdict v = check_sna(m);
  ASSERT_EQ(v.verdict, Verdict::kStrictNoArbitrageFails);
  expect_sound(m, v);
  EXPECT_GT(v.portfolio->b[0], 0);
  EXPECT_FALSE(max_slack(pricing_set_spec(m)).positive());
  EXPECT_THROW(find_pricing_measure(m), SnaRequired);
}

TEST(CheckSna, PlainMarketsReduceToEmmExistence) {
  EXPECT_EQ(check_sna(fixture_b1().market).verdict, Verdict::kNoArbitrage);
  EXPECT_EQ(check_sna(fixture_t2().market).verdict, Verdict::kNoArbitrage);
}

TEST(SellingPsi, DivisibleArbitrageIndivisibleNone) {
  const MarketSpec m = p2_selling_psi(Rational(1, 16));
  // Divisible: sell psi at 1/16, super-hedge it for 0.
  const ArbitrageVerdict div = check_na(m);
  ASSERT_EQ(div.verdict, Verdict::kArbitrage);
  expect_sound(m, div);
  // Indivisible: every single stopping time leaves a super-hedge cost of at least 1/8.
  const ArbitrageVerdict ind = check_na_indivisible(m, m.buy_only_prices(), m.american_prices(), m.reference_support);
  EXPECT_EQ(ind.verdict, Verdict::kNoArbitrage);
  expect_sound(m, ind);
  // ... yet there is no pricing measure.
  EXPECT_FALSE(max_slack(pricing_set_spec(m)).positive());
  EXPECT_NE(check_sna(m).verdict, Verdict::kNoArbitrage);
}

TEST(SellingPsi, IndivisibleArbitrageAboveOneEighth) {
  const MarketSpec m = p2_selling_psi(Rational(1, 5));
  const ArbitrageVerdict ind = check_na_indivisible(m, m.buy_only_prices(), m.american_prices(), m.reference_support);
  ASSERT_EQ(ind.verdict, Verdict::kArbitrage);
  expect_sound(m, ind);
  ASSERT_EQ(ind.taus.size(), 1u);
  EXPECT_EQ(ind.taus[0], p2_tau12(m.tree));
}

TEST(SellingPsi, NegativeSellingPriceAdmitsMeasure) {
  const MarketSpec m = p2_selling_psi(Rational(-1, 16));
  const ArbitrageVerdict v = check_sna(m);
  EXPECT_EQ(v.verdict, Verdict::kNoArbitrage);
  expect_sound(m, v);
}

TEST(PricingMeasure, B1AndT2) {
  EXPECT_EQ(find_pricing_measure(fixture_b1().market), Measure({Rational(1, 2), Rational(1, 2)}));
  MarketSpec t2 = fixture_t2().market;
  t2.buy_only.push_back({"call", TerminalClaim(leaf_values(t2.tree, {{"uu", 12}, {"ud", 0}, {"du", 0}, {"dd", 0}})), 100});
  EXPECT_EQ(find_pricing_measure(t2), Measure({Rational(1, 9), Rational(2, 9), Rational(2, 9), Rational(4, 9)}));
}

TEST(PricingMeasure, P2IsStrictlyInsideA) {
  const MarketSpec m = fixture_p2().market;
  const Measure q = find_pricing_measure(m);
  for (std::size_t i = 0; i < q.size(); ++i) EXPECT_GT(q[i], 0);
  EXPECT_LT(snell_value(m.tree, q, m.american[0].payoff), 0);
}

TEST(Certificates, CorruptedArbitrageIsRejected) {
  MarketSpec m = fixture_b1().market;
  m.two_sided.push_back({"fwd", TerminalClaim(leaf_values(m.tree, {{"u", 3}, {"d", 1}})), 3});
  ArbitrageVerdict v = check_na(m);
  ASSERT_EQ(v.verdict, Verdict::kArbitrage);
  v.portfolio->a[0] = 1;
  EXPECT_FALSE(verdict_violations(m, v).empty());
}

TEST(Certificates, JsonReport) {
  const MarketSpec m = fixture_p2().market;
  const Json j = verdict_to_json(m, check_sna(m));
  EXPECT_EQ(j["verdict"], "NO_ARBITRAGE");
  EXPECT_TRUE(j.contains("measure"));
}
