#include <gtest/gtest.h>

#include <sstream>

#include "semistatic/cli.hpp"

using namespace semistatic;

namespace {

struct Invocation {
  int code;
  Json report;
  std::string err;
};

Invocation invoke(const std::vector<std::string>& args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = cli::run(args, in, out, err);
  Json j;
  if (!out.str().empty() && out.str().front() != ' ') j = Json::parse(out.str(), nullptr, false);
  return {code, j, err.str()};
}

std::string fixture_text(const std::string& name) { return serialize_market(load_fixture(name)); }

/// Removes timing fields so two reports can be compared.
Json strip(Json j) {
  if (j.is_object()) {
    j.erase("timings_ms");
    for (auto& [k, v] : j.items()) v = strip(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = strip(v);
  }
  return j;
}

}  // namespace

TEST(Cli, FixtureRoundTrips) {
  std::istringstream in;
  std::ostringstream out, err;
  ASSERT_EQ(cli::run({"fixture", "P2"}, in, out, err), 0);
  EXPECT_TRUE(same_market(parse_market(out.str()), fixture_p2()));
}

TEST(Cli, P2SuperHedgePrices) {
  const Invocation ind = invoke({"price", "super-indiv"}, fixture_text("P2"));
  ASSERT_EQ(ind.code, 0) << ind.err;
  EXPECT_EQ(ind.report["result"]["price"], "1/8");
  EXPECT_EQ(ind.report["result"]["verified"], true);
  EXPECT_EQ(ind.report["schema_version"], cli::kReportSchemaVersion);
  const Invocation div = invoke({"price", "super-div", "--market", "-"}, fixture_text("P2"));
  ASSERT_EQ(div.code, 0) << div.err;
  EXPECT_EQ(div.report["result"]["price"], "0");
}

TEST(Cli, ApproxRendersDecimals) {
  const Invocation r = invoke({"price", "super-indiv", "--approx"}, fixture_text("P2"));
  ASSERT_EQ(r.code, 0);
  EXPECT_DOUBLE_EQ(r.report["result"]["price"].get<double>(), 0.125);
}

TEST(Cli, ArbitrageExitCode) {
  MarketFile f = fixture_b1();
  f.market.two_sided.push_back({"fwd", TerminalClaim(leaf_values(f.market.tree, {{"u", 3}, {"d", 1}})), 3});
  const Invocation r = invoke({"check-arbitrage"}, serialize_market(f));
  EXPECT_EQ(r.code, cli::kArbitrageFound);
  EXPECT_EQ(r.report["result"]["verdict"], "ARBITRAGE");
  EXPECT_EQ(invoke({"check-arbitrage", "--strict"}, fixture_text("P2")).code, 0);
}

TEST(Cli, StrictFailureNeedsTheHypothesis) {
  MarketFile f = fixture_b1();
  f.market.buy_only.push_back({"digital", TerminalClaim(leaf_values(f.market.tree, {{"u", 1}, {"d", 0}})), Rational(1, 2)});
  f.european_claims.push_back({"digital", TerminalClaim(leaf_values(f.market.tree, {{"u", 1}, {"d", 0}}))});
  const Invocation v = invoke({"check-arbitrage", "--strict"}, serialize_market(f));
  EXPECT_EQ(v.code, 0);
  EXPECT_EQ(v.report["result"]["verdict"], "STRICT_NO_ARBITRAGE_FAILS");
  EXPECT_EQ(invoke({"price", "sub-eu"}, serialize_market(f)).code, cli::kArbitrageFound);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(invoke({}).code, cli::kUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, cli::kUsage);
  EXPECT_EQ(invoke({"price", "super-div", "--bogus"}).code, cli::kUsage);
  EXPECT_EQ(invoke({"price", "cheapest"}).code, cli::kUsage);
  EXPECT_EQ(invoke({"price", "sub-am"}, fixture_text("P2")).code, cli::kUsage);
  EXPECT_EQ(invoke({"price", "super-div"}, "{ not json").code, cli::kUsage);
  EXPECT_EQ(invoke({"robust", "check"}, fixture_text("T2")).code, cli::kUsage);
}

TEST(Cli, ReportsAreDeterministic) {
  const Invocation a = invoke({"price", "super-indiv"}, fixture_text("P2"));
  const Invocation b = invoke({"price", "super-indiv"}, fixture_text("P2"));
  EXPECT_EQ(strip(a.report).dump(), strip(b.report).dump());
}

TEST(Cli, RobustCommands) {
  MarketFile f = fixture_t2();
  f.priors.push_back(Measure(RationalVector(4, Rational(1, 4))));
  f.priors.push_back(Measure({Rational(1, 3), Rational(1, 3), Rational(1, 3), Rational(0)}));
  f.european_claims.push_back({"put", TerminalClaim(leaf_values(f.market.tree, {{"uu", 0}, {"ud", 1}, {"du", 1}, {"dd", 4}}))});
  f.american_claims.push_back({"put", node_values(f.market.tree, {{"0", 1}, {"u", 0}, {"uu", 0}, {"ud", 1}, {"d", 3}, {"du", 1}, {"dd", 4}})});
  const std::string text = serialize_market(f);
  EXPECT_EQ(invoke({"robust", "check"}, text).report["result"]["quasi_sure_sna"], true);
  const Invocation p = invoke({"robust", "price", "sub-eu"}, text);
  ASSERT_EQ(p.code, 0) << p.err;
  EXPECT_EQ(p.report["result"]["price"], "20/9");
  const Invocation mm = invoke({"robust", "minimax"}, text);
  ASSERT_EQ(mm.code, 0) << mm.err;
  EXPECT_EQ(mm.report["result"]["consistent"], true);
  EXPECT_EQ(invoke({"robust", "dominate"}, text).code, 0);
}

TEST(Cli, UtilityAudit) {
  const Invocation r = invoke({"utility", "audit", "--utility", "log", "--x-grid", "0.5,1,2", "--y-grid", "1"}, fixture_text("B1"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.report["result"]["passed"], true);
  EXPECT_NEAR(r.report["result"]["x_rows"][1]["u"].get<double>(), 0, 1e-9);
}

TEST(Cli, RegionOfP2ContainsTheEvaluationPoint) {
  const Invocation r = invoke({"region", "--params", "uu,du"}, fixture_text("P2"));
  ASSERT_EQ(r.code, 0) << r.err;
  bool found = false;
  for (const auto& v : r.report["result"]["polygon"]) found = found || v == Json::array({"1/3", "1/5"});
  EXPECT_TRUE(found);
}

TEST(Cli, Selftest) {
  const Invocation r = invoke({"selftest"});
  EXPECT_EQ(r.code, 0) << r.report.dump(2);
  EXPECT_EQ(r.report["result"]["passed"], true);
}
