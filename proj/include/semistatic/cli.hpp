#pragma once

// Command-line front end. Every command writes one JSON report to the output
// stream and diagnostics to the error stream.
//
// Report schema (version 1):
//   {"schema": "semistatic-report", "schema_version": 1, "command": ...,
//    "input": path, "result": {...}, "timings_ms": {...}}
// Batch runs (several --market files) emit an array of such reports.
// Rationals are "p/q" strings unless --approx is given.

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "semistatic/fixtures.hpp"
#include "semistatic/ftap.hpp"
#include "semistatic/hedging.hpp"
#include "semistatic/market_io.hpp"
#include "semistatic/robust.hpp"
#include "semistatic/utility.hpp"

namespace semistatic::cli {

inline constexpr const char* kReportSchema = "semistatic-report";
inline constexpr int kReportSchemaVersion = 1;

enum ExitCode : int { kOk = 0, kUsage = 1, kArbitrageFound = 2, kVerificationFailed = 3 };

struct Outcome {
  int code = kOk;
  Json result;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Settings {
  std::vector<std::string> markets;
  std::string claim_path;
  std::string claim_name;
  bool approx = false;
  std::uint64_t enum_cap = kDefaultEnumerationCap;
  bool oracle_cuts = false;
  unsigned jobs = 1;

  CapOptions caps() const {
    CapOptions c;
    c.enumeration_cap = enum_cap;
    if (oracle_cuts) c.mode = CapMode::kLazy;
    return c;
  }
};

namespace detail {

inline MarketFile load(const std::string& path, std::istream& in) {
  if (path == "-") {
    const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_market(text);
  }
  return load_market_file(path);
}

/// Claims from --claim (a document with a "claims" object or the bare object)
/// appended to those of the market file.
inline void add_claims(MarketFile& f, const Settings& s) {
  if (s.claim_path.empty()) return;
  Json doc;
  try {
    doc = Json::parse(read_text(s.claim_path));
  } catch (const Json::parse_error& e) {
    throw MarketError("claim file: " + std::string(e.what()));
  }
  const Json& c = doc.contains("claims") ? doc.at("claims") : doc;
  const EventTree& t = f.market.tree;
  if (c.contains("european")) {
    for (const auto& e : c.at("european")) {
      const std::string name = semistatic::detail::json_string(semistatic::detail::require(e, "name", "claim"), "claim name");
      f.european_claims.push_back(
          {name, TerminalClaim(semistatic::detail::leaf_payoff(semistatic::detail::require(e, "payoff", name), t, name))});
    }
  }
  if (c.contains("american")) {
    for (const auto& e : c.at("american")) {
      const std::string name = semistatic::detail::json_string(semistatic::detail::require(e, "name", "claim"), "claim name");
      f.american_claims.push_back(
          {name, ScalarProcess(semistatic::detail::node_payoff(semistatic::detail::require(e, "payoff", name), t, name))});
    }
  }
}

template <class Claim>
const Claim& pick_claim(const std::vector<Claim>& claims, const std::string& name, const char* kind) {
  if (claims.empty()) throw UsageError(std::string("no ") + kind + " claim in the market file or --claim");
  if (name.empty()) return claims.front();
  for (const auto& c : claims) {
    if (c.name == name) return c;
  }
  throw UsageError(std::string("no ") + kind + " claim named '" + name + "'");
}

/// Replaces rational strings held as object members by decimals.
inline void approximate(Json& j) {
  if (j.is_object()) {
    for (auto& [key, value] : j.items()) {
      if (value.is_string()) {
        const std::string s = value.get<std::string>();
        if (s.find_first_not_of("-0123456789/") == std::string::npos && s.find_first_of("0123456789") != std::string::npos) {
          try {
            value = parse_rational(s).get_d();
          } catch (const std::exception&) {
          }
        }
      } else {
        approximate(value);
      }
    }
  } else if (j.is_array()) {
    for (auto& v : j) {
      if (!v.is_string()) approximate(v);
    }
  }
}

inline Json measure_json(const EventTree& t, const Measure& q) { return semistatic::detail::leaf_payoff_json(t, q.weights); }

inline Json strings(const RationalVector& v) {
  Json a = Json::array();
  for (const auto& x : v) a.push_back(to_string(x));
  return a;
}

inline RobustSpec robust_spec(const MarketFile& f) {
  if (f.priors.empty()) throw UsageError("robust commands need a 'priors' array in the market file");
  return RobustSpec{f.market, f.priors};
}

inline Outcome check_arbitrage(const MarketFile& f, const Settings& s, bool strict, bool indivisible) {
  const MarketSpec& m = f.market;
  ArbitrageVerdict v;
  if (indivisible) {
    v = check_na_indivisible(m, m.buy_only_prices(), m.american_prices(), m.reference_support, s.caps());
  } else {
    v = strict ? check_sna(m, s.caps()) : check_na(m, s.caps());
  }
  auto bad = verdict_violations(m, v, s.caps());
  if (!bad.empty()) throw VerificationError(std::move(bad));
  Outcome o;
  o.result = verdict_to_json(m, v);
  o.code = v.verdict == Verdict::kArbitrage ? kArbitrageFound : kOk;
  return o;
}

inline Outcome price(const MarketFile& f, const Settings& s, const std::string& kind, bool fractional) {
  const MarketSpec& m = f.market;
  HedgeOptions ho;
  ho.caps = s.caps();
  HedgeResult r;
  std::string claim;
  if (kind == "sub-am") {
    const auto& c = pick_claim(f.american_claims, s.claim_name, "american");
    claim = c.name;
    r = sub_hedge_american(m, c.payoff, ho);
  } else {
    const auto& c = pick_claim(f.european_claims, s.claim_name, "european");
    claim = c.name;
    if (kind == "sub-eu") r = sub_hedge_european(m, c.payoff, ho);
    if (kind == "super-div") r = super_hedge_divisible(m, c.payoff, ho);
    if (kind == "super-indiv") r = super_hedge_indivisible(m, c.payoff, !fractional, ho);
  }
  Outcome o;
  o.result = duality_gap_report(m, r);
  o.result["claim"] = claim;
  return o;
}

inline Outcome robust_check(const MarketFile& f, const Settings& s) {
  const RobustSpec spec = robust_spec(f);
  const RobustVerdict v = check_sna_robust(spec, s.caps());
  auto bad = verdict_violations(spec.market, v.verdict, s.caps());
  if (!bad.empty()) throw VerificationError(std::move(bad));
  Outcome o;
  o.result = verdict_to_json(spec.market, v.verdict);
  Json per = Json::array();
  for (const auto& p : v.per_prior) per.push_back({{"positive", p.positive()}, {"slack", to_string(p.optimum)}});
  o.result["per_prior"] = per;
  o.result["quasi_sure_sna"] = v.holds();
  o.code = v.holds() ? kOk : kArbitrageFound;
  return o;
}

inline Outcome robust_price(const MarketFile& f, const Settings& s, const std::string& kind) {
  const RobustSpec spec = robust_spec(f);
  RobustHedgeResult r;
  std::string claim;
  if (kind == "sub-am") {
    const auto& c = pick_claim(f.american_claims, s.claim_name, "american");
    claim = c.name;
    r = sub_hedge_robust(spec, c.payoff, s.caps());
  } else {
    const auto& c = pick_claim(f.european_claims, s.claim_name, "european");
    claim = c.name;
    r = sub_hedge_robust(spec, c.payoff, s.caps());
  }
  auto bad = robust_hedge_violations(spec, r);
  if (!bad.empty()) throw VerificationError(std::move(bad));
  Outcome o;
  o.result = hedge_to_json(semistatic::detail::on_support(spec.market, r.hedge.support), r.hedge);
  o.result["verified"] = true;
  o.result["claim"] = claim;
  Json comps = Json::array();
  const EventTree& t = spec.market.tree;
  for (std::size_t c = 0; c < r.components.size(); ++c) {
    Json leaves = Json::array();
    for (std::size_t i = 0; i < t.leaf_count(); ++i) {
      if (r.components[c][i]) leaves.push_back(t.id(t.leaves()[i]));
    }
    Json jc = {{"support", leaves}, {"value", r.component_values[c].str()}};
    if (r.component_duals[c]) jc["dual"] = measure_json(t, *r.component_duals[c]);
    comps.push_back(jc);
  }
  o.result["components"] = comps;
  return o;
}

inline Outcome robust_dominate(const MarketFile& f, const Settings& s) {
  const RobustSpec spec = robust_spec(f);
  const RobustVerdict v = check_sna_robust(spec, s.caps());
  Outcome o;
  o.result["quasi_sure_sna"] = v.holds();
  if (!v.holds()) {
    o.code = kArbitrageFound;
    return o;
  }
  Json arr = Json::array();
  for (const auto& p : spec.priors) {
    const DominatingMeasure d = dominating_measure(spec, p, s.caps(), false);
    arr.push_back({{"prior", measure_json(spec.market.tree, p)},
                   {"q", measure_json(spec.market.tree, d.q)},
                   {"g_tilde", strings(d.g_tilde)},
                   {"h_tilde", strings(d.h_tilde)},
                   {"lambdas", strings(d.lambdas)},
                   {"verified", true}});
  }
  o.result["dominating"] = arr;
  return o;
}

inline Outcome robust_minimax(const MarketFile& f, const Settings& s) {
  const RobustSpec spec = robust_spec(f);
  std::vector<ScalarProcess> hs;
  for (const auto& c : f.american_claims) hs.push_back(c.payoff);
  if (hs.empty()) {
    for (const auto& a : spec.market.american) hs.push_back(a.payoff);
  }
  if (hs.empty()) throw UsageError("minimax needs american claims or american options");
  const MinimaxResult r = minimax_check(spec.market.tree, spec.priors, hs, s.caps());
  Outcome o;
  o.result = {{"sup_inf", to_string(r.lhs)},
              {"inf_sup", to_string(r.mid)},
              {"inf_sum_snell", to_string(r.rhs)},
              {"consistent", r.consistent()},
              {"weights", strings(r.weights)},
              {"r_star", measure_json(spec.market.tree, r.r_star)}};
  if (!r.consistent()) o.code = kVerificationFailed;
  return o;
}

inline std::vector<double> default_grid() {
  std::vector<double> g;
  for (int i = 0; i < 20; ++i) g.push_back(0.25 * std::pow(16.0, i / 19.0));
  return g;
}

inline Outcome utility_audit(const MarketFile& f, const Settings& s, const std::string& utility, std::vector<double> xs,
                             std::vector<double> ys) {
  const MarketSpec& m = f.market;
  const Measure prior = f.priors.empty()
                            ? Measure(RationalVector(m.tree.leaf_count(), Rational(1, static_cast<long>(m.tree.leaf_count()))))
                            : f.priors.front();
  if (xs.empty()) xs = default_grid();
  if (ys.empty()) ys = default_grid();
  const UtilityModel model(m, prior, parse_utility(utility), s.caps());
  const DualityReport r = duality_audit(model, xs, ys);
  Outcome o;
  Json rows = Json::array();
  for (const auto& row : r.x_rows) {
    rows.push_back({{"x", row.x},
                    {"y", row.y},
                    {"u", row.u},
                    {"v", row.v},
                    {"conjugacy", row.conjugacy},
                    {"relation", row.relation},
                    {"budget", row.budget},
                    {"du_formula", row.du_formula},
                    {"dv_formula", row.dv_formula}});
  }
  Json yrows = Json::array();
  for (const auto& row : r.y_rows) yrows.push_back({{"y", row.y}, {"v", row.v}, {"conjugacy", row.conjugacy}});
  o.result = {{"utility", r.utility},
              {"tolerance", r.tolerance},
              {"derivative_tolerance", r.derivative_tolerance},
              {"asymptotic_elasticity", r.asymptotic_elasticity},
              {"worst_conjugacy", r.worst_conjugacy},
              {"worst_relation", r.worst_relation},
              {"worst_budget", r.worst_budget},
              {"worst_derivative", r.worst_derivative},
              {"concavity", r.concavity},
              {"inada_trend", r.inada_trend},
              {"passed", r.passed()},
              {"failures", r.failures},
              {"x_rows", rows},
              {"y_rows", yrows}};
  if (!r.passed()) o.code = kVerificationFailed;
  return o;
}

inline Outcome region(const MarketFile& f, const Settings& s, const std::vector<std::string>& params) {
  const ParameterRegion r = parameter_region(pricing_set_spec(f.market, s.caps()), params);
  Outcome o;
  Json poly = Json::array();
  for (const auto& p : r.polygon) poly.push_back(strings(p));
  o.result = {{"params", r.params}, {"free_parameters", r.free_parameters}, {"polygon", poly}};
  return o;
}

inline Outcome selftest(const Settings& s) {
  Json checks = Json::array();
  bool ok = true;
  const auto check = [&](const std::string& name, bool pass, const std::string& detail = "") {
    Json c = {{"check", name}, {"passed", pass}};
    if (!detail.empty()) c["detail"] = detail;
    checks.push_back(c);
    ok = ok && pass;
  };
  const auto failures = p2_self_test();
  check("P2 fixture closed forms", failures.empty(), failures.empty() ? "" : failures.front());
  HedgeOptions ho;
  ho.caps = s.caps();
  const MarketFile p2 = fixture_p2();
  const TerminalClaim& psi = p2.european_claims.at(0).payoff;
  const HedgeResult ind = super_hedge_indivisible(p2.market, psi, true, ho);
  check("P2 indivisible super-hedge is 1/8", ind.price == ExtendedRational(Rational(1, 8)) && hedge_violations(p2.market, ind).empty());
  const HedgeResult div = super_hedge_divisible(p2.market, psi, ho);
  check("P2 divisible super-hedge is 0", div.price == ExtendedRational(Rational(0)) && hedge_violations(p2.market, div).empty());
  for (const char* name : {"B1", "T2", "P2"}) {
    const MarketSpec m = load_fixture(name).market;
    const ArbitrageVerdict v = check_sna(m, s.caps());
    check(std::string(name) + " strict no-arbitrage", v.verdict == Verdict::kNoArbitrage && verdict_violations(m, v).empty());
    const MarketFile round = parse_market(serialize_market(load_fixture(name)));
    check(std::string(name) + " serialization round-trip", same_market(round, load_fixture(name)));
  }
  const MarketSpec t2 = fixture_t2().market;
  ScalarProcess put(t2.tree.size());
  for (NodeId n = 0; n < t2.tree.size(); ++n) put[n] = rmax(Rational(0), 5 - t2.stock.at(n, 0));
  const Measure uni(RationalVector(4, Rational(1, 4)));
  const Measure emm({Rational(1, 9), Rational(2, 9), Rational(2, 9), Rational(4, 9)});
  check("T2 minimax consistency", minimax_check(t2.tree, {emm, uni}, {put}, s.caps()).consistent());
  const UtilityModel b1(fixture_b1().market, Measure({Rational(1, 2), Rational(1, 2)}), log_utility());
  check("B1 log utility closed form", std::abs(b1.primal(2).value - std::log(2.0)) < 1e-9);
  Outcome o;
  o.result = {{"checks", checks}, {"passed", ok}};
  o.code = ok ? kOk : kVerificationFailed;
  return o;
}

inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : " ") + x;
  return s;
}

}  // namespace detail

/// Parses the arguments (without the program name), runs the command and
/// returns the exit code.
inline int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact semi-static hedging and arbitrage checks on finite tree markets", "semistatic"};
  app.require_subcommand(1);
  Settings s;
  const auto common = [&](CLI::App* c, bool with_market = true) {
    if (with_market) {
      c->add_option("--market", s.markets, "Market file ('-' for standard input); repeat for batch runs");
      c->add_option("--claim", s.claim_path, "File with additional claims");
      c->add_option("--claim-name", s.claim_name, "Claim to price (default: the first)");
      c->add_option("--jobs", s.jobs, "Parallel workers across market files")->check(CLI::Range(1u, 256u));
    }
    auto* exact = c->add_flag("--exact", "Rational output (default)");
    c->add_flag("--approx", s.approx, "Decimal output")->excludes(exact);
    c->add_option("--enum-cap", s.enum_cap, "Largest stopping-time family enumerated explicitly");
    c->add_flag("--oracle-cuts", s.oracle_cuts, "Always use the separation oracle for stopping-time families");
  };

  bool strict = false, indivisible = false, fractional = false;
  std::string kind, robust_kind = "sub-eu", utility = "log", fixture;
  std::vector<double> xs, ys;
  std::vector<std::string> params;

  auto* ca = app.add_subcommand("check-arbitrage", "Decide no-arbitrage and return a certificate");
  common(ca);
  ca->add_flag("--strict", strict, "Decide strict no-arbitrage");
  ca->add_flag("--indivisible", indivisible, "One whole unit per American option, single stopping time");

  auto* pr = app.add_subcommand("price", "Hedging price with primal and dual certificates");
  common(pr);
  pr->add_option("kind", kind, "sub-eu, sub-am, super-div or super-indiv")
      ->required()
      ->check(CLI::IsMember({"sub-eu", "sub-am", "super-div", "super-indiv"}));
  pr->add_flag("--fractional", fractional, "super-indiv: allow fractional American holdings");

  auto* rb = app.add_subcommand("robust", "Quasi-sure versions under several priors");
  rb->require_subcommand(1);
  auto* rc = rb->add_subcommand("check", "Strict no-arbitrage quasi-surely");
  auto* rp = rb->add_subcommand("price", "Robust sub-hedging price");
  rp->add_option("kind", robust_kind, "sub-eu or sub-am")->check(CLI::IsMember({"sub-eu", "sub-am"}));
  auto* rd = rb->add_subcommand("dominate", "Dominating martingale measure per prior");
  auto* rm = rb->add_subcommand("minimax", "Minimax identity over the convex hull of the priors");
  for (auto* c : {rc, rp, rd, rm}) common(c);

  auto* ut = app.add_subcommand("utility", "Utility maximization");
  ut->require_subcommand(1);
  auto* ua = ut->add_subcommand("audit", "Check the conjugate duality relations on grids");
  common(ua);
  ua->add_option("--utility", utility, "log or power:<gamma>");
  ua->add_option("--x-grid", xs, "Comma-separated wealth grid")->delimiter(',');
  ua->add_option("--y-grid", ys, "Comma-separated dual grid")->delimiter(',');

  auto* fx = app.add_subcommand("fixture", "Write a built-in market file");
  fx->add_option("name", fixture, "B1, T2 or P2")->required()->check(CLI::IsMember({"B1", "T2", "P2"}));

  auto* st = app.add_subcommand("selftest", "Run the built-in invariant checks");
  common(st, false);

  auto* rg = app.add_subcommand("region", "Vertices of the pricing set in conditional-probability coordinates");
  common(rg);
  rg->add_option("--params", params, "Leaf ids, one per free parameter")->delimiter(',');

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  if (fx->parsed()) {
    out << serialize_market(load_fixture(fixture));
    return kOk;
  }

  std::string command;
  std::function<Outcome(const MarketFile&)> body;
  if (ca->parsed()) {
    command = std::string("check-arbitrage") + (strict ? " --strict" : "") + (indivisible ? " --indivisible" : "");
    body = [&](const MarketFile& f) { return detail::check_arbitrage(f, s, strict, indivisible); };
  } else if (pr->parsed()) {
    command = "price " + kind;
    body = [&](const MarketFile& f) { return detail::price(f, s, kind, fractional); };
  } else if (rc->parsed()) {
    command = "robust check";
    body = [&](const MarketFile& f) { return detail::robust_check(f, s); };
  } else if (rp->parsed()) {
    command = "robust price " + robust_kind;
    body = [&](const MarketFile& f) { return detail::robust_price(f, s, robust_kind); };
  } else if (rd->parsed()) {
    command = "robust dominate";
    body = [&](const MarketFile& f) { return detail::robust_dominate(f, s); };
  } else if (rm->parsed()) {
    command = "robust minimax";
    body = [&](const MarketFile& f) { return detail::robust_minimax(f, s); };
  } else if (ua->parsed()) {
    command = "utility audit --utility " + utility;
    body = [&](const MarketFile& f) { return detail::utility_audit(f, s, utility, xs, ys); };
  } else if (rg->parsed()) {
    command = "region";
    body = [&](const MarketFile& f) { return detail::region(f, s, params); };
  } else if (st->parsed()) {
    command = "selftest";
  }

  // One input per report; the market-free selftest has a single empty input.
  if (s.markets.empty()) s.markets.push_back("-");
  if (st->parsed()) s.markets = {""};
  if (std::count(s.markets.begin(), s.markets.end(), "-") > 1) {
    err << "semistatic: standard input can be read only once\n";
    return kUsage;
  }

  std::vector<Json> reports(s.markets.size());
  std::vector<int> codes(s.markets.size(), kOk);
  std::vector<std::string> messages(s.markets.size());
  const auto work = [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    Json rep = {{"schema", kReportSchema}, {"schema_version", kReportSchemaVersion}, {"command", command}};
    if (!s.markets[i].empty()) rep["input"] = s.markets[i];
    try {
      Outcome o;
      if (st->parsed()) {
        o = detail::selftest(s);
      } else {
        MarketFile f = detail::load(s.markets[i], in);
        detail::add_claims(f, s);
        const auto loaded = std::chrono::steady_clock::now();
        o = body(f);
        rep["timings_ms"]["load"] = std::chrono::duration<double, std::milli>(loaded - start).count();
      }
      if (s.approx) detail::approximate(o.result);
      rep["result"] = std::move(o.result);
      codes[i] = o.code;
    } catch (const VerificationError& e) {
      rep["error"] = {{"kind", "verification"}, {"violations", e.violations}};
      messages[i] = "verification failed: " + (e.violations.empty() ? std::string() : e.violations.front());
      codes[i] = kVerificationFailed;
    } catch (const UtilityError& e) {
      rep["error"] = {{"kind", "verification"}, {"message", e.what()}};
      messages[i] = e.what();
      codes[i] = kVerificationFailed;
    } catch (const SnaRequired& e) {
      rep["error"] = {{"kind", "strict-no-arbitrage-fails"}, {"slack", to_string(e.slack.optimum)}};
      messages[i] = e.what();
      codes[i] = kArbitrageFound;
    } catch (const std::exception& e) {
      rep["error"] = {{"kind", "input"}, {"message", e.what()}};
      messages[i] = e.what();
      codes[i] = kUsage;
    }
    rep["timings_ms"]["total"] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    reports[i] = std::move(rep);
  };

  const unsigned workers = std::min<unsigned>(std::max(1u, s.jobs), static_cast<unsigned>(s.markets.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < s.markets.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < s.markets.size(); i = next++) work(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < messages.size(); ++i) {
    if (!messages[i].empty()) err << "semistatic: " << (s.markets[i].empty() ? command : s.markets[i]) << ": " << messages[i] << "\n";
  }
  out << (reports.size() == 1 ? reports.front() : Json(reports)).dump(2) << "\n";
  return *std::max_element(codes.begin(), codes.end());
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cin, std::cout, std::cerr);
}

}  // namespace semistatic::cli
