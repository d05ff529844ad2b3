#pragma once

// JSON market files. All numbers are exact rational strings ("p/q" or
// integers); serialization is canonical, so parse -> serialize -> parse is the
// identity and serialize(parse(serialize(x))) is byte-identical.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "semistatic/tree_market.hpp"

namespace semistatic {

using Json = nlohmann::ordered_json;

inline constexpr const char* kMarketFormat = "semistatic-market";
inline constexpr int kMarketFormatVersion = 1;

struct NamedEuropeanClaim {
  std::string name;
  TerminalClaim payoff;
};

struct NamedAmericanClaim {
  std::string name;
  ScalarProcess payoff;
};

/// A market plus the optional prior list and claims to be priced.
struct MarketFile {
  MarketSpec market;
  std::vector<Measure> priors;
  std::vector<NamedEuropeanClaim> european_claims;
  std::vector<NamedAmericanClaim> american_claims;
};

namespace detail {

inline Rational json_rational(const Json& j, const std::string& where) {
  if (j.is_string()) {
    try {
      return parse_rational(j.get<std::string>());
    } catch (const ParseError& e) {
      throw MarketError(where + ": " + e.what());
    }
  }
  if (j.is_number_integer()) return Rational(j.get<long>());
  throw MarketError(where + ": expected a rational string or an integer");
}

inline const Json& require(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw MarketError(where + ": missing field '" + key + "'");
  return j.at(key);
}

inline std::string json_string(const Json& j, const std::string& where) {
  if (!j.is_string()) throw MarketError(where + ": expected a string");
  return j.get<std::string>();
}

/// Leaf-keyed payoff map to a leaf-indexed vector; every leaf must appear.
inline RationalVector leaf_payoff(const Json& j, const EventTree& tree, const std::string& where) {
  if (!j.is_object()) throw MarketError(where + ": payoff must be an object keyed by leaf id");
  RationalVector v(tree.leaf_count());
  std::vector<bool> seen(tree.leaf_count(), false);
  for (const auto& [key, value] : j.items()) {
    const auto node = tree.find(key);
    if (!node) throw MarketError(where + ": unknown node '" + key + "'");
    if (!tree.is_leaf(*node)) throw MarketError(where + ": node '" + key + "' is not a leaf");
    const std::size_t i = tree.leaf_index(*node);
    v[i] = json_rational(value, where + " at leaf '" + key + "'");
    seen[i] = true;
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw MarketError(where + ": missing value at leaf '" + tree.id(tree.leaves()[i]) + "'");
  }
  return v;
}

inline RationalVector node_payoff(const Json& j, const EventTree& tree, const std::string& where) {
  if (!j.is_object()) throw MarketError(where + ": payoff must be an object keyed by node id");
  RationalVector v(tree.size());
  std::vector<bool> seen(tree.size(), false);
  for (const auto& [key, value] : j.items()) {
    const auto node = tree.find(key);
    if (!node) throw MarketError(where + ": unknown node '" + key + "'");
    v[*node] = json_rational(value, where + " at node '" + key + "'");
    seen[*node] = true;
  }
  for (NodeId n = 0; n < seen.size(); ++n) {
    if (!seen[n]) throw MarketError(where + ": missing value at node '" + tree.id(n) + "'");
  }
  return v;
}

inline Json leaf_payoff_json(const EventTree& tree, const RationalVector& v) {
  Json j = Json::object();
  for (std::size_t i = 0; i < tree.leaf_count(); ++i) j[tree.id(tree.leaves()[i])] = to_string(v[i]);
  return j;
}

inline Json node_payoff_json(const EventTree& tree, const RationalVector& v) {
  Json j = Json::object();
  for (NodeId n : tree.preorder()) j[tree.id(n)] = to_string(v[n]);
  return j;
}

}  // namespace detail

/// Parses and validates a market document. Errors name the offending node,
/// leaf or option.
inline MarketFile parse_market(const Json& doc) {
  if (!doc.is_object()) throw MarketError("market document must be a JSON object");
  if (doc.contains("format") && doc.at("format") != kMarketFormat) {
    throw MarketError("unsupported format tag " + doc.at("format").dump());
  }
  const Json& nodes = detail::require(doc, "nodes", "market");
  if (!nodes.is_array()) throw MarketError("'nodes' must be an array");
  std::vector<EventTree::NodeSpec> specs;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Json& n = nodes[i];
    const std::string where = "nodes[" + std::to_string(i) + "]";
    EventTree::NodeSpec s;
    s.id = detail::json_string(detail::require(n, "id", where), where + ".id");
    const std::string nwhere = "node '" + s.id + "'";
    if (n.contains("parent") && !n.at("parent").is_null()) {
      s.parent = detail::json_string(n.at("parent"), nwhere + ".parent");
    }
    const Json& t = detail::require(n, "time", nwhere);
    if (!t.is_number_integer()) throw MarketError(nwhere + ": time must be an integer");
    s.time = t.get<int>();
    specs.push_back(std::move(s));
  }
  MarketFile file;
  MarketSpec& m = file.market;
  m.tree = EventTree::build(specs);
  if (doc.contains("horizon")) {
    const Json& h = doc.at("horizon");
    if (!h.is_number_integer() || h.get<int>() != m.tree.horizon()) {
      throw MarketError("declared horizon " + h.dump() + " differs from the tree's horizon " +
                        std::to_string(m.tree.horizon()));
    }
  }
  std::optional<std::size_t> dim;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string nwhere = "node '" + specs[i].id + "'";
    if (!nodes[i].contains("S")) throw MarketError(nwhere + " has no S value");
    const Json& s = nodes[i].at("S");
    if (!s.is_array() || s.empty()) throw MarketError(nwhere + ": S must be a non-empty array");
    if (!dim) {
      dim = s.size();
      m.stock = VectorProcess(m.tree.size(), *dim);
    } else if (s.size() != *dim) {
      throw MarketError(nwhere + ": S has dimension " + std::to_string(s.size()) + ", expected " +
                        std::to_string(*dim));
    }
    const NodeId id = *m.tree.find(specs[i].id);
    for (std::size_t l = 0; l < s.size(); ++l) {
      m.stock.at(id, l) = detail::json_rational(s[l], nwhere + ".S[" + std::to_string(l) + "]");
    }
  }
  const auto european = [&](const char* key, std::vector<EuropeanOption>& out) {
    if (!doc.contains(key)) return;
    const Json& arr = doc.at(key);
    if (!arr.is_array()) throw MarketError(std::string("'") + key + "' must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      std::string where = std::string(key) + "[" + std::to_string(i) + "]";
      EuropeanOption o;
      o.name = detail::json_string(detail::require(arr[i], "name", where), where + ".name");
      where = "option '" + o.name + "'";
      o.payoff = TerminalClaim(detail::leaf_payoff(detail::require(arr[i], "payoff", where), m.tree, where));
      o.price = detail::json_rational(detail::require(arr[i], "price", where), where + ".price");
      out.push_back(std::move(o));
    }
  };
  european("european_two_sided", m.two_sided);
  european("european_buy_only", m.buy_only);
  if (doc.contains("american_buy_only")) {
    const Json& arr = doc.at("american_buy_only");
    if (!arr.is_array()) throw MarketError("'american_buy_only' must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      std::string where = "american_buy_only[" + std::to_string(i) + "]";
      AmericanOption o;
      o.name = detail::json_string(detail::require(arr[i], "name", where), where + ".name");
      where = "option '" + o.name + "'";
      o.payoff = ScalarProcess(detail::node_payoff(detail::require(arr[i], "payoff", where), m.tree, where));
      o.price = detail::json_rational(detail::require(arr[i], "price", where), where + ".price");
      m.american.push_back(std::move(o));
    }
  }
  m.reference_support = all_leaves(m.tree);
  if (doc.contains("null_leaves")) {
    for (const auto& id : doc.at("null_leaves")) {
      const std::string name = detail::json_string(id, "null_leaves");
      const auto node = m.tree.find(name);
      if (!node || !m.tree.is_leaf(*node)) throw MarketError("null_leaves: '" + name + "' is not a leaf");
      m.reference_support[m.tree.leaf_index(*node)] = false;
    }
  }
  m.validate();
  if (doc.contains("priors")) {
    const Json& arr = doc.at("priors");
    if (!arr.is_array()) throw MarketError("'priors' must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = "priors[" + std::to_string(i) + "]";
      if (!arr[i].is_object()) throw MarketError(where + ": must be an object keyed by leaf id");
      RationalVector w(m.tree.leaf_count(), Rational(0));
      for (const auto& [key, value] : arr[i].items()) {
        const auto node = m.tree.find(key);
        if (!node || !m.tree.is_leaf(*node)) throw MarketError(where + ": '" + key + "' is not a leaf");
        w[m.tree.leaf_index(*node)] = detail::json_rational(value, where + " at leaf '" + key + "'");
      }
      Measure p(w);
      if (!p.is_probability()) throw MarketError(where + ": weights must be nonnegative and sum to 1");
      file.priors.push_back(std::move(p));
    }
  }
  if (doc.contains("claims")) {
    const Json& c = doc.at("claims");
    if (c.contains("european")) {
      for (const auto& e : c.at("european")) {
        const std::string name = detail::json_string(detail::require(e, "name", "claims.european"), "claim name");
        file.european_claims.push_back(
            {name, TerminalClaim(detail::leaf_payoff(detail::require(e, "payoff", name), m.tree, "claim '" + name + "'"))});
      }
    }
    if (c.contains("american")) {
      for (const auto& e : c.at("american")) {
        const std::string name = detail::json_string(detail::require(e, "name", "claims.american"), "claim name");
        file.american_claims.push_back(
            {name, ScalarProcess(detail::node_payoff(detail::require(e, "payoff", name), m.tree, "claim '" + name + "'"))});
      }
    }
  }
  return file;
}

inline MarketFile parse_market(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw MarketError(std::string("malformed JSON: ") + e.what());
  }
  return parse_market(doc);
}

/// Builds the market only.
inline MarketSpec build_market(const std::string& text) { return parse_market(text).market; }

inline Json market_to_json(const MarketFile& file) {
  const MarketSpec& m = file.market;
  const EventTree& t = m.tree;
  Json doc = Json::object();
  doc["format"] = kMarketFormat;
  doc["version"] = kMarketFormatVersion;
  doc["horizon"] = t.horizon();
  Json nodes = Json::array();
  for (NodeId n : t.preorder()) {
    Json j = Json::object();
    j["id"] = t.id(n);
    j["parent"] = t.parent(n) ? Json(t.id(*t.parent(n))) : Json(nullptr);
    j["time"] = t.time(n);
    Json s = Json::array();
    for (std::size_t l = 0; l < m.dim(); ++l) s.push_back(to_string(m.stock.at(n, l)));
    j["S"] = std::move(s);
    nodes.push_back(std::move(j));
  }
  doc["nodes"] = std::move(nodes);
  const auto european = [&](const std::vector<EuropeanOption>& opts) {
    Json arr = Json::array();
    for (const auto& o : opts) {
      Json j = Json::object();
      j["name"] = o.name;
      j["payoff"] = detail::leaf_payoff_json(t, o.payoff.values);
      j["price"] = to_string(o.price);
      arr.push_back(std::move(j));
    }
    return arr;
  };
  doc["european_two_sided"] = european(m.two_sided);
  doc["european_buy_only"] = european(m.buy_only);
  Json am = Json::array();
  for (const auto& o : m.american) {
    Json j = Json::object();
    j["name"] = o.name;
    j["payoff"] = detail::node_payoff_json(t, o.payoff.values);
    j["price"] = to_string(o.price);
    am.push_back(std::move(j));
  }
  doc["american_buy_only"] = std::move(am);
  Json nulls = Json::array();
  for (std::size_t i = 0; i < t.leaf_count(); ++i) {
    if (!m.reference_support[i]) nulls.push_back(t.id(t.leaves()[i]));
  }
  if (!nulls.empty()) doc["null_leaves"] = std::move(nulls);
  if (!file.priors.empty()) {
    Json priors = Json::array();
    for (const auto& p : file.priors) {
      Json j = Json::object();
      for (std::size_t i = 0; i < t.leaf_count(); ++i) {
        if (sgn(p[i]) != 0) j[t.id(t.leaves()[i])] = to_string(p[i]);
      }
      priors.push_back(std::move(j));
    }
    doc["priors"] = std::move(priors);
  }
  if (!file.european_claims.empty() || !file.american_claims.empty()) {
    Json claims = Json::object();
    Json eu = Json::array();
    for (const auto& c : file.european_claims) {
      eu.push_back(Json{{"name", c.name}, {"payoff", detail::leaf_payoff_json(t, c.payoff.values)}});
    }
    Json am2 = Json::array();
    for (const auto& c : file.american_claims) {
      am2.push_back(Json{{"name", c.name}, {"payoff", detail::node_payoff_json(t, c.payoff.values)}});
    }
    claims["european"] = std::move(eu);
    claims["american"] = std::move(am2);
    doc["claims"] = std::move(claims);
  }
  return doc;
}

inline std::string serialize_market(const MarketFile& file) { return market_to_json(file).dump(2) + "\n"; }

inline std::string read_text(const std::string& path) {
  if (path == "-") return std::string(std::istreambuf_iterator<char>(std::cin), {});
  std::ifstream in(path);
  if (!in) throw MarketError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline MarketFile load_market_file(const std::string& path) { return parse_market(read_text(path)); }

/// Field-wise equality of two market files, independent of serialization.
inline bool same_market(const MarketFile& a, const MarketFile& b) {
  const MarketSpec& x = a.market;
  const MarketSpec& y = b.market;
  const EventTree& s = x.tree;
  const EventTree& t = y.tree;
  if (s.size() != t.size() || s.horizon() != t.horizon() || x.dim() != y.dim()) return false;
  for (NodeId n = 0; n < s.size(); ++n) {
    const auto m = t.find(s.id(n));
    if (!m || s.time(n) != t.time(*m)) return false;
    const auto ps = s.parent(n);
    const auto pt = t.parent(*m);
    if (ps.has_value() != pt.has_value() || (ps && s.id(*ps) != t.id(*pt))) return false;
    for (std::size_t l = 0; l < x.dim(); ++l) {
      if (x.stock.at(n, l) != y.stock.at(*m, l)) return false;
    }
  }
  const auto leaf_map = [&](const RationalVector& v) {
    std::map<std::string, Rational> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.emplace(s.id(s.leaves()[i]), v[i]);
    return out;
  };
  const auto leaf_map_t = [&](const RationalVector& v) {
    std::map<std::string, Rational> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.emplace(t.id(t.leaves()[i]), v[i]);
    return out;
  };
  const auto node_map = [](const EventTree& tree, const RationalVector& v) {
    std::map<std::string, Rational> out;
    for (NodeId n = 0; n < v.size(); ++n) out.emplace(tree.id(n), v[n]);
    return out;
  };
  const auto same_eu = [&](const std::vector<EuropeanOption>& p, const std::vector<EuropeanOption>& q) {
    if (p.size() != q.size()) return false;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i].name != q[i].name || p[i].price != q[i].price ||
          leaf_map(p[i].payoff.values) != leaf_map_t(q[i].payoff.values)) {
        return false;
      }
    }
    return true;
  };
  if (!same_eu(x.two_sided, y.two_sided) || !same_eu(x.buy_only, y.buy_only)) return false;
  if (x.american.size() != y.american.size()) return false;
  for (std::size_t k = 0; k < x.american.size(); ++k) {
    if (x.american[k].name != y.american[k].name || x.american[k].price != y.american[k].price ||
        node_map(s, x.american[k].payoff.values) != node_map(t, y.american[k].payoff.values)) {
      return false;
    }
  }
  std::vector<std::string> nx, ny;
  for (std::size_t i = 0; i < s.leaf_count(); ++i) {
    if (!x.reference_support[i]) nx.push_back(s.id(s.leaves()[i]));
  }
  for (std::size_t i = 0; i < t.leaf_count(); ++i) {
    if (!y.reference_support[i]) ny.push_back(t.id(t.leaves()[i]));
  }
  std::sort(nx.begin(), nx.end());
  std::sort(ny.begin(), ny.end());
  if (nx != ny || a.priors.size() != b.priors.size()) return false;
  for (std::size_t i = 0; i < a.priors.size(); ++i) {
    if (leaf_map(a.priors[i].weights) != leaf_map_t(b.priors[i].weights)) return false;
  }
  if (a.european_claims.size() != b.european_claims.size() || a.american_claims.size() != b.american_claims.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.european_claims.size(); ++i) {
    if (a.european_claims[i].name != b.european_claims[i].name ||
        leaf_map(a.european_claims[i].payoff.values) != leaf_map_t(b.european_claims[i].payoff.values)) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.american_claims.size(); ++i) {
    if (a.american_claims[i].name != b.american_claims[i].name ||
        node_map(s, a.american_claims[i].payoff.values) != node_map(t, b.american_claims[i].payoff.values)) {
      return false;
    }
  }
  return true;
}

}  // namespace semistatic
