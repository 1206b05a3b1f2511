#pragma once

#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "formula.hpp"
#include "map_spec.hpp"
#include "polynomial.hpp"

namespace regvar {

/// A parsed map file: always a graph, plus the components when the file
/// gave a polynomial map.
struct LoadedMap {
  MapSpec spec;
  std::optional<PolyMap> poly;
};

namespace detail {

using json = nlohmann::json;

[[noreturn]] inline void schema_error(const std::string& where, const std::string& what) {
  throw InputError("map spec " + (where.empty() ? std::string("/") : where) + ": " + what);
}

inline const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) schema_error(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) schema_error(where, std::string("missing \"") + key + "\"");
  return *it;
}

inline std::size_t positive_int(const json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() <= 0) schema_error(where, "expected a positive integer");
  return static_cast<std::size_t>(j.get<long long>());
}

inline Polynomial parse_poly(const json& j, const std::string& where) {
  const std::size_t vars = positive_int(field(j, "vars", where), where + "/vars");
  const json& terms = field(j, "terms", where);
  if (!terms.is_array()) schema_error(where + "/terms", "expected an array");
  std::vector<Monomial> out;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const std::string at = where + "/terms/" + std::to_string(i);
    const json& c = field(terms[i], "c", at);
    const json& e = field(terms[i], "e", at);
    if (!c.is_number()) schema_error(at + "/c", "expected a number");
    if (!e.is_array() || e.size() != vars) schema_error(at + "/e", "expected " + std::to_string(vars) + " exponents");
    Monomial m{c.get<double>(), {}};
    for (const auto& x : e) {
      if (!x.is_number_integer() || x.get<long long>() < 0) schema_error(at + "/e", "exponents must be non-negative integers");
      m.exponents.push_back(static_cast<unsigned>(x.get<long long>()));
    }
    out.push_back(std::move(m));
  }
  return Polynomial(vars, std::move(out));
}

inline Formula parse_node(const json& j, const std::string& where) {
  if (!j.is_object()) schema_error(where, "expected an object");
  if (j.contains("op")) {
    const json& op = j["op"];
    if (!op.is_string()) schema_error(where + "/op", "expected a string");
    const json& args = field(j, "args", where);
    if (!args.is_array() || args.empty()) schema_error(where + "/args", "expected a non-empty array");
    std::vector<Formula> kids;
    for (std::size_t i = 0; i < args.size(); ++i) kids.push_back(parse_node(args[i], where + "/args/" + std::to_string(i)));
    const std::string name = op.get<std::string>();
    if (name == "and") return Formula::all_of(std::move(kids));
    if (name == "or") return Formula::any_of(std::move(kids));
    if (name == "not") {
      if (kids.size() != 1) schema_error(where + "/args", "\"not\" takes exactly one argument");
      return Formula::negate(std::move(kids.front()));
    }
    schema_error(where + "/op", "unknown operator \"" + name + "\"");
  }
  Polynomial p = parse_poly(field(j, "poly", where), where + "/poly");
  const json& rel = field(j, "rel", where);
  if (!rel.is_string()) schema_error(where + "/rel", "expected a string");
  const std::string r = rel.get<std::string>();
  if (r == "lt") return Formula::atom(std::move(p), Relation::LT);
  if (r == "le") return Formula::atom(std::move(p), Relation::LE);
  if (r == "eq") return Formula::atom(std::move(p), Relation::EQ);
  schema_error(where + "/rel", "unknown relation \"" + r + "\"");
}

inline Box parse_box(const json& j, const std::string& where) {
  if (!j.is_array()) schema_error(where, "expected an array of [lo, hi] pairs");
  Box b;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& s = j[i];
    if (!s.is_array() || s.size() != 2 || !s[0].is_number() || !s[1].is_number())
      schema_error(where + "/" + std::to_string(i), "expected [lo, hi]");
    b.sides.push_back({s[0].get<double>(), s[1].get<double>()});
  }
  return b;
}

/// 1-based line and column of a byte offset.
inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline json poly_json(const Polynomial& p) {
  json terms = json::array();
  for (const auto& t : p.terms()) terms.push_back({{"c", t.coeff}, {"e", t.exponents}});
  return {{"vars", p.num_vars()}, {"terms", terms}};
}

inline json node_json(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::Atom: {
      const char* rel = f.atom_value().relation == Relation::LT ? "lt"
                        : f.atom_value().relation == Relation::LE ? "le"
                                                                  : "eq";
      return {{"poly", poly_json(f.atom_value().poly)}, {"rel", rel}};
    }
    default: {
      json args = json::array();
      for (const auto& c : f.children()) args.push_back(node_json(c));
      const char* op = f.kind() == Formula::Kind::And ? "and" : f.kind() == Formula::Kind::Or ? "or" : "not";
      return {{"op", op}, {"args", args}};
    }
  }
}

inline json box_json(const Box& b) {
  json out = json::array();
  for (const auto& s : b.sides) out.push_back({s.lo, s.hi});
  return out;
}

}  // namespace detail

/// Parses a map file. Syntax errors carry line and column; schema errors
/// carry the JSON path of the offending node.
inline LoadedMap parse_map_spec(const std::string& text) {
  detail::json j;
  try {
    j = detail::json::parse(text);
  } catch (const detail::json::parse_error& e) {
    const auto [line, col] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw InputError("map spec parse error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                     ": " + e.what());
  }
  if (!j.is_object()) detail::schema_error("", "expected an object");
  const std::string name = j.contains("name") && j["name"].is_string() ? j["name"].get<std::string>() : "unnamed";
  const Box box = detail::parse_box(detail::field(j, "box", ""), "/box");
  if (j.contains("components")) {
    const auto& comps = j["components"];
    if (!comps.is_array() || comps.empty()) detail::schema_error("/components", "expected a non-empty array");
    std::vector<Polynomial> polys;
    for (std::size_t i = 0; i < comps.size(); ++i)
      polys.push_back(detail::parse_poly(comps[i], "/components/" + std::to_string(i)));
    PolyMap f(std::move(polys));
    if (j.contains("n") && detail::positive_int(j["n"], "/n") != f.n) detail::schema_error("/n", "disagrees with components");
    if (j.contains("m") && detail::positive_int(j["m"], "/m") != f.m) detail::schema_error("/m", "disagrees with components");
    MapSpec spec = graph_spec(f, box, name);
    return {std::move(spec), std::move(f)};
  }
  const std::size_t n = detail::positive_int(detail::field(j, "n", ""), "/n");
  const std::size_t m = detail::positive_int(detail::field(j, "m", ""), "/m");
  Formula graph = detail::parse_node(detail::field(j, "graph", ""), "/graph");
  return {MapSpec(name, n, m, std::move(graph), box), std::nullopt};
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline LoadedMap load_map_spec(const std::string& path) { return parse_map_spec(read_text_file(path)); }

/// Graph form of a spec, or the components form when `poly` is given.
inline std::string serialize_map_spec(const MapSpec& spec, const PolyMap* poly = nullptr) {
  detail::json j;
  j["name"] = spec.name;
  j["n"] = spec.n;
  j["m"] = spec.m;
  j["box"] = detail::box_json(spec.box);
  if (poly != nullptr) {
    detail::json comps = detail::json::array();
    for (const auto& c : poly->components) comps.push_back(detail::poly_json(c));
    j["components"] = comps;
  } else {
    j["graph"] = detail::node_json(spec.graph);
  }
  return j.dump(2) + "\n";
}

/// Polynomial in one or more variables, in the same {"vars", "terms"} form.
inline Polynomial parse_polynomial(const std::string& text) {
  detail::json j;
  try {
    j = detail::json::parse(text);
  } catch (const detail::json::parse_error& e) {
    const auto [line, col] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw InputError("polynomial parse error at line " + std::to_string(line) + ", column " + std::to_string(col));
  }
  return detail::parse_poly(j, "");
}

}  // namespace regvar
