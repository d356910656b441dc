#pragma once

// Profile files and report rendering for the LSRI engine.
//
// Profile JSON:
//   {"factors": [{"id": "latency", "weight": 0.25,
//                 "mapping": {"kind": "sigmoid", "tau": 100, "sigma": 15},
//                 "observed": 85}, ...],
//    "violations": [{"category": "prompt_injection", "magnitude": 0.24,
//                    "sensitivity": 1}]}
// `weight` may be omitted on every factor (equal weights) or on none.

#include <nlohmann/json.hpp>

#include <ostream>
#include <set>
#include <string>

#include "modeltrust/errors.hpp"
#include "modeltrust/lsri.hpp"
#include "modeltrust/text_table.hpp"

namespace modeltrust::lsri {

namespace detail {

inline void check_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                       const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + " must be an object", 0, where);
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items())
    if (!ok.contains(key)) throw ParseError("unknown key '" + key + "' in " + where, 0, key);
}

inline double number_field(const nlohmann::json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(where + ": missing '" + key + "'", 0, key);
  if (!it->is_number()) throw ParseError(where + ": '" + key + "' must be a number", 0, key);
  return it->get<double>();
}

inline MappingSpec parse_mapping(const nlohmann::json& m, const std::string& where) {
  if (!m.is_object() || !m.contains("kind") || !m["kind"].is_string())
    throw ParseError(where + ": mapping needs a string 'kind'", 0, "kind");
  const std::string kind = m["kind"];
  if (kind == "sigmoid") {
    check_keys(m, {"kind", "tau", "sigma"}, where);
    return Sigmoid{number_field(m, "tau", where), number_field(m, "sigma", where)};
  }
  if (kind == "exponential") {
    check_keys(m, {"kind", "lambda"}, where);
    return Exponential{number_field(m, "lambda", where)};
  }
  if (kind == "step") {
    check_keys(m, {"kind", "threshold"}, where);
    return Step{number_field(m, "threshold", where)};
  }
  if (kind == "linear_cost") {
    check_keys(m, {"kind", "ceiling"}, where);
    return LinearCost{number_field(m, "ceiling", where)};
  }
  if (kind == "linear_freq") {
    check_keys(m, {"kind", "target"}, where);
    return LinearFreq{number_field(m, "target", where)};
  }
  if (kind == "linear_reg") {
    check_keys(m, {"kind"}, where);
    return LinearReg{};
  }
  throw ParseError(where + ": unknown mapping kind '" + kind + "'", 0, "kind");
}

}  // namespace detail

inline nlohmann::json mapping_to_json(const MappingSpec& spec) {
  struct Visitor {
    nlohmann::json operator()(const Sigmoid& s) const {
      return {{"kind", "sigmoid"}, {"tau", s.tau}, {"sigma", s.sigma}};
    }
    nlohmann::json operator()(const Exponential& e) const { return {{"kind", "exponential"}, {"lambda", e.lambda}}; }
    nlohmann::json operator()(const Step& s) const { return {{"kind", "step"}, {"threshold", s.threshold}}; }
    nlohmann::json operator()(const LinearCost& c) const { return {{"kind", "linear_cost"}, {"ceiling", c.ceiling}}; }
    nlohmann::json operator()(const LinearFreq& f) const { return {{"kind", "linear_freq"}, {"target", f.target}}; }
    nlohmann::json operator()(const LinearReg&) const { return {{"kind", "linear_reg"}}; }
  };
  return std::visit(Visitor{}, spec);
}

inline LsriProfile profile_from_json(const nlohmann::json& doc) {
  detail::check_keys(doc, {"factors", "violations"}, "profile");
  if (!doc.contains("factors") || !doc["factors"].is_array())
    throw ParseError("profile: 'factors' must be an array", 0, "factors");

  LsriProfile p;
  std::size_t weighted = 0;
  for (std::size_t i = 0; i < doc["factors"].size(); ++i) {
    const auto& f = doc["factors"][i];
    const std::string where = "factors[" + std::to_string(i) + "]";
    detail::check_keys(f, {"id", "weight", "mapping", "observed"}, where);
    if (!f.contains("id") || !f["id"].is_string()) throw ParseError(where + ": missing string 'id'", 0, "id");
    if (!f.contains("mapping")) throw ParseError(where + ": missing 'mapping'", 0, "mapping");
    RiskFactor factor;
    factor.id = f["id"];
    factor.spec = detail::parse_mapping(f["mapping"], where + ".mapping");
    factor.observed = detail::number_field(f, "observed", where);
    if (f.contains("weight")) {
      factor.weight = detail::number_field(f, "weight", where);
      ++weighted;
    }
    p.factors.push_back(std::move(factor));
  }
  if (weighted == 0) {
    set_equal_weights(p);
  } else if (weighted != p.factors.size()) {
    throw ProfileError("either every factor carries a weight or none does");
  }

  if (doc.contains("violations")) {
    if (!doc["violations"].is_array()) throw ParseError("profile: 'violations' must be an array", 0, "violations");
    for (std::size_t i = 0; i < doc["violations"].size(); ++i) {
      const auto& v = doc["violations"][i];
      const std::string where = "violations[" + std::to_string(i) + "]";
      detail::check_keys(v, {"category", "magnitude", "sensitivity"}, where);
      if (!v.contains("category") || !v["category"].is_string())
        throw ParseError(where + ": missing string 'category'", 0, "category");
      p.violations.push_back(
          {v["category"], detail::number_field(v, "magnitude", where), detail::number_field(v, "sensitivity", where)});
    }
  }
  validate(p);
  return p;
}

inline LsriProfile parse_profile(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    int line = 1;
    for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i)
      if (text[i] == '\n') ++line;
    throw ParseError(std::string("profile is not valid JSON: ") + e.what(), line);
  }
  return profile_from_json(doc);
}

inline nlohmann::json profile_to_json(const LsriProfile& p) {
  nlohmann::json doc;
  doc["factors"] = nlohmann::json::array();
  for (const auto& f : p.factors)
    doc["factors"].push_back({{"id", f.id}, {"weight", f.weight}, {"mapping", mapping_to_json(f.spec)}, {"observed", f.observed}});
  doc["violations"] = nlohmann::json::array();
  for (const auto& v : p.violations)
    doc["violations"].push_back({{"category", v.category}, {"magnitude", v.magnitude}, {"sensitivity", v.sensitivity}});
  return doc;
}

inline nlohmann::json report_to_json(const LsriReport& r) {
  nlohmann::json per_factor = nlohmann::json::object();
  for (const auto& [id, f] : r.per_factor_risk) per_factor[id] = f;
  return {{"per_factor_risk", per_factor}, {"phi", r.phi}, {"raw_score", r.raw_score}, {"score", r.score}};
}

inline nlohmann::json sweep_to_json(const std::string& factor_id, const std::vector<SweepPoint>& points) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& p : points) rows.push_back({{"observed", p.observed}, {"risk", p.risk}, {"score", p.score}});
  return {{"factor", factor_id}, {"points", rows}};
}

inline nlohmann::json comparison_to_json(const ProfileComparison& c) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& f : c.factors) {
    nlohmann::json row = {{"id", f.id}};
    row["risk_a"] = f.risk_a ? nlohmann::json(*f.risk_a) : nlohmann::json(nullptr);
    row["risk_b"] = f.risk_b ? nlohmann::json(*f.risk_b) : nlohmann::json(nullptr);
    rows.push_back(row);
  }
  return {{"factors", rows}, {"a", report_to_json(c.a)}, {"b", report_to_json(c.b)}, {"delta", c.delta}};
}

inline std::string describe_observed(const MappingSpec& spec, double x) {
  char buf[64];
  if (std::holds_alternative<LinearReg>(spec)) {
    std::snprintf(buf, sizeof buf, "%g%% compliance", x * 100.0);
  } else {
    std::snprintf(buf, sizeof buf, "%g", x);
  }
  return buf;
}

inline void print_report(std::ostream& os, const LsriProfile& p, const LsriReport& r) {
  TextTable t({"Factor", "Mapping", "Observed", "Weight", "Risk (f)"});
  for (const auto& f : p.factors)
    t.add_row({f.id, kind_name(f.spec), describe_observed(f.spec, f.observed), fixed(f.weight, 3),
               fixed(r.per_factor_risk.at(f.id))});
  t.print(os);
  os << "Integrity multiplier (phi): " << fixed(r.phi) << '\n';
  os << "LSRI: " << fixed(r.score) << " (raw " << fixed(r.raw_score, 4) << ")\n";
}

inline void print_sweep(std::ostream& os, const std::string& factor_id, const std::vector<SweepPoint>& points) {
  TextTable t({"Observed " + factor_id, "Risk (f)", "Resulting LSRI"});
  for (const auto& p : points) t.add_row({describe_observed(Sigmoid{}, p.observed), fixed(p.risk), fixed(p.score)});
  t.print(os);
}

inline void print_comparison(std::ostream& os, const LsriProfile& a, const LsriProfile& b, const ProfileComparison& c) {
  auto observed = [](const LsriProfile& p, const std::string& id) -> std::string {
    for (const auto& f : p.factors)
      if (f.id == id) return describe_observed(f.spec, f.observed);
    return "-";
  };
  TextTable t({"Feature", "Profile A", "Profile B"});
  t.add_row({"Integrity multiplier (phi)", fixed(c.a.phi), fixed(c.b.phi)});
  for (const auto& row : c.factors) {
    auto cell = [&](const LsriProfile& p, const std::optional<double>& risk) {
      return risk ? observed(p, row.id) + " (f = " + fixed(*risk) + ")" : std::string("-");
    };
    t.add_row({row.id, cell(a, row.risk_a), cell(b, row.risk_b)});
  }
  t.add_row({"Final LSRI score", fixed(c.a.score), fixed(c.b.score)});
  t.print(os);
  os << "Delta (A - B): " << (c.delta >= 0 ? "+" : "") << fixed(c.delta) << '\n';
}

}  // namespace modeltrust::lsri
