#pragma once

// Deployment policy. File format (JSON object, unknown keys are errors):
//
//   trusted_keys                       [pubkey hex, ...]   required, non-empty
//   trusted_log_key                    pubkey hex          required when
//                                                          require_log_inclusion
//   allowed_dataset_ids                [text, ...]         required ([] denies all)
//   allow_any_dataset                  bool                default false
//   required_alignment_policy_version  text                optional
//   max_parameters                     integer             optional
//   require_dataset_commitment         bool                default false
//   require_log_inclusion              bool                default true
//   max_statement_age                  "30d"|"12h"|"90m"|"3600s"  optional
//   require_full_provenance            bool                default false
//   verify_mode                        "whole-file"|"merkle-sample"
//                                                          default "whole-file"
//   sample_chunks                      integer >= 1        required iff merkle-sample

#include <nlohmann/json.hpp>

#include <chrono>
#include <optional>
#include <set>
#include <string>

#include "modeltrust/errors.hpp"
#include "modeltrust/keys.hpp"
#include "modeltrust/time.hpp"

namespace modeltrust {

enum class VerifyMode { kWholeFile, kMerkleSample };

struct Policy {
  Keyring trusted_keys;
  std::optional<PublicKey> trusted_log_key;
  std::set<std::string> allowed_dataset_ids;
  bool allow_any_dataset = false;
  std::optional<std::string> required_alignment_policy_version;
  std::optional<std::uint64_t> max_parameters;
  bool require_dataset_commitment = false;
  bool require_log_inclusion = true;
  std::optional<std::chrono::seconds> max_statement_age;
  bool require_full_provenance = false;
  VerifyMode verify_mode = VerifyMode::kWholeFile;
  std::uint64_t sample_chunks = 0;
};

inline void validate(const Policy& p) {
  if (p.trusted_keys.empty()) throw ParseError("policy must trust at least one key", 0, "trusted_keys");
  if (p.require_log_inclusion && !p.trusted_log_key)
    throw ParseError("require_log_inclusion needs trusted_log_key", 0, "trusted_log_key");
  if (p.verify_mode == VerifyMode::kMerkleSample && p.sample_chunks < 1)
    throw ParseError("merkle-sample needs sample_chunks >= 1", 0, "sample_chunks");
}

namespace detail {

inline int line_of(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

// Best-effort line of the first occurrence of `"key"` for diagnostics.
inline int line_of_key(const std::string& text, const std::string& key) {
  auto pos = text.find("\"" + key + "\"");
  return pos == std::string::npos ? 0 : line_of(text, pos);
}

}  // namespace detail

inline Policy parse_policy(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("policy syntax error: ") + e.what(), detail::line_of(text, e.byte));
  }
  if (!doc.is_object()) throw ParseError("policy must be a JSON object", 1);

  static const std::set<std::string> kKnown = {
      "trusted_keys",          "trusted_log_key",          "allowed_dataset_ids",
      "allow_any_dataset",     "required_alignment_policy_version", "max_parameters",
      "require_dataset_commitment", "require_log_inclusion", "max_statement_age",
      "require_full_provenance", "verify_mode",             "sample_chunks"};
  for (const auto& [key, _] : doc.items())
    if (!kKnown.contains(key))
      throw ParseError("unknown policy key '" + key + "'", detail::line_of_key(text, key), key);

  auto fail = [&](const std::string& key, const std::string& why) -> ParseError {
    return ParseError("policy field '" + key + "': " + why, detail::line_of_key(text, key), key);
  };
  auto boolean = [&](const char* key, bool fallback) {
    if (!doc.contains(key)) return fallback;
    if (!doc[key].is_boolean()) throw fail(key, "must be true or false");
    return doc[key].get<bool>();
  };
  auto pubkey = [&](const char* key, const nlohmann::json& v) {
    if (!v.is_string()) throw fail(key, "public keys are hex strings");
    try {
      return PublicKey::from_hex(v.get<std::string>());
    } catch (const KeyError& e) {
      throw fail(key, e.what());
    }
  };

  Policy p;
  if (!doc.contains("trusted_keys") || !doc["trusted_keys"].is_array()) throw fail("trusted_keys", "must be an array");
  for (const auto& k : doc["trusted_keys"]) p.trusted_keys.add(pubkey("trusted_keys", k));
  if (doc.contains("trusted_log_key")) p.trusted_log_key = pubkey("trusted_log_key", doc["trusted_log_key"]);

  if (!doc.contains("allowed_dataset_ids") || !doc["allowed_dataset_ids"].is_array())
    throw fail("allowed_dataset_ids", "must be an array of dataset ids");
  for (const auto& d : doc["allowed_dataset_ids"]) {
    if (!d.is_string() || d.get<std::string>().empty()) throw fail("allowed_dataset_ids", "ids are non-empty strings");
    p.allowed_dataset_ids.insert(d.get<std::string>());
  }
  p.allow_any_dataset = boolean("allow_any_dataset", false);

  if (doc.contains("required_alignment_policy_version")) {
    const auto& v = doc["required_alignment_policy_version"];
    if (!v.is_string() || v.get<std::string>().empty())
      throw fail("required_alignment_policy_version", "must be a non-empty string");
    p.required_alignment_policy_version = v.get<std::string>();
  }
  if (doc.contains("max_parameters")) {
    if (!doc["max_parameters"].is_number_unsigned()) throw fail("max_parameters", "must be a non-negative integer");
    p.max_parameters = doc["max_parameters"].get<std::uint64_t>();
  }
  p.require_dataset_commitment = boolean("require_dataset_commitment", false);
  p.require_log_inclusion = boolean("require_log_inclusion", true);
  if (doc.contains("max_statement_age")) {
    const auto& v = doc["max_statement_age"];
    auto age = v.is_string() ? parse_duration(v.get<std::string>()) : std::nullopt;
    if (!age) throw fail("max_statement_age", "expected a duration such as \"30d\", \"12h\" or \"3600s\"");
    p.max_statement_age = age;
  }
  p.require_full_provenance = boolean("require_full_provenance", false);

  if (doc.contains("verify_mode")) {
    const auto& v = doc["verify_mode"];
    if (v == "whole-file") {
      p.verify_mode = VerifyMode::kWholeFile;
    } else if (v == "merkle-sample") {
      p.verify_mode = VerifyMode::kMerkleSample;
    } else {
      throw fail("verify_mode", "must be \"whole-file\" or \"merkle-sample\"");
    }
  }
  if (doc.contains("sample_chunks")) {
    if (p.verify_mode != VerifyMode::kMerkleSample) throw fail("sample_chunks", "only valid with merkle-sample");
    if (!doc["sample_chunks"].is_number_unsigned()) throw fail("sample_chunks", "must be a positive integer");
    p.sample_chunks = doc["sample_chunks"].get<std::uint64_t>();
    if (p.sample_chunks < 1) throw fail("sample_chunks", "must be >= 1");
  }

  try {
    validate(p);
  } catch (const ParseError& e) {
    throw ParseError(e.what(), detail::line_of_key(text, e.field()), e.field());
  }
  return p;
}

inline nlohmann::json policy_to_json(const Policy& p) {
  nlohmann::json doc;
  doc["trusted_keys"] = nlohmann::json::array();
  for (const auto& [_, key] : p.trusted_keys) doc["trusted_keys"].push_back(key.hex());
  if (p.trusted_log_key) doc["trusted_log_key"] = p.trusted_log_key->hex();
  doc["allowed_dataset_ids"] = p.allowed_dataset_ids;
  doc["allow_any_dataset"] = p.allow_any_dataset;
  if (p.required_alignment_policy_version) doc["required_alignment_policy_version"] = *p.required_alignment_policy_version;
  if (p.max_parameters) doc["max_parameters"] = *p.max_parameters;
  doc["require_dataset_commitment"] = p.require_dataset_commitment;
  doc["require_log_inclusion"] = p.require_log_inclusion;
  if (p.max_statement_age) doc["max_statement_age"] = std::to_string(p.max_statement_age->count()) + "s";
  doc["require_full_provenance"] = p.require_full_provenance;
  doc["verify_mode"] = p.verify_mode == VerifyMode::kWholeFile ? "whole-file" : "merkle-sample";
  if (p.verify_mode == VerifyMode::kMerkleSample) doc["sample_chunks"] = p.sample_chunks;
  return doc;
}

}  // namespace modeltrust
