#pragma once

// Attestation statements and signature envelopes.
//
// The canonical encoding of a statement is compact JSON with keys in
// byte-wise ascending order, hashes as lowercase hex, integers only, and
// absent optional fields omitted:
//
//   {"alignment_policy_version":..,
//    "artifact":{"chunk_count":N,"chunk_size":N,"full_sha256":hex,
//                "merkle_root":hex,"total_length":N},
//    "dataset_commitment":hex?, "dataset_id":.., "model_name":..,
//    "model_version":.., "parameter_count":N?,
//    "parent_statement_digest":hex?, "schema_version":1,
//    "training_timestamp":rfc3339}
//
// These bytes are what gets signed, hashed into the statement digest, and
// stored on disk.

#include <nlohmann/json.hpp>

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "modeltrust/artifact_digest.hpp"
#include "modeltrust/errors.hpp"
#include "modeltrust/keys.hpp"
#include "modeltrust/sha256.hpp"
#include "modeltrust/time.hpp"

namespace modeltrust {

inline constexpr std::uint64_t kSchemaVersion = 1;

struct AttestationStatement {
  std::uint64_t schema_version = kSchemaVersion;
  std::string model_name;
  std::string model_version;
  ArtifactDigest artifact;
  std::string dataset_id;
  std::optional<Digest> dataset_commitment;
  std::string alignment_policy_version;
  std::string training_timestamp;
  std::optional<Digest> parent_statement_digest;
  std::optional<std::uint64_t> parameter_count;

  friend bool operator==(const AttestationStatement&, const AttestationStatement&) = default;
};

struct SignatureEnvelope {
  Digest statement_digest{};
  std::vector<std::uint8_t> signature;
  Digest key_fingerprint{};
  std::string signed_at;

  friend bool operator==(const SignatureEnvelope&, const SignatureEnvelope&) = default;
};

struct SignedStatement {
  AttestationStatement statement;
  SignatureEnvelope envelope;
};

// Checked in this order; the first failure is reported.
enum class SignatureCheck { kDigestMismatch, kUntrustedKey, kSignatureInvalid };

inline const char* to_string(SignatureCheck c) {
  switch (c) {
    case SignatureCheck::kDigestMismatch: return "DIGEST_MISMATCH";
    case SignatureCheck::kUntrustedKey: return "UNTRUSTED_KEY";
    case SignatureCheck::kSignatureInvalid: return "SIGNATURE_INVALID";
  }
  return "UNKNOWN";
}

struct SignatureVerdict {
  std::optional<SignatureCheck> failure;

  bool accepted() const { return !failure.has_value(); }
  explicit operator bool() const { return accepted(); }
};

inline void validate(const AttestationStatement& s) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
  };
  require(s.schema_version == kSchemaVersion, "unsupported schema_version " + std::to_string(s.schema_version));
  require(!s.model_name.empty(), "model_name is empty");
  require(!s.model_version.empty(), "model_version is empty");
  require(!s.dataset_id.empty(), "dataset_id is empty");
  require(!s.alignment_policy_version.empty(), "alignment_policy_version is empty");
  require(parse_rfc3339(s.training_timestamp).has_value(),
          "training_timestamp is not RFC 3339: '" + s.training_timestamp + "'");
  try {
    validate_chunk_size(s.artifact.chunk_size);
  } catch (const ParameterError& e) {
    throw ValidationError(e.what());
  }
  require(s.artifact.chunk_count == expected_chunk_count(s.artifact.total_length, s.artifact.chunk_size),
          "artifact chunk_count inconsistent with total_length and chunk_size");
}

inline nlohmann::json artifact_to_json(const ArtifactDigest& a) {
  return {{"chunk_count", a.chunk_count},
          {"chunk_size", a.chunk_size},
          {"full_sha256", to_hex(a.full_sha256)},
          {"merkle_root", to_hex(a.merkle_root)},
          {"total_length", a.total_length}};
}

inline nlohmann::json statement_to_json(const AttestationStatement& s) {
  nlohmann::json doc = {{"alignment_policy_version", s.alignment_policy_version},
                        {"artifact", artifact_to_json(s.artifact)},
                        {"dataset_id", s.dataset_id},
                        {"model_name", s.model_name},
                        {"model_version", s.model_version},
                        {"schema_version", s.schema_version},
                        {"training_timestamp", s.training_timestamp}};
  if (s.dataset_commitment) doc["dataset_commitment"] = to_hex(*s.dataset_commitment);
  if (s.parent_statement_digest) doc["parent_statement_digest"] = to_hex(*s.parent_statement_digest);
  if (s.parameter_count) doc["parameter_count"] = *s.parameter_count;
  return doc;
}

// nlohmann::json objects iterate in sorted key order and dump() emits no
// whitespace, which is exactly the canonical form.
inline std::string canonical_json(const nlohmann::json& doc) {
  try {
    return doc.dump();
  } catch (const nlohmann::json::type_error& e) {
    throw ValidationError(std::string("field is not valid UTF-8: ") + e.what());
  }
}

inline std::string canonical_encode(const AttestationStatement& s) {
  validate(s);
  return canonical_json(statement_to_json(s));
}

inline Digest statement_digest(const AttestationStatement& s) { return sha256(canonical_encode(s)); }

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const std::set<std::string>& allowed, const char* where) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.contains(key)) throw ParseError(std::string("unknown key '") + key + "' in " + where, 0, key);
}

inline const nlohmann::json& field(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing field '") + key + "'", 0, key);
  return *it;
}

inline std::string string_field(const nlohmann::json& obj, const char* key) {
  const auto& v = field(obj, key);
  if (!v.is_string()) throw ParseError(std::string("field '") + key + "' must be a string", 0, key);
  return v.get<std::string>();
}

inline std::uint64_t uint_field(const nlohmann::json& obj, const char* key) {
  const auto& v = field(obj, key);
  if (!v.is_number_unsigned()) throw ParseError(std::string("field '") + key + "' must be a non-negative integer", 0, key);
  return v.get<std::uint64_t>();
}

inline Digest digest_field(const nlohmann::json& obj, const char* key) {
  auto d = digest_from_hex(string_field(obj, key));
  if (!d) throw ParseError(std::string("field '") + key + "' must be 64 lowercase hex characters", 0, key);
  return *d;
}

inline nlohmann::json parse_json(std::string_view text, const char* what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    int line = 1;
    for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i)
      if (text[i] == '\n') ++line;
    throw ParseError(std::string(what) + " is not valid JSON: " + e.what(), line);
  }
}

}  // namespace detail

inline ArtifactDigest artifact_from_json(const nlohmann::json& a) {
  if (!a.is_object()) throw ParseError("artifact must be an object", 0, "artifact");
  detail::reject_unknown_keys(a, {"chunk_count", "chunk_size", "full_sha256", "merkle_root", "total_length"}, "artifact");
  ArtifactDigest d;
  d.chunk_count = detail::uint_field(a, "chunk_count");
  d.chunk_size = detail::uint_field(a, "chunk_size");
  d.full_sha256 = detail::digest_field(a, "full_sha256");
  d.merkle_root = detail::digest_field(a, "merkle_root");
  d.total_length = detail::uint_field(a, "total_length");
  return d;
}

inline AttestationStatement statement_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("statement must be a JSON object");
  detail::reject_unknown_keys(doc,
                              {"alignment_policy_version", "artifact", "dataset_commitment", "dataset_id", "model_name",
                               "model_version", "parameter_count", "parent_statement_digest", "schema_version",
                               "training_timestamp"},
                              "statement");
  AttestationStatement s;
  s.alignment_policy_version = detail::string_field(doc, "alignment_policy_version");
  s.artifact = artifact_from_json(detail::field(doc, "artifact"));
  s.dataset_id = detail::string_field(doc, "dataset_id");
  s.model_name = detail::string_field(doc, "model_name");
  s.model_version = detail::string_field(doc, "model_version");
  s.schema_version = detail::uint_field(doc, "schema_version");
  s.training_timestamp = detail::string_field(doc, "training_timestamp");
  if (doc.contains("dataset_commitment")) s.dataset_commitment = detail::digest_field(doc, "dataset_commitment");
  if (doc.contains("parent_statement_digest"))
    s.parent_statement_digest = detail::digest_field(doc, "parent_statement_digest");
  if (doc.contains("parameter_count")) s.parameter_count = detail::uint_field(doc, "parameter_count");
  validate(s);
  return s;
}

inline AttestationStatement decode_statement(std::string_view text) {
  return statement_from_json(detail::parse_json(text, "statement"));
}

inline nlohmann::json envelope_to_json(const SignatureEnvelope& e) {
  return {{"key_fingerprint", to_hex(e.key_fingerprint)},
          {"signature", to_hex(e.signature)},
          {"signed_at", e.signed_at},
          {"statement_digest", to_hex(e.statement_digest)}};
}

inline std::string encode_envelope(const SignatureEnvelope& e) { return canonical_json(envelope_to_json(e)); }

inline SignatureEnvelope envelope_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("envelope must be a JSON object");
  detail::reject_unknown_keys(doc, {"key_fingerprint", "signature", "signed_at", "statement_digest"}, "envelope");
  SignatureEnvelope e;
  e.key_fingerprint = detail::digest_field(doc, "key_fingerprint");
  auto sig = from_hex(detail::string_field(doc, "signature"));
  if (!sig) throw ParseError("field 'signature' must be lowercase hex", 0, "signature");
  e.signature.assign(sig->begin(), sig->end());
  e.signed_at = detail::string_field(doc, "signed_at");
  if (!parse_rfc3339(e.signed_at)) throw ParseError("field 'signed_at' is not RFC 3339", 0, "signed_at");
  e.statement_digest = detail::digest_field(doc, "statement_digest");
  return e;
}

inline SignatureEnvelope decode_envelope(std::string_view text) {
  return envelope_from_json(detail::parse_json(text, "envelope"));
}

// Signs arbitrary canonical bytes. Statements and tree heads share this path.
inline SignatureEnvelope sign_bytes(std::string_view canonical, const KeyPair& key, TimePoint now = now_utc()) {
  SignatureEnvelope e;
  e.statement_digest = sha256(canonical);
  e.signature = key.sign(as_bytes(canonical));
  e.key_fingerprint = key.fingerprint();
  e.signed_at = format_rfc3339(now);
  return e;
}

inline SignatureEnvelope sign_statement(const AttestationStatement& s, const KeyPair& key, TimePoint now = now_utc()) {
  return sign_bytes(canonical_encode(s), key, now);
}

// Total on untrusted input.
inline SignatureVerdict verify_bytes(std::string_view canonical, const SignatureEnvelope& env, const Keyring& trusted) {
  if (sha256(canonical) != env.statement_digest) return {SignatureCheck::kDigestMismatch};
  const PublicKey* key = trusted.find(env.key_fingerprint);
  if (key == nullptr) return {SignatureCheck::kUntrustedKey};
  if (!key->verify(as_bytes(canonical), env.signature)) return {SignatureCheck::kSignatureInvalid};
  return {};
}

inline SignatureVerdict verify_statement(const AttestationStatement& s, const SignatureEnvelope& env,
                                         const Keyring& trusted) {
  std::string canonical;
  try {
    canonical = canonical_encode(s);
  } catch (const Error&) {
    // A statement without a canonical form has no digest to match.
    return {SignatureCheck::kDigestMismatch};
  }
  return verify_bytes(canonical, env, trusted);
}

// Builds a derived-model statement chained to `parent`.
inline AttestationStatement derive_statement(const AttestationStatement& parent, AttestationStatement child) {
  child.parent_statement_digest = statement_digest(parent);
  validate(child);
  return child;
}

}  // namespace modeltrust
