#pragma once

// Pre-deployment gate. Every check runs; the verdict lists each failing
// reason once, in the order of the Reason enum, and ALLOWs only when the
// list is empty. Nothing here throws on bad evidence.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "modeltrust/artifact_digest.hpp"
#include "modeltrust/attestation.hpp"
#include "modeltrust/lsri.hpp"
#include "modeltrust/policy.hpp"
#include "modeltrust/provenance.hpp"
#include "modeltrust/text_table.hpp"
#include "modeltrust/transparency_log.hpp"

namespace modeltrust {

enum class Reason {
  kDigestMismatch,
  kSignatureInvalid,
  kUntrustedKey,
  kNotInLog,
  kLogHeadInvalid,
  kPolicyDataset,
  kPolicyAlignment,
  kPolicySize,
  kPolicyAge,
  kPolicyCommitmentMissing,
  kProvenanceBroken,
};

inline constexpr Reason kAllReasons[] = {
    Reason::kDigestMismatch,  Reason::kSignatureInvalid, Reason::kUntrustedKey,     Reason::kNotInLog,
    Reason::kLogHeadInvalid,  Reason::kPolicyDataset,    Reason::kPolicyAlignment,  Reason::kPolicySize,
    Reason::kPolicyAge,       Reason::kPolicyCommitmentMissing, Reason::kProvenanceBroken};

inline const char* to_string(Reason r) {
  switch (r) {
    case Reason::kDigestMismatch: return "DIGEST_MISMATCH";
    case Reason::kSignatureInvalid: return "SIGNATURE_INVALID";
    case Reason::kUntrustedKey: return "UNTRUSTED_KEY";
    case Reason::kNotInLog: return "NOT_IN_LOG";
    case Reason::kLogHeadInvalid: return "LOG_HEAD_INVALID";
    case Reason::kPolicyDataset: return "POLICY_DATASET";
    case Reason::kPolicyAlignment: return "POLICY_ALIGNMENT";
    case Reason::kPolicySize: return "POLICY_SIZE";
    case Reason::kPolicyAge: return "POLICY_AGE";
    case Reason::kPolicyCommitmentMissing: return "POLICY_COMMITMENT_MISSING";
    case Reason::kProvenanceBroken: return "PROVENANCE_BROKEN";
  }
  return "UNKNOWN";
}

enum class Decision { kAllow, kDeny };

struct GateVerdict {
  Decision decision = Decision::kDeny;
  std::vector<Reason> reasons;
  std::string checked_at;
  std::vector<std::string> notes;
  std::optional<std::uint64_t> sample_seed;
  std::vector<std::uint64_t> sampled_chunks;

  bool allowed() const { return decision == Decision::kAllow; }
  bool has(Reason r) const { return std::find(reasons.begin(), reasons.end(), r) != reasons.end(); }
};

// The artifact as a file on disk or as bytes in memory.
class ArtifactSource {
 public:
  explicit ArtifactSource(std::filesystem::path path) : source_(std::move(path)) {}
  explicit ArtifactSource(std::vector<std::uint8_t> bytes) : source_(std::move(bytes)) {}

  std::optional<std::uint64_t> size() const {
    if (auto* bytes = std::get_if<std::vector<std::uint8_t>>(&source_)) return bytes->size();
    std::error_code ec;
    auto n = std::filesystem::file_size(std::get<std::filesystem::path>(source_), ec);
    if (ec) return std::nullopt;
    return n;
  }

  // Throws IoError when the file cannot be read.
  ChunkedDigest hash(std::uint64_t chunk_size) const {
    if (auto* bytes = std::get_if<std::vector<std::uint8_t>>(&source_)) {
      std::string copy(bytes->begin(), bytes->end());
      std::istringstream in(copy);
      return hash_artifact_with_leaves(in, chunk_size);
    }
    return hash_artifact_with_leaves(std::get<std::filesystem::path>(source_), chunk_size);
  }

  Digest full_sha256(std::uint64_t& length) const {
    Sha256 h;
    length = 0;
    if (auto* bytes = std::get_if<std::vector<std::uint8_t>>(&source_)) {
      length = bytes->size();
      return h.update(*bytes).finish();
    }
    auto in = open_artifact(std::get<std::filesystem::path>(source_));
    std::vector<char> buf(1 << 20);
    while (in) {
      in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
      auto got = static_cast<std::size_t>(in.gcount());
      if (got == 0) break;
      h.update(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(buf.data()), got));
      length += got;
    }
    if (in.bad()) throw IoError("read error on artifact");
    return h.finish();
  }

  std::vector<std::uint8_t> read(std::uint64_t offset, std::uint64_t length) const {
    if (auto* bytes = std::get_if<std::vector<std::uint8_t>>(&source_)) {
      if (offset + length > bytes->size()) throw IoError("read past end of artifact");
      return {bytes->begin() + static_cast<std::ptrdiff_t>(offset),
              bytes->begin() + static_cast<std::ptrdiff_t>(offset + length)};
    }
    auto in = open_artifact(std::get<std::filesystem::path>(source_));
    in.seekg(static_cast<std::streamoff>(offset));
    std::vector<std::uint8_t> out(length);
    in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(length));
    if (static_cast<std::uint64_t>(in.gcount()) != length) throw IoError("short read from artifact");
    return out;
  }

 private:
  std::variant<std::filesystem::path, std::vector<std::uint8_t>> source_;
};

struct LogEvidence {
  SignedTreeHead head;
  InclusionProof proof;
};

struct GateInput {
  ArtifactSource artifact;
  // Leaf hashes of every chunk, shipped alongside the artifact. Untrusted;
  // used only to build proofs in merkle-sample mode.
  std::optional<std::vector<Digest>> chunk_manifest;
  AttestationStatement statement;
  SignatureEnvelope envelope;
  std::optional<LogEvidence> log_evidence;
  StatementResolver resolver;
  TimePoint now = now_utc();
  std::uint64_t sample_seed = 0;
};

// k distinct indices from [0, n), uniform, reproducible from the seed on any
// platform (mt19937_64 output is fully specified; bounded draws use
// rejection sampling rather than std::uniform_int_distribution).
inline std::vector<std::uint64_t> sample_chunk_indices(std::uint64_t n, std::uint64_t k, std::uint64_t seed) {
  k = std::min(k, n);
  std::mt19937_64 rng(seed);
  auto below = [&](std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do x = rng(); while (x >= limit);
    return x % bound;
  };
  // Partial Fisher-Yates over a sparse permutation.
  std::map<std::uint64_t, std::uint64_t> swapped;
  auto at = [&](std::uint64_t i) {
    auto it = swapped.find(i);
    return it == swapped.end() ? i : it->second;
  };
  std::vector<std::uint64_t> out;
  out.reserve(k);
  for (std::uint64_t i = 0; i < k; ++i) {
    std::uint64_t j = i + below(n - i);
    std::uint64_t vi = at(i), vj = at(j);
    swapped[i] = vj;
    swapped[j] = vi;
    out.push_back(vj);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace detail {

class ReasonSet {
 public:
  void add(Reason r, std::string note = {}) {
    if (std::find(reasons_.begin(), reasons_.end(), r) == reasons_.end()) reasons_.push_back(r);
    if (!note.empty()) notes_.push_back(std::string(to_string(r)) + ": " + note);
  }
  std::vector<Reason> sorted() const {
    auto out = reasons_;
    std::sort(out.begin(), out.end());
    return out;
  }
  std::vector<std::string>& notes() { return notes_; }

 private:
  std::vector<Reason> reasons_;
  std::vector<std::string> notes_;
};

inline void check_artifact(const GateInput& in, const Policy& policy, ReasonSet& reasons, GateVerdict& verdict) {
  const ArtifactDigest& want = in.statement.artifact;
  try {
    if (policy.verify_mode == VerifyMode::kWholeFile) {
      std::uint64_t length = 0;
      Digest got = in.artifact.full_sha256(length);
      if (length != want.total_length) reasons.add(Reason::kDigestMismatch, "artifact length differs from statement");
      else if (got != want.full_sha256) reasons.add(Reason::kDigestMismatch, "artifact SHA-256 differs from statement");
      return;
    }

    auto size = in.artifact.size();
    if (!size) {
      reasons.add(Reason::kDigestMismatch, "artifact unreadable");
      return;
    }
    if (*size != want.total_length) {
      reasons.add(Reason::kDigestMismatch, "artifact length differs from statement");
      return;
    }
    std::vector<Digest> leaves;
    if (in.chunk_manifest && in.chunk_manifest->size() == want.chunk_count) {
      leaves = *in.chunk_manifest;
    } else {
      verdict.notes.push_back("no usable chunk manifest; hashed every chunk to build proofs");
      leaves = in.artifact.hash(want.chunk_size).leaves;
      if (leaves.size() != want.chunk_count) {
        reasons.add(Reason::kDigestMismatch, "chunk count differs from statement");
        return;
      }
    }
    verdict.sample_seed = in.sample_seed;
    verdict.sampled_chunks = sample_chunk_indices(want.chunk_count, policy.sample_chunks, in.sample_seed);
    for (std::uint64_t idx : verdict.sampled_chunks) {
      const std::uint64_t offset = idx * want.chunk_size;
      const std::uint64_t len = want.total_length == 0 ? 0 : std::min(want.chunk_size, want.total_length - offset);
      Digest leaf = merkle::leaf_hash(in.artifact.read(offset, len));
      if (!verify_chunk(want.merkle_root, leaf, prove_chunk(leaves, idx))) {
        reasons.add(Reason::kDigestMismatch, "chunk " + std::to_string(idx) + " does not match the attested Merkle root");
      }
    }
  } catch (const Error& e) {
    reasons.add(Reason::kDigestMismatch, std::string("artifact unreadable: ") + e.what());
  }
}

inline void check_signature_and_log(const GateInput& in, const Policy& policy, ReasonSet& reasons) {
  std::optional<std::string> canonical;
  try {
    canonical = canonical_encode(in.statement);
  } catch (const Error& e) {
    reasons.add(Reason::kSignatureInvalid, std::string("statement has no canonical form: ") + e.what());
  }

  if (canonical) {
    SignatureVerdict sig = verify_bytes(*canonical, in.envelope, policy.trusted_keys);
    if (!sig) {
      switch (*sig.failure) {
        case SignatureCheck::kDigestMismatch:
          reasons.add(Reason::kSignatureInvalid, "envelope signs a different statement");
          break;
        case SignatureCheck::kUntrustedKey: reasons.add(Reason::kUntrustedKey); break;
        case SignatureCheck::kSignatureInvalid: reasons.add(Reason::kSignatureInvalid); break;
      }
    }
  }

  if (!policy.require_log_inclusion) return;
  if (!in.log_evidence) {
    reasons.add(Reason::kNotInLog, "no log evidence supplied");
    return;
  }
  const auto& ev = *in.log_evidence;
  if (!policy.trusted_log_key || !verify_head_signature(ev.head, *policy.trusted_log_key))
    reasons.add(Reason::kLogHeadInvalid, "tree head not signed by the trusted log key");
  if (!canonical || !inclusion_folds_to(ev.proof, merkle::leaf_hash(*canonical), ev.head))
    reasons.add(Reason::kNotInLog, "inclusion proof does not reach the tree head");
}

inline void check_policy(const GateInput& in, const Policy& policy, ReasonSet& reasons) {
  const auto& s = in.statement;
  if (!policy.allow_any_dataset && !policy.allowed_dataset_ids.contains(s.dataset_id))
    reasons.add(Reason::kPolicyDataset, "dataset '" + s.dataset_id + "' is not approved");
  if (policy.required_alignment_policy_version && s.alignment_policy_version != *policy.required_alignment_policy_version)
    reasons.add(Reason::kPolicyAlignment, "alignment policy '" + s.alignment_policy_version + "' is not the required version");
  if (policy.max_parameters) {
    if (!s.parameter_count) reasons.add(Reason::kPolicySize, "statement does not declare a parameter count");
    else if (*s.parameter_count > *policy.max_parameters) reasons.add(Reason::kPolicySize, "model exceeds max_parameters");
  }
  if (policy.max_statement_age) {
    auto trained = parse_rfc3339(s.training_timestamp);
    if (!trained) reasons.add(Reason::kPolicyAge, "training_timestamp unparsable");
    else if (in.now - *trained > *policy.max_statement_age) reasons.add(Reason::kPolicyAge, "statement older than max_statement_age");
  }
  if (policy.require_dataset_commitment && !s.dataset_commitment)
    reasons.add(Reason::kPolicyCommitmentMissing);

  if (policy.require_full_provenance && s.parent_statement_digest) {
    // The leaf itself was checked above; walk its ancestors.
    std::optional<SignedStatement> parent = in.resolver ? in.resolver(*s.parent_statement_digest) : std::nullopt;
    if (!parent) {
      reasons.add(Reason::kProvenanceBroken, "parent statement not found");
      return;
    }
    ProvenanceVerdict walk = trace_provenance(parent->statement, in.resolver, policy.trusted_keys);
    if (!walk.ok())
      reasons.add(Reason::kProvenanceBroken, std::string(to_string(*walk.failure)) + " at ancestor depth " +
                                                 std::to_string(walk.failure_depth + 1));
  }
}

}  // namespace detail

inline GateVerdict evaluate_gate(const GateInput& in, const Policy& policy) {
  GateVerdict verdict;
  verdict.checked_at = format_rfc3339(in.now);
  detail::ReasonSet reasons;
  detail::check_artifact(in, policy, reasons, verdict);
  detail::check_signature_and_log(in, policy, reasons);
  detail::check_policy(in, policy, reasons);
  verdict.reasons = reasons.sorted();
  verdict.notes.insert(verdict.notes.end(), reasons.notes().begin(), reasons.notes().end());
  verdict.decision = verdict.reasons.empty() ? Decision::kAllow : Decision::kDeny;
  return verdict;
}

// A denied gate zeroes the integrity multiplier.
inline std::vector<lsri::IntegrityViolation> violation_from_verdict(const GateVerdict& verdict) {
  if (verdict.allowed()) return {};
  return {{"supply_chain", 1.0, 1.0}};
}

inline nlohmann::json verdict_to_json(const GateVerdict& v) {
  nlohmann::json reasons = nlohmann::json::array();
  for (Reason r : v.reasons) reasons.push_back(to_string(r));
  nlohmann::json doc = {{"checked_at", v.checked_at},
                        {"decision", v.allowed() ? "ALLOW" : "DENY"},
                        {"notes", v.notes},
                        {"reasons", reasons}};
  if (v.sample_seed) {
    doc["sample_seed"] = *v.sample_seed;
    doc["sampled_chunks"] = v.sampled_chunks;
  }
  return doc;
}

inline void print_verdict(std::ostream& os, const GateVerdict& v) {
  TextTable t({"Check", "Result"});
  for (Reason r : kAllReasons) t.add_row({to_string(r), v.has(r) ? "FAIL" : "ok"});
  t.print(os);
  os << "Decision: " << (v.allowed() ? "ALLOW" : "DENY") << "  (checked " << v.checked_at << ")\n";
  for (const auto& n : v.notes) os << "  - " << n << '\n';
}

}  // namespace modeltrust
