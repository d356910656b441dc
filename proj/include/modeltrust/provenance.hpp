#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "modeltrust/attestation.hpp"

namespace modeltrust {

// Looks a statement up by its statement digest.
using StatementResolver = std::function<std::optional<SignedStatement>(const Digest&)>;

enum class ProvenanceFailure { kMissingAncestor, kDigestMismatch, kUntrustedKey, kSignatureInvalid, kCycle, kTooDeep };

inline const char* to_string(ProvenanceFailure f) {
  switch (f) {
    case ProvenanceFailure::kMissingAncestor: return "MISSING_ANCESTOR";
    case ProvenanceFailure::kDigestMismatch: return "DIGEST_MISMATCH";
    case ProvenanceFailure::kUntrustedKey: return "UNTRUSTED_KEY";
    case ProvenanceFailure::kSignatureInvalid: return "SIGNATURE_INVALID";
    case ProvenanceFailure::kCycle: return "CYCLE";
    case ProvenanceFailure::kTooDeep: return "TOO_DEEP";
  }
  return "UNKNOWN";
}

struct ProvenanceVerdict {
  // Root first, leaf last. On failure holds the verified suffix, leaf last.
  std::vector<AttestationStatement> chain;
  std::optional<ProvenanceFailure> failure;
  // 0 is the leaf, 1 its parent, and so on.
  std::size_t failure_depth = 0;
  std::size_t signatures_verified = 0;

  bool ok() const { return !failure.has_value(); }
};

inline constexpr std::size_t kMaxProvenanceDepth = 4096;

// Walks parent links from `leaf` to a root statement, verifying every
// signature on the way (the leaf's envelope is resolved like any other).
inline ProvenanceVerdict trace_provenance(const AttestationStatement& leaf, const StatementResolver& resolver,
                                          const Keyring& trusted) {
  ProvenanceVerdict verdict;
  std::set<Digest> seen;
  std::vector<AttestationStatement> walked;
  auto fail = [&](ProvenanceFailure f, std::size_t depth) {
    verdict.failure = f;
    verdict.failure_depth = depth;
    verdict.chain.assign(walked.rbegin(), walked.rend());
    return verdict;
  };

  std::optional<Digest> wanted;
  try {
    wanted = statement_digest(leaf);
  } catch (const Error&) {
    return fail(ProvenanceFailure::kDigestMismatch, 0);
  }

  for (std::size_t depth = 0;; ++depth) {
    if (depth >= kMaxProvenanceDepth) return fail(ProvenanceFailure::kTooDeep, depth);
    std::optional<SignedStatement> found = resolver(*wanted);
    if (!found) return fail(ProvenanceFailure::kMissingAncestor, depth);

    std::optional<Digest> actual;
    try {
      actual = statement_digest(found->statement);
    } catch (const Error&) {
      return fail(ProvenanceFailure::kDigestMismatch, depth);
    }
    if (seen.contains(*actual)) return fail(ProvenanceFailure::kCycle, depth);
    if (*actual != *wanted) return fail(ProvenanceFailure::kDigestMismatch, depth);
    seen.insert(*actual);

    SignatureVerdict sig = verify_statement(found->statement, found->envelope, trusted);
    ++verdict.signatures_verified;
    if (!sig) {
      switch (*sig.failure) {
        case SignatureCheck::kDigestMismatch: return fail(ProvenanceFailure::kDigestMismatch, depth);
        case SignatureCheck::kUntrustedKey: return fail(ProvenanceFailure::kUntrustedKey, depth);
        case SignatureCheck::kSignatureInvalid: return fail(ProvenanceFailure::kSignatureInvalid, depth);
      }
    }
    walked.push_back(found->statement);
    if (!found->statement.parent_statement_digest) break;
    wanted = *found->statement.parent_statement_digest;
  }
  verdict.chain.assign(walked.rbegin(), walked.rend());
  return verdict;
}

// In-memory statement index, optionally populated from a directory holding
// `<name>.statement.json` files next to `<name>.envelope.json`.
class StatementStore {
 public:
  void add(SignedStatement entry) {
    Digest d = statement_digest(entry.statement);
    entries_[d] = std::move(entry);
  }

  void remove(const Digest& d) { entries_.erase(d); }

  std::optional<SignedStatement> find(const Digest& d) const {
    auto it = entries_.find(d);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  StatementResolver resolver() const {
    return [this](const Digest& d) { return find(d); };
  }

  std::size_t size() const { return entries_.size(); }

  // Unreadable or malformed pairs are skipped; a missing ancestor then
  // surfaces as MISSING_ANCESTOR during the walk.
  static StatementStore load_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) throw IoError("statement store is not a directory: " + dir.string());
    StatementStore store;
    constexpr std::string_view kSuffix = ".statement.json";
    for (const auto& item : std::filesystem::directory_iterator(dir)) {
      const std::string name = item.path().filename().string();
      if (name.size() <= kSuffix.size() || name.compare(name.size() - kSuffix.size(), kSuffix.size(), kSuffix) != 0)
        continue;
      auto envelope_path = item.path().parent_path() / (name.substr(0, name.size() - kSuffix.size()) + ".envelope.json");
      try {
        SignedStatement entry{decode_statement(read_file(item.path())), decode_envelope(read_file(envelope_path))};
        store.add(std::move(entry));
      } catch (const Error&) {
        continue;
      }
    }
    return store;
  }

 private:
  std::map<Digest, SignedStatement> entries_;
};

}  // namespace modeltrust
