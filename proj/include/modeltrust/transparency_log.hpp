#pragma once

// Append-only Merkle log over attestation statements.
//
// Directory layout (all integers big-endian):
//   entries.log  repeated { u32 statement_len | statement bytes |
//                           u32 timestamp_len | appended_at (RFC 3339) }
//   heads.log    repeated { u32 head_len | canonical signed tree head JSON }
//   log_key.pub  public key file of the log signer
//   .lock        advisory lock taken by writers
//
// A record in heads.log is the commit point of an append. On load, entries
// beyond the last complete head's tree_size are uncommitted and ignored, and
// so is any torn record at the end of either file.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "modeltrust/attestation.hpp"
#include "modeltrust/merkle.hpp"

namespace modeltrust {

struct LogEntry {
  std::uint64_t index = 0;
  Digest leaf_hash{};
  Digest statement_digest{};
  std::string appended_at;
  std::string statement_bytes;
};

struct SignedTreeHead {
  std::uint64_t tree_size = 0;
  Digest root_hash{};
  std::string issued_at;
  SignatureEnvelope log_signature;

  friend bool operator==(const SignedTreeHead&, const SignedTreeHead&) = default;
};

struct InclusionProof {
  std::uint64_t leaf_index = 0;
  std::uint64_t tree_size = 0;
  std::vector<Digest> path;

  friend bool operator==(const InclusionProof&, const InclusionProof&) = default;
};

struct ConsistencyProof {
  std::uint64_t old_size = 0;
  std::uint64_t new_size = 0;
  std::vector<Digest> path;

  friend bool operator==(const ConsistencyProof&, const ConsistencyProof&) = default;
};

// ---- canonical forms -------------------------------------------------------

// The bytes covered by a head's log signature.
inline std::string canonical_head_bytes(std::uint64_t tree_size, const Digest& root, const std::string& issued_at) {
  nlohmann::json doc = {{"issued_at", issued_at}, {"root_hash", to_hex(root)}, {"tree_size", tree_size}};
  return doc.dump();
}

inline std::string canonical_head_bytes(const SignedTreeHead& h) {
  return canonical_head_bytes(h.tree_size, h.root_hash, h.issued_at);
}

inline nlohmann::json head_to_json(const SignedTreeHead& h) {
  return {{"issued_at", h.issued_at},
          {"log_signature", envelope_to_json(h.log_signature)},
          {"root_hash", to_hex(h.root_hash)},
          {"tree_size", h.tree_size}};
}

inline SignedTreeHead head_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("tree head must be a JSON object");
  detail::reject_unknown_keys(doc, {"issued_at", "log_signature", "root_hash", "tree_size"}, "tree head");
  SignedTreeHead h;
  h.issued_at = detail::string_field(doc, "issued_at");
  h.log_signature = envelope_from_json(detail::field(doc, "log_signature"));
  h.root_hash = detail::digest_field(doc, "root_hash");
  h.tree_size = detail::uint_field(doc, "tree_size");
  return h;
}

inline nlohmann::json digests_to_json(const std::vector<Digest>& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& d : path) arr.push_back(to_hex(d));
  return arr;
}

inline std::vector<Digest> digests_from_json(const nlohmann::json& arr, const char* key) {
  if (!arr.is_array()) throw ParseError(std::string("'") + key + "' must be an array", 0, key);
  std::vector<Digest> out;
  for (const auto& v : arr) {
    auto d = v.is_string() ? digest_from_hex(v.get<std::string>()) : std::nullopt;
    if (!d) throw ParseError(std::string("'") + key + "' holds a malformed hash", 0, key);
    out.push_back(*d);
  }
  return out;
}

inline nlohmann::json inclusion_to_json(const InclusionProof& p) {
  return {{"leaf_index", p.leaf_index}, {"path", digests_to_json(p.path)}, {"tree_size", p.tree_size}};
}

inline InclusionProof inclusion_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("inclusion proof must be a JSON object");
  detail::reject_unknown_keys(doc, {"leaf_index", "path", "tree_size"}, "inclusion proof");
  return {detail::uint_field(doc, "leaf_index"), detail::uint_field(doc, "tree_size"),
          digests_from_json(detail::field(doc, "path"), "path")};
}

inline nlohmann::json consistency_to_json(const ConsistencyProof& p) {
  return {{"new_size", p.new_size}, {"old_size", p.old_size}, {"path", digests_to_json(p.path)}};
}

inline ConsistencyProof consistency_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("consistency proof must be a JSON object");
  detail::reject_unknown_keys(doc, {"new_size", "old_size", "path"}, "consistency proof");
  return {detail::uint_field(doc, "old_size"), detail::uint_field(doc, "new_size"),
          digests_from_json(detail::field(doc, "path"), "path")};
}

// ---- verification (total on untrusted input) -------------------------------

inline bool verify_head_signature(const SignedTreeHead& head, const PublicKey& log_key) {
  return verify_bytes(canonical_head_bytes(head), head.log_signature, Keyring{log_key}).accepted();
}

// Path folding only, without the head signature.
inline bool inclusion_folds_to(const InclusionProof& proof, const Digest& leaf, const SignedTreeHead& head) {
  if (proof.tree_size != head.tree_size) return false;
  auto root = merkle::root_from_inclusion_path(proof.leaf_index, proof.tree_size, leaf, proof.path);
  return root && *root == head.root_hash;
}

inline bool verify_inclusion(const InclusionProof& proof, const Digest& leaf, const SignedTreeHead& head,
                             const PublicKey& log_key) {
  return inclusion_folds_to(proof, leaf, head) && verify_head_signature(head, log_key);
}

inline bool verify_consistency(const SignedTreeHead& old_head, const SignedTreeHead& new_head,
                               const ConsistencyProof& proof) {
  if (proof.old_size != old_head.tree_size || proof.new_size != new_head.tree_size) return false;
  return merkle::verify_consistency(proof.old_size, proof.new_size, old_head.root_hash, new_head.root_hash,
                                    proof.path);
}

// ---- the log ---------------------------------------------------------------

// Test hook: invoked at each persistence step of an append. Throwing from it
// simulates a crash at that point.
enum class AppendStage { kEntryHalfWritten, kEntryWritten, kHeadHalfWritten };
using AppendFaultHook = std::function<void(AppendStage)>;

struct AppendResult {
  std::uint64_t index = 0;
  SignedTreeHead head;
};

class TransparencyLog {
 public:
  // In-memory log; nothing is persisted.
  explicit TransparencyLog(KeyPair signer) : signer_(std::move(signer)), public_key_(signer_->public_key()) {}

  // Creates an empty log directory owned by `signer`.
  static TransparencyLog create(const std::filesystem::path& dir, const KeyPair& signer) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create log directory " + dir.string() + ": " + ec.message());
    if (std::filesystem::exists(dir / "entries.log") || std::filesystem::exists(dir / "heads.log"))
      throw IoError("log already exists in " + dir.string());
    write_file(dir / "log_key.pub", encode_public_key(signer.public_key()));
    write_file(dir / "entries.log", "");
    write_file(dir / "heads.log", "");
    return open(dir, signer);
  }

  // Opens an existing log. Without a signer the log is read-only.
  static TransparencyLog open(const std::filesystem::path& dir, std::optional<KeyPair> signer = std::nullopt) {
    TransparencyLog log;
    log.dir_ = dir;
    log.public_key_ = load_public_key(dir / "log_key.pub");
    if (signer && signer->public_key() != log.public_key_)
      throw KeyError("signing key does not match the log's public key");
    log.signer_ = std::move(signer);
    log.load();
    return log;
  }

  const PublicKey& public_key() const { return public_key_; }

  std::uint64_t size() const {
    std::shared_lock lock(*mutex_);
    return entries_.size();
  }

  // Empty when the recomputed root matched the last journaled head.
  const std::string& recovery_issue() const { return recovery_issue_; }

  std::optional<SignedTreeHead> latest_head() const {
    std::shared_lock lock(*mutex_);
    if (heads_.empty()) return std::nullopt;
    return heads_.back();
  }

  std::vector<SignedTreeHead> heads() const {
    std::shared_lock lock(*mutex_);
    return heads_;
  }

  LogEntry entry(std::uint64_t index) const {
    std::shared_lock lock(*mutex_);
    if (index >= entries_.size()) throw ParameterError("entry index out of range");
    return entries_[index];
  }

  std::vector<Digest> leaf_hashes(std::uint64_t tree_size) const {
    std::shared_lock lock(*mutex_);
    if (tree_size > leaves_.size()) throw ParameterError("tree size exceeds log size");
    return {leaves_.begin(), leaves_.begin() + static_cast<std::ptrdiff_t>(tree_size)};
  }

  std::optional<std::uint64_t> find_leaf(const Digest& leaf) const {
    std::shared_lock lock(*mutex_);
    for (std::size_t i = 0; i < leaves_.size(); ++i)
      if (leaves_[i] == leaf) return i;
    return std::nullopt;
  }

  void set_fault_hook(AppendFaultHook hook) { fault_hook_ = std::move(hook); }

  AppendResult append(const AttestationStatement& statement, TimePoint now = now_utc()) {
    return append_bytes(canonical_encode(statement), now);
  }

  // `canonical` must be a canonical statement encoding; it is hashed as-is.
  AppendResult append_bytes(const std::string& canonical, TimePoint now = now_utc()) {
    if (!signer_) throw KeyError("log opened without its signing key");
    std::unique_lock lock(*mutex_);
    DirectoryLock dir_lock(dir_);

    LogEntry e;
    e.index = entries_.size();
    e.leaf_hash = merkle::leaf_hash(canonical);
    e.statement_digest = sha256(canonical);
    e.appended_at = format_rfc3339(now);
    e.statement_bytes = canonical;

    std::vector<Digest> leaves = leaves_;
    leaves.push_back(e.leaf_hash);
    SignedTreeHead head;
    head.tree_size = leaves.size();
    head.root_hash = merkle::root(leaves);
    head.issued_at = e.appended_at;
    head.log_signature = sign_bytes(canonical_head_bytes(head), *signer_, now);

    if (!dir_.empty()) persist(e, head);

    entries_.push_back(std::move(e));
    leaves_ = std::move(leaves);
    heads_.push_back(head);
    return {entries_.size() - 1, head};
  }

  InclusionProof prove_inclusion(std::uint64_t leaf_index, std::uint64_t tree_size) const {
    std::shared_lock lock(*mutex_);
    if (tree_size == 0 || tree_size > leaves_.size() || leaf_index >= tree_size)
      throw ParameterError("inclusion proof needs leaf_index < tree_size <= log size");
    std::span<const Digest> prefix(leaves_.data(), tree_size);
    return {leaf_index, tree_size, merkle::inclusion_path(leaf_index, prefix)};
  }

  ConsistencyProof prove_consistency(std::uint64_t old_size, std::uint64_t new_size) const {
    std::shared_lock lock(*mutex_);
    if (old_size == 0 || old_size > new_size || new_size > leaves_.size())
      throw ParameterError("consistency proof needs 0 < old_size <= new_size <= log size");
    std::span<const Digest> prefix(leaves_.data(), new_size);
    return {old_size, new_size, merkle::consistency_proof(old_size, prefix)};
  }

  Digest root(std::uint64_t tree_size) const {
    std::shared_lock lock(*mutex_);
    if (tree_size == 0 || tree_size > leaves_.size()) throw ParameterError("tree size out of range");
    return merkle::root(std::span<const Digest>(leaves_.data(), tree_size));
  }

 private:
  TransparencyLog() = default;

  class DirectoryLock {
   public:
    explicit DirectoryLock(const std::filesystem::path& dir) {
      if (dir.empty()) return;
      fd_ = ::open((dir / ".lock").c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
      if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0) {
        if (fd_ >= 0) ::close(fd_);
        throw IoError("cannot lock log directory " + dir.string());
      }
    }
    ~DirectoryLock() {
      if (fd_ >= 0) {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
      }
    }
    DirectoryLock(const DirectoryLock&) = delete;
    DirectoryLock& operator=(const DirectoryLock&) = delete;

   private:
    int fd_ = -1;
  };

  class File {
   public:
    File(const std::filesystem::path& path, int flags) : path_(path) {
      fd_ = ::open(path.c_str(), flags | O_CLOEXEC, 0644);
      if (fd_ < 0) throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
    }
    ~File() {
      if (fd_ >= 0) ::close(fd_);
    }
    File(const File&) = delete;
    File& operator=(const File&) = delete;

    void truncate(std::uint64_t size) {
      if (::ftruncate(fd_, static_cast<off_t>(size)) != 0) fail("truncate");
      if (::lseek(fd_, static_cast<off_t>(size), SEEK_SET) < 0) fail("seek");
    }
    void write(std::string_view data) {
      while (!data.empty()) {
        ssize_t n = ::write(fd_, data.data(), data.size());
        if (n < 0) {
          if (errno == EINTR) continue;
          fail("write");
        }
        data.remove_prefix(static_cast<std::size_t>(n));
      }
    }
    void sync() {
      if (::fsync(fd_) != 0) fail("fsync");
    }

   private:
    [[noreturn]] void fail(const char* op) {
      throw IoError(std::string(op) + " failed on " + path_.string() + ": " + std::strerror(errno));
    }
    std::filesystem::path path_;
    int fd_ = -1;
  };

  static void put_u32(std::string& out, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<char>((v >> shift) & 0xff));
  }

  static std::optional<std::uint32_t> get_u32(const std::string& in, std::size_t& pos) {
    if (pos + 4 > in.size()) return std::nullopt;
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | static_cast<std::uint8_t>(in[pos + i]);
    pos += 4;
    return v;
  }

  static std::optional<std::string> get_blob(const std::string& in, std::size_t& pos) {
    std::size_t start = pos;
    auto len = get_u32(in, pos);
    if (!len || pos + *len > in.size()) {
      pos = start;
      return std::nullopt;
    }
    std::string out = in.substr(pos, *len);
    pos += *len;
    return out;
  }

  static std::string encode_entry_record(const LogEntry& e) {
    std::string rec;
    put_u32(rec, static_cast<std::uint32_t>(e.statement_bytes.size()));
    rec += e.statement_bytes;
    put_u32(rec, static_cast<std::uint32_t>(e.appended_at.size()));
    rec += e.appended_at;
    return rec;
  }

  void persist(const LogEntry& e, const SignedTreeHead& head) {
    const std::string entry_rec = encode_entry_record(e);
    std::string head_rec;
    const std::string head_json = head_to_json(head).dump();
    put_u32(head_rec, static_cast<std::uint32_t>(head_json.size()));
    head_rec += head_json;

    File entries(dir_ / "entries.log", O_WRONLY);
    entries.truncate(committed_entry_bytes_);
    const std::size_t half = entry_rec.size() / 2;
    entries.write(std::string_view(entry_rec).substr(0, half));
    hook(AppendStage::kEntryHalfWritten);
    entries.write(std::string_view(entry_rec).substr(half));
    entries.sync();
    hook(AppendStage::kEntryWritten);

    File heads(dir_ / "heads.log", O_WRONLY);
    heads.truncate(committed_head_bytes_);
    const std::size_t head_half = head_rec.size() / 2;
    heads.write(std::string_view(head_rec).substr(0, head_half));
    hook(AppendStage::kHeadHalfWritten);
    heads.write(std::string_view(head_rec).substr(head_half));
    heads.sync();

    committed_entry_bytes_ += entry_rec.size();
    committed_head_bytes_ += head_rec.size();
  }

  void hook(AppendStage stage) {
    if (fault_hook_) fault_hook_(stage);
  }

  void load() {
    const std::string head_data = read_file(dir_ / "heads.log");
    std::size_t pos = 0;
    while (auto blob = get_blob(head_data, pos)) {
      nlohmann::json doc = nlohmann::json::parse(*blob, nullptr, false);
      if (doc.is_discarded()) throw IoError("heads.log holds a malformed record at byte " + std::to_string(pos));
      try {
        heads_.push_back(head_from_json(doc));
      } catch (const ParseError& e) {
        throw IoError(std::string("heads.log: ") + e.what());
      }
      committed_head_bytes_ = pos;
    }
    const std::uint64_t committed = heads_.empty() ? 0 : heads_.back().tree_size;

    const std::string entry_data = read_file(dir_ / "entries.log");
    pos = 0;
    while (entries_.size() < committed) {
      std::size_t start = pos;
      auto statement = get_blob(entry_data, pos);
      auto stamp = statement ? get_blob(entry_data, pos) : std::nullopt;
      if (!statement || !stamp) {
        pos = start;
        break;
      }
      LogEntry e;
      e.index = entries_.size();
      e.statement_bytes = std::move(*statement);
      e.appended_at = std::move(*stamp);
      e.leaf_hash = merkle::leaf_hash(e.statement_bytes);
      e.statement_digest = sha256(e.statement_bytes);
      leaves_.push_back(e.leaf_hash);
      entries_.push_back(std::move(e));
    }
    committed_entry_bytes_ = pos;
    if (entries_.size() < committed)
      throw IoError("entries.log holds " + std::to_string(entries_.size()) + " entries but the journal commits " +
                    std::to_string(committed));
    if (committed > 0 && merkle::root(leaves_) != heads_.back().root_hash)
      recovery_issue_ = "recomputed root does not match the last journaled head";
  }

  std::filesystem::path dir_;
  std::optional<KeyPair> signer_;
  PublicKey public_key_;
  std::vector<LogEntry> entries_;
  std::vector<Digest> leaves_;
  std::vector<SignedTreeHead> heads_;
  std::uint64_t committed_entry_bytes_ = 0;
  std::uint64_t committed_head_bytes_ = 0;
  std::string recovery_issue_;
  AppendFaultHook fault_hook_;
  std::unique_ptr<std::shared_mutex> mutex_ = std::make_unique<std::shared_mutex>();
};

// ---- audit -----------------------------------------------------------------

struct AuditReport {
  bool clean = true;
  // Index into the supplied history of the (first) head involved.
  std::optional<std::size_t> violation_at;
  std::string detail;
  std::size_t consistency_checks = 0;
};

// Checks every head's signature, pairwise consistency along the history, and
// that each head is a prefix of the log as it is now. The latest root is
// recomputed from raw entries.
inline AuditReport audit(const TransparencyLog& log, const std::vector<SignedTreeHead>& history) {
  AuditReport report;
  auto violation = [&](std::size_t at, std::string detail) {
    report.clean = false;
    report.violation_at = at;
    report.detail = std::move(detail);
    return report;
  };

  if (!log.recovery_issue().empty()) return violation(0, log.recovery_issue());
  const std::uint64_t size = log.size();
  if (auto latest = log.latest_head(); latest && log.root(size) != latest->root_hash)
    return violation(0, "latest journaled head does not match entries");

  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& h = history[i];
    if (!verify_head_signature(h, log.public_key())) return violation(i, "head signature invalid");
    if (h.tree_size == 0 || h.tree_size > size) return violation(i, "head size outside the log");
    if (i > 0) {
      const auto& prev = history[i - 1];
      if (prev.tree_size > h.tree_size) return violation(i - 1, "history not ordered by tree size");
      ++report.consistency_checks;
      if (!verify_consistency(prev, h, log.prove_consistency(prev.tree_size, h.tree_size)))
        return violation(i - 1, "heads " + std::to_string(i - 1) + " and " + std::to_string(i) + " are inconsistent");
    }
    SignedTreeHead current;
    current.tree_size = size;
    current.root_hash = log.root(size);
    ++report.consistency_checks;
    if (!verify_consistency(h, current, log.prove_consistency(h.tree_size, size)))
      return violation(i, "head " + std::to_string(i) + " is not a prefix of the current log");
  }
  return report;
}

}  // namespace modeltrust
