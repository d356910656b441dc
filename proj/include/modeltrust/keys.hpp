#pragma once

// Ed25519 keys (libsodium). Fingerprint = SHA-256 of the raw 32-byte public
// key. Key files are canonical JSON:
//   public:  {"algorithm":"ed25519","fingerprint":<hex>,"public_key":<hex>}
//   private: the same plus "seed":<hex of the 32-byte secret seed>

#include <sodium.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "modeltrust/errors.hpp"
#include "modeltrust/sha256.hpp"

namespace modeltrust {

inline constexpr std::size_t kSignatureSize = crypto_sign_BYTES;

class PublicKey {
 public:
  using Raw = std::array<std::uint8_t, crypto_sign_PUBLICKEYBYTES>;

  PublicKey() = default;
  explicit PublicKey(const Raw& raw) : raw_(raw) {}

  static PublicKey from_hex(std::string_view hex) {
    auto bytes = modeltrust::from_hex(hex);
    if (!bytes || bytes->size() != std::tuple_size_v<Raw>) throw KeyError("public key must be 32 bytes of lowercase hex");
    Raw raw{};
    std::copy(bytes->begin(), bytes->end(), raw.begin());
    return PublicKey(raw);
  }

  const Raw& raw() const { return raw_; }
  std::string hex() const { return to_hex(raw_); }
  Digest fingerprint() const { return sha256(raw_); }

  bool verify(std::span<const std::uint8_t> message, std::span<const std::uint8_t> signature) const {
    ensure_sodium();
    if (signature.size() != kSignatureSize) return false;
    return crypto_sign_verify_detached(signature.data(), message.data(), message.size(), raw_.data()) == 0;
  }

  friend bool operator==(const PublicKey&, const PublicKey&) = default;

 private:
  Raw raw_{};
};

class KeyPair {
 public:
  using Seed = std::array<std::uint8_t, crypto_sign_SEEDBYTES>;

  static KeyPair generate() {
    ensure_sodium();
    Seed seed{};
    randombytes_buf(seed.data(), seed.size());
    KeyPair kp = from_seed(seed);
    sodium_memzero(seed.data(), seed.size());
    return kp;
  }

  static KeyPair from_seed(const Seed& seed) {
    ensure_sodium();
    KeyPair kp;
    PublicKey::Raw pk{};
    crypto_sign_seed_keypair(pk.data(), kp.secret_.data(), seed.data());
    kp.public_ = PublicKey(pk);
    return kp;
  }

  KeyPair(const KeyPair&) = default;
  KeyPair& operator=(const KeyPair&) = default;
  ~KeyPair() { sodium_memzero(secret_.data(), secret_.size()); }

  const PublicKey& public_key() const { return public_; }
  Digest fingerprint() const { return public_.fingerprint(); }

  // Deterministic: the same key and message always give the same signature.
  std::vector<std::uint8_t> sign(std::span<const std::uint8_t> message) const {
    std::vector<std::uint8_t> sig(kSignatureSize);
    crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), secret_.data());
    return sig;
  }

  Seed seed() const {
    Seed s{};
    crypto_sign_ed25519_sk_to_seed(s.data(), secret_.data());
    return s;
  }

 private:
  KeyPair() = default;

  PublicKey public_;
  std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> secret_{};
};

// Trusted verification keys indexed by fingerprint.
class Keyring {
 public:
  Keyring() = default;
  Keyring(std::initializer_list<PublicKey> keys) {
    for (const auto& k : keys) add(k);
  }

  void add(const PublicKey& key) { keys_[key.fingerprint()] = key; }
  const PublicKey* find(const Digest& fingerprint) const {
    auto it = keys_.find(fingerprint);
    return it == keys_.end() ? nullptr : &it->second;
  }
  bool empty() const { return keys_.empty(); }
  std::size_t size() const { return keys_.size(); }
  auto begin() const { return keys_.begin(); }
  auto end() const { return keys_.end(); }

 private:
  std::map<Digest, PublicKey> keys_;
};

inline std::string encode_public_key(const PublicKey& key) {
  nlohmann::json doc = {{"algorithm", "ed25519"}, {"fingerprint", to_hex(key.fingerprint())}, {"public_key", key.hex()}};
  return doc.dump();
}

inline std::string encode_private_key(const KeyPair& key) {
  auto seed = key.seed();
  nlohmann::json doc = {{"algorithm", "ed25519"},
                        {"fingerprint", to_hex(key.fingerprint())},
                        {"public_key", key.public_key().hex()},
                        {"seed", to_hex(seed)}};
  sodium_memzero(seed.data(), seed.size());
  return doc.dump();
}

namespace detail {

inline nlohmann::json parse_key_doc(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw KeyError("key file is not a JSON object");
  if (doc.value("algorithm", "") != "ed25519") throw KeyError("unsupported key algorithm");
  for (const char* k : {"fingerprint", "public_key"})
    if (!doc.contains(k) || !doc[k].is_string()) throw KeyError(std::string("key file lacks '") + k + "'");
  return doc;
}

inline void check_fingerprint(const nlohmann::json& doc, const PublicKey& key) {
  if (doc["fingerprint"].get<std::string>() != to_hex(key.fingerprint()))
    throw KeyError("key fingerprint does not match public key");
}

}  // namespace detail

inline PublicKey decode_public_key(const std::string& text) {
  auto doc = detail::parse_key_doc(text);
  auto key = PublicKey::from_hex(doc["public_key"].get<std::string>());
  detail::check_fingerprint(doc, key);
  return key;
}

inline KeyPair decode_private_key(const std::string& text) {
  auto doc = detail::parse_key_doc(text);
  if (!doc.contains("seed") || !doc["seed"].is_string()) throw KeyError("not a private key file");
  auto seed_bytes = from_hex(doc["seed"].get<std::string>());
  if (!seed_bytes || seed_bytes->size() != crypto_sign_SEEDBYTES) throw KeyError("seed must be 32 bytes of hex");
  KeyPair::Seed seed{};
  std::copy(seed_bytes->begin(), seed_bytes->end(), seed.begin());
  KeyPair kp = KeyPair::from_seed(seed);
  sodium_memzero(seed.data(), seed.size());
  if (kp.public_key().hex() != doc["public_key"].get<std::string>())
    throw KeyError("seed does not derive the recorded public key");
  detail::check_fingerprint(doc, kp.public_key());
  return kp;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read error on " + path.string());
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  out.flush();
  if (!out) throw IoError("write error on " + path.string());
}

inline PublicKey load_public_key(const std::filesystem::path& path) { return decode_public_key(read_file(path)); }
inline KeyPair load_private_key(const std::filesystem::path& path) { return decode_private_key(read_file(path)); }

}  // namespace modeltrust
