#pragma once

// RFC 6962 Merkle tree hashing shared by artifact chunking and the
// transparency log. Leaves are H(0x00 || data), interior nodes
// H(0x01 || left || right); a tree of n > 1 leaves splits at the largest
// power of two strictly below n. Unpaired nodes are never duplicated.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "modeltrust/errors.hpp"
#include "modeltrust/sha256.hpp"

namespace modeltrust::merkle {

inline constexpr std::uint8_t kLeafPrefix = 0x00;
inline constexpr std::uint8_t kNodePrefix = 0x01;

inline Digest leaf_hash(std::span<const std::uint8_t> data) {
  return Sha256().update(kLeafPrefix).update(data).finish();
}
inline Digest leaf_hash(std::string_view data) { return leaf_hash(as_bytes(data)); }

inline Digest node_hash(const Digest& left, const Digest& right) {
  return Sha256().update(kNodePrefix).update(left).update(right).finish();
}

// Largest power of two strictly less than n (n >= 2).
inline std::uint64_t split_point(std::uint64_t n) {
  std::uint64_t k = 1;
  while ((k << 1) < n) k <<= 1;
  return k;
}

inline bool is_power_of_two(std::uint64_t n) { return n != 0 && (n & (n - 1)) == 0; }

// MTH over a non-empty sequence of leaf hashes.
inline Digest root(std::span<const Digest> leaves) {
  if (leaves.empty()) throw ParameterError("merkle root of an empty leaf set is undefined");
  if (leaves.size() == 1) return leaves[0];
  // Iterative reduction of complete subtrees; equivalent to the recursive
  // definition because every left subtree is a perfect power of two.
  std::vector<Digest> level(leaves.begin(), leaves.end());
  while (level.size() > 1) {
    std::vector<Digest> next;
    next.reserve((level.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) next.push_back(node_hash(level[i], level[i + 1]));
    if (level.size() % 2 == 1) next.push_back(level.back());
    level = std::move(next);
  }
  return level[0];
}

inline std::size_t inclusion_path_length(std::uint64_t index, std::uint64_t size) {
  std::size_t len = 0;
  while (size > 1) {
    std::uint64_t k = split_point(size);
    if (index < k) {
      size = k;
    } else {
      index -= k;
      size -= k;
    }
    ++len;
  }
  return len;
}

namespace detail {

inline void inclusion_path(std::uint64_t index, std::span<const Digest> leaves,
                           std::vector<Digest>& out) {
  if (leaves.size() <= 1) return;
  std::uint64_t k = split_point(leaves.size());
  if (index < k) {
    inclusion_path(index, leaves.subspan(0, k), out);
    out.push_back(root(leaves.subspan(k)));
  } else {
    inclusion_path(index - k, leaves.subspan(k), out);
    out.push_back(root(leaves.subspan(0, k)));
  }
}

inline void consistency_subproof(std::uint64_t m, std::span<const Digest> leaves, bool complete,
                                 std::vector<Digest>& out) {
  const std::uint64_t n = leaves.size();
  if (m == n) {
    if (!complete) out.push_back(root(leaves));
    return;
  }
  std::uint64_t k = split_point(n);
  if (m <= k) {
    consistency_subproof(m, leaves.subspan(0, k), complete, out);
    out.push_back(root(leaves.subspan(k)));
  } else {
    consistency_subproof(m - k, leaves.subspan(k), false, out);
    out.push_back(root(leaves.subspan(0, k)));
  }
}

}  // namespace detail

// Audit path for leaf `index`, ordered from the leaf level upward.
inline std::vector<Digest> inclusion_path(std::uint64_t index, std::span<const Digest> leaves) {
  if (index >= leaves.size()) throw ParameterError("leaf index out of range");
  std::vector<Digest> out;
  detail::inclusion_path(index, leaves, out);
  return out;
}

// Folds `leaf` up `path`. Returns nullopt when the path length is wrong for
// (index, size); the caller decides whether that is an error or a plain no.
inline std::optional<Digest> root_from_inclusion_path(std::uint64_t index, std::uint64_t size,
                                                      const Digest& leaf,
                                                      std::span<const Digest> path) {
  if (index >= size || path.size() != inclusion_path_length(index, size)) return std::nullopt;
  std::uint64_t fn = index;
  std::uint64_t sn = size - 1;
  Digest r = leaf;
  for (const Digest& p : path) {
    if (sn == 0) return std::nullopt;
    if ((fn & 1) || fn == sn) {
      r = node_hash(p, r);
      if (!(fn & 1)) {
        while (!(fn & 1) && fn != 0) {
          fn >>= 1;
          sn >>= 1;
        }
      }
    } else {
      r = node_hash(r, p);
    }
    fn >>= 1;
    sn >>= 1;
  }
  if (sn != 0) return std::nullopt;
  return r;
}

// Consistency proof between the first `old_size` leaves and all of `leaves`.
inline std::vector<Digest> consistency_proof(std::uint64_t old_size, std::span<const Digest> leaves) {
  if (old_size == 0 || old_size > leaves.size())
    throw ParameterError("consistency proof requires 0 < old_size <= new_size");
  std::vector<Digest> out;
  detail::consistency_subproof(old_size, leaves, true, out);
  return out;
}

inline bool verify_consistency(std::uint64_t old_size, std::uint64_t new_size, const Digest& old_root,
                               const Digest& new_root, std::span<const Digest> proof) {
  if (old_size == 0 || old_size > new_size) return false;
  if (old_size == new_size) return proof.empty() && old_root == new_root;
  if (proof.empty()) return false;

  std::vector<Digest> path;
  path.reserve(proof.size() + 1);
  if (is_power_of_two(old_size)) path.push_back(old_root);
  path.insert(path.end(), proof.begin(), proof.end());

  std::uint64_t fn = old_size - 1;
  std::uint64_t sn = new_size - 1;
  while (fn & 1) {
    fn >>= 1;
    sn >>= 1;
  }
  Digest fr = path[0];
  Digest sr = path[0];
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Digest& c = path[i];
    if (sn == 0) return false;
    if ((fn & 1) || fn == sn) {
      fr = node_hash(c, fr);
      sr = node_hash(c, sr);
      if (!(fn & 1)) {
        while (!(fn & 1) && fn != 0) {
          fn >>= 1;
          sn >>= 1;
        }
      }
    } else {
      sr = node_hash(sr, c);
    }
    fn >>= 1;
    sn >>= 1;
  }
  return sn == 0 && fr == old_root && sr == new_root;
}

}  // namespace modeltrust::merkle
