#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <future>
#include <istream>
#include <span>
#include <thread>
#include <vector>

#include "modeltrust/errors.hpp"
#include "modeltrust/merkle.hpp"
#include "modeltrust/sha256.hpp"

namespace modeltrust {

inline constexpr std::uint64_t kDefaultChunkSize = 4ull << 20;
inline constexpr std::uint64_t kMinChunkSize = 4096;

// Whole-stream SHA-256 plus the RFC 6962 root over fixed-size chunks.
struct ArtifactDigest {
  Digest full_sha256{};
  Digest merkle_root{};
  std::uint64_t chunk_size = kDefaultChunkSize;
  std::uint64_t chunk_count = 1;
  std::uint64_t total_length = 0;

  friend bool operator==(const ArtifactDigest&, const ArtifactDigest&) = default;
};

struct MerkleProofPath {
  std::uint64_t leaf_index = 0;
  std::uint64_t tree_size = 1;
  std::vector<Digest> siblings;

  friend bool operator==(const MerkleProofPath&, const MerkleProofPath&) = default;
};

struct HashOptions {
  // 0 selects std::thread::hardware_concurrency().
  unsigned threads = 0;
  // Upper bound on a single istream::read call; only affects buffering.
  std::size_t read_granularity = 1 << 20;
};

// Digest together with every chunk's leaf hash, for proof generation.
struct ChunkedDigest {
  ArtifactDigest digest;
  std::vector<Digest> leaves;
};

inline void validate_chunk_size(std::uint64_t chunk_size) {
  if (chunk_size < kMinChunkSize || !merkle::is_power_of_two(chunk_size))
    throw ParameterError("chunk size must be a power of two >= 4096, got " +
                         std::to_string(chunk_size));
}

inline std::uint64_t expected_chunk_count(std::uint64_t total_length, std::uint64_t chunk_size) {
  return total_length == 0 ? 1 : (total_length + chunk_size - 1) / chunk_size;
}

inline ChunkedDigest hash_artifact_with_leaves(std::istream& in,
                                               std::uint64_t chunk_size = kDefaultChunkSize,
                                               HashOptions options = {}) {
  validate_chunk_size(chunk_size);
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  const std::size_t granularity = std::max<std::size_t>(1, options.read_granularity);

  Sha256 full;
  ChunkedDigest result;
  result.digest.chunk_size = chunk_size;

  // One batch holds up to `threads` chunks; the whole-stream hash is fed
  // sequentially while the batch's leaves are hashed concurrently.
  std::vector<std::vector<std::uint8_t>> batch(threads);
  bool eof = false;
  while (!eof) {
    std::size_t filled = 0;
    for (; filled < threads && !eof; ++filled) {
      auto& buf = batch[filled];
      buf.resize(chunk_size);
      std::size_t have = 0;
      while (have < chunk_size) {
        std::size_t want = std::min<std::size_t>(granularity, chunk_size - have);
        in.read(reinterpret_cast<char*>(buf.data() + have), static_cast<std::streamsize>(want));
        std::size_t got = static_cast<std::size_t>(in.gcount());
        have += got;
        if (got < want) {
          if (in.bad()) throw IoError("read error while hashing artifact");
          eof = true;
          break;
        }
      }
      buf.resize(have);
      if (have == 0) break;
    }
    // A trailing empty read is not a chunk.
    while (filled > 0 && batch[filled - 1].empty()) --filled;
    if (filled == 0) break;

    const std::size_t base = result.leaves.size();
    result.leaves.resize(base + filled);
    std::vector<std::future<void>> jobs;
    for (std::size_t i = 1; i < filled; ++i) {
      jobs.push_back(std::async(std::launch::async, [&, i] {
        result.leaves[base + i] = merkle::leaf_hash(batch[i]);
      }));
    }
    result.leaves[base] = merkle::leaf_hash(batch[0]);
    for (std::size_t i = 0; i < filled; ++i) {
      full.update(batch[i]);
      result.digest.total_length += batch[i].size();
    }
    for (auto& j : jobs) j.get();
  }

  if (result.leaves.empty()) result.leaves.push_back(merkle::leaf_hash(std::span<const std::uint8_t>{}));
  result.digest.full_sha256 = full.finish();
  result.digest.chunk_count = result.leaves.size();
  result.digest.merkle_root = merkle::root(result.leaves);
  return result;
}

inline ArtifactDigest hash_artifact(std::istream& in, std::uint64_t chunk_size = kDefaultChunkSize,
                                    HashOptions options = {}) {
  return hash_artifact_with_leaves(in, chunk_size, options).digest;
}

inline std::ifstream open_artifact(const std::filesystem::path& path) {
  std::error_code ec;
  if (std::filesystem::is_directory(path, ec)) throw IoError("not a regular file: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open artifact: " + path.string());
  return in;
}

inline ChunkedDigest hash_artifact_with_leaves(const std::filesystem::path& path,
                                               std::uint64_t chunk_size = kDefaultChunkSize,
                                               HashOptions options = {}) {
  validate_chunk_size(chunk_size);
  auto in = open_artifact(path);
  return hash_artifact_with_leaves(in, chunk_size, options);
}

inline ArtifactDigest hash_artifact(const std::filesystem::path& path,
                                    std::uint64_t chunk_size = kDefaultChunkSize,
                                    HashOptions options = {}) {
  return hash_artifact_with_leaves(path, chunk_size, options).digest;
}

inline MerkleProofPath prove_chunk(std::span<const Digest> chunk_hashes, std::uint64_t leaf_index) {
  if (leaf_index >= chunk_hashes.size())
    throw ParameterError("chunk index " + std::to_string(leaf_index) + " out of range for " +
                         std::to_string(chunk_hashes.size()) + " chunks");
  return {leaf_index, chunk_hashes.size(), merkle::inclusion_path(leaf_index, chunk_hashes)};
}

// Throws ParameterError when the path shape is impossible for its
// (leaf_index, tree_size); otherwise answers whether it reproduces `root`.
inline bool verify_chunk(const Digest& root, const Digest& leaf, const MerkleProofPath& path) {
  if (path.tree_size == 0 || path.leaf_index >= path.tree_size)
    throw ParameterError("proof leaf index outside tree");
  if (path.siblings.size() != merkle::inclusion_path_length(path.leaf_index, path.tree_size))
    throw ParameterError("proof has " + std::to_string(path.siblings.size()) +
                         " siblings, expected " +
                         std::to_string(merkle::inclusion_path_length(path.leaf_index, path.tree_size)));
  auto computed = merkle::root_from_inclusion_path(path.leaf_index, path.tree_size, leaf, path.siblings);
  return computed && *computed == root;
}

}  // namespace modeltrust
