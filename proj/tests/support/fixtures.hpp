#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "modeltrust/modeltrust.hpp"

namespace fixtures {

inline std::vector<std::uint8_t> random_bytes(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> out(n);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng());
  return out;
}

// Deterministic keys so failures reproduce.
inline modeltrust::KeyPair key(std::uint8_t tag) {
  modeltrust::KeyPair::Seed seed{};
  seed.fill(tag);
  return modeltrust::KeyPair::from_seed(seed);
}

inline modeltrust::TimePoint at(const char* rfc3339) { return *modeltrust::parse_rfc3339(rfc3339); }

inline modeltrust::ArtifactDigest digest_of(const std::vector<std::uint8_t>& bytes,
                                            std::uint64_t chunk_size = 4096) {
  std::string s(bytes.begin(), bytes.end());
  std::istringstream in(s);
  return modeltrust::hash_artifact(in, chunk_size, {1});
}

inline modeltrust::AttestationStatement statement_for(const std::vector<std::uint8_t>& artifact,
                                                      std::string version = "1.0.0",
                                                      std::uint64_t chunk_size = 4096) {
  modeltrust::AttestationStatement s;
  s.model_name = "sentinel-15b";
  s.model_version = std::move(version);
  s.artifact = digest_of(artifact, chunk_size);
  s.dataset_id = "appstore-malware-2024";
  s.dataset_commitment = modeltrust::sha256(std::string_view("dataset manifest v1"));
  s.alignment_policy_version = "align-v3";
  s.training_timestamp = "2025-01-15T08:30:00Z";
  s.parameter_count = 15'000'000'000ull;
  return s;
}

// Default rubric with the Scenario A observations.
inline modeltrust::lsri::LsriProfile scenario_a() {
  using namespace modeltrust::lsri;
  LsriProfile p;
  p.factors = {
      {"latency", 0, Sigmoid{100, 15}, 85},
      {"throughput", 0, Exponential{1e6}, 1.2e6},
      {"regulatory", 0, LinearReg{}, 0.80},
      {"model_size", 0, Step{20e9}, 15e9},
      {"update_freq", 0, LinearFreq{2}, 1.5},
      {"cost", 0, LinearCost{1000}, 275},
  };
  set_equal_weights(p);
  return p;
}

inline modeltrust::lsri::LsriProfile scenario_b() {
  using namespace modeltrust::lsri;
  LsriProfile p;
  p.factors = {
      {"latency", 0, Sigmoid{100, 15}, 40},
      {"throughput", 0, Exponential{1e6}, 2.0e6},
      {"regulatory", 0, LinearReg{}, 0.10},
      {"model_size", 0, Step{20e9}, 15e9},
      {"update_freq", 0, LinearFreq{2}, 0.2},
      {"cost", 0, LinearCost{1000}, 850},
  };
  p.violations = {{"prompt_injection", 0.24, 1.0}};
  set_equal_weights(p);
  return p;
}

}  // namespace fixtures
