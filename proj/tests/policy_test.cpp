#include <gtest/gtest.h>

#include "modeltrust/policy.hpp"
#include "support/fixtures.hpp"

using namespace modeltrust;

namespace {

std::string sample_policy() {
  return read_file(std::filesystem::path(MODELTRUST_SOURCE_DIR) / "samples" / "policy.json");
}

std::string minimal(const std::string& extra = "") {
  return R"({"trusted_keys": [")" + fixtures::key(1).public_key().hex() +
         R"("], "allowed_dataset_ids": [], "require_log_inclusion": false)" + extra + "}";
}

}  // namespace

TEST(Policy, SampleFileParses) {
  Policy p = parse_policy(sample_policy());
  EXPECT_EQ(p.trusted_keys.size(), 1u);
  EXPECT_NE(p.trusted_keys.find(fixtures::key(1).fingerprint()), nullptr);
  ASSERT_TRUE(p.trusted_log_key.has_value());
  EXPECT_EQ(*p.trusted_log_key, fixtures::key(7).public_key());
  EXPECT_EQ(p.allowed_dataset_ids, (std::set<std::string>{"appstore-malware-2023", "appstore-malware-2024"}));
  EXPECT_FALSE(p.allow_any_dataset);
  EXPECT_EQ(p.required_alignment_policy_version, "align-v3");
  EXPECT_EQ(p.max_parameters, 20'000'000'000ull);
  EXPECT_TRUE(p.require_dataset_commitment);
  EXPECT_TRUE(p.require_log_inclusion);
  EXPECT_EQ(p.max_statement_age, std::chrono::seconds(365 * 86400));
  EXPECT_TRUE(p.require_full_provenance);
  EXPECT_EQ(p.verify_mode, VerifyMode::kWholeFile);
}

TEST(Policy, MisspelledKeyIsNamed) {
  std::string text = sample_policy();
  auto pos = text.find("allowed_dataset_ids");
  text.replace(pos, std::string("allowed_dataset_ids").size(), "allowed_datasets_ids");
  try {
    parse_policy(text);
    FAIL() << "accepted a misspelled key";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), "allowed_datasets_ids");
    EXPECT_NE(std::string(e.what()).find("allowed_datasets_ids"), std::string::npos);
    EXPECT_EQ(e.line(), 4);
  }
}

TEST(Policy, MerkleSampleNeedsPositiveK) {
  EXPECT_THROW(parse_policy(minimal(R"(, "verify_mode": "merkle-sample", "sample_chunks": 0)")), ParseError);
  EXPECT_THROW(parse_policy(minimal(R"(, "verify_mode": "merkle-sample")")), ParseError);
  EXPECT_THROW(parse_policy(minimal(R"(, "sample_chunks": 3)")), ParseError);
  Policy p = parse_policy(minimal(R"(, "verify_mode": "merkle-sample", "sample_chunks": 3)"));
  EXPECT_EQ(p.verify_mode, VerifyMode::kMerkleSample);
  EXPECT_EQ(p.sample_chunks, 3u);

  Policy direct;
  direct.trusted_keys.add(fixtures::key(1).public_key());
  direct.require_log_inclusion = false;
  direct.verify_mode = VerifyMode::kMerkleSample;
  EXPECT_THROW(validate(direct), ParseError);
}

TEST(Policy, FieldErrors) {
  EXPECT_THROW(parse_policy("[]"), ParseError);
  EXPECT_THROW(parse_policy("{"), ParseError);
  EXPECT_THROW(parse_policy(R"({"trusted_keys": [], "allowed_dataset_ids": [], "require_log_inclusion": false})"),
               ParseError);
  EXPECT_THROW(parse_policy(R"({"trusted_keys": ["zz"], "allowed_dataset_ids": []})"), ParseError);
  EXPECT_THROW(parse_policy(minimal(R"(, "max_statement_age": "soon")")), ParseError);
  EXPECT_THROW(parse_policy(minimal(R"(, "max_parameters": -5)")), ParseError);
  EXPECT_THROW(parse_policy(minimal(R"(, "verify_mode": "sometimes")")), ParseError);
  EXPECT_THROW(parse_policy(minimal(R"(, "allow_any_dataset": "yes")")), ParseError);
  // Log inclusion is on by default and then needs the log key.
  EXPECT_THROW(parse_policy(R"({"trusted_keys": [")" + fixtures::key(1).public_key().hex() +
                            R"("], "allowed_dataset_ids": []})"),
               ParseError);
}

TEST(Policy, Durations) {
  EXPECT_EQ(parse_duration("30d"), std::chrono::seconds(30 * 86400));
  EXPECT_EQ(parse_duration("12h"), std::chrono::seconds(12 * 3600));
  EXPECT_EQ(parse_duration("90m"), std::chrono::seconds(90 * 60));
  EXPECT_EQ(parse_duration("3600s"), std::chrono::seconds(3600));
  EXPECT_EQ(parse_duration("3600"), std::chrono::seconds(3600));
  EXPECT_FALSE(parse_duration("").has_value());
  EXPECT_FALSE(parse_duration("d").has_value());
  EXPECT_FALSE(parse_duration("1w").has_value());
}

TEST(Policy, JsonRoundTrip) {
  Policy p = parse_policy(sample_policy());
  Policy back = parse_policy(policy_to_json(p).dump(2));
  EXPECT_EQ(policy_to_json(back), policy_to_json(p));
}
