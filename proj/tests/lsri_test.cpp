#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "modeltrust/lsri_io.hpp"
#include "support/fixtures.hpp"

using namespace modeltrust;
using namespace modeltrust::lsri;

namespace {

// Reference two-decimal figures sit exactly 0.005 away in one case (0.275
// printed as 0.28); allow for binary rounding of that boundary.
constexpr double kSlack = 1e-12;

std::string read_sample(const char* name) {
  return read_file(std::filesystem::path(MODELTRUST_SOURCE_DIR) / "samples" / name);
}

}  // namespace

TEST(Mapping, SigmoidReferenceValues) {
  Sigmoid s{100, 15};
  EXPECT_NEAR(map_sigmoid(s, 85), 0.2689, 5e-5);
  EXPECT_NEAR(map_sigmoid(s, 100), 0.50, 1e-15);
  EXPECT_NEAR(map_sigmoid(s, 40), 0.0180, 5e-5);
  for (double tau : {0.0, 3.5, 100.0, 1e4}) EXPECT_DOUBLE_EQ(map_sigmoid({tau, 7}, tau), 0.5);
}

TEST(Mapping, ExponentialReferenceValues) {
  Exponential e{1e6};
  EXPECT_NEAR(map_exponential(e, 1.2e6), 0.3012, 5e-5);
  EXPECT_NEAR(map_exponential(e, 2.0e6), 0.1353, 5e-5);
  EXPECT_DOUBLE_EQ(map_exponential({42}, 0), 1.0);
}

TEST(Mapping, StepBoundaryIsInclusive) {
  Step s{20e9};
  EXPECT_EQ(map_step(s, 15e9), 0.0);
  EXPECT_EQ(map_step(s, 20e9), 0.0);
  EXPECT_EQ(map_step(s, 25e9), 1.0);
}

TEST(Mapping, Linear) {
  EXPECT_DOUBLE_EQ(map_linear(LinearCost{1000}, 275), 0.275);
  EXPECT_DOUBLE_EQ(map_linear(LinearCost{1000}, 1500), 1.0);
  EXPECT_DOUBLE_EQ(map_linear(LinearFreq{2}, 1.5), 0.25);
  EXPECT_DOUBLE_EQ(map_linear(LinearFreq{2}, 5), 0.0);
  EXPECT_NEAR(map_linear(LinearReg{}, 0.10), 0.90, 1e-15);
}

TEST(Mapping, RejectsBadParameters) {
  EXPECT_THROW(map_sigmoid({100, 0}, 1), ParameterError);
  EXPECT_THROW(map_sigmoid({100, -1}, 1), ParameterError);
  EXPECT_THROW(map_exponential({0}, 1), ParameterError);
  EXPECT_THROW(map_step({-1}, 1), ParameterError);
  EXPECT_THROW(map_linear(LinearCost{0}, 1), ParameterError);
  EXPECT_THROW(map_linear(LinearFreq{0}, 1), ParameterError);
  EXPECT_THROW(map_exponential({1}, -1), DomainError);
  EXPECT_THROW(map_linear(LinearReg{}, 1.2), DomainError);
  EXPECT_THROW(map_sigmoid({100, 15}, NAN), DomainError);
}

TEST(Mapping, OutputsStayInUnitInterval) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> x(0, 1e7), p(0.1, 1e7), u(0, 1);
  for (int i = 0; i < 2000; ++i) {
    for (double v : {map_sigmoid({p(rng), p(rng)}, x(rng)), map_exponential({p(rng)}, x(rng)),
                     map_step({p(rng)}, x(rng)), map_linear(LinearCost{p(rng)}, x(rng)),
                     map_linear(LinearFreq{p(rng)}, x(rng)), map_linear(LinearReg{}, u(rng))}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Mapping, MonotoneInObservedMetric) {
  // Risk rises with latency, size and cost, falls with throughput, update
  // frequency and compliance.
  double prev[6] = {-1, 2, -1, -1, 2, 2};
  for (double x = 0; x <= 300; x += 0.5) {
    double cur[6] = {map_sigmoid({100, 15}, x), map_exponential({50}, x), map_step({120}, x),
                     map_linear(LinearCost{200}, x), map_linear(LinearFreq{150}, x),
                     map_linear(LinearReg{}, x / 300)};
    EXPECT_GE(cur[0], prev[0]);
    EXPECT_LE(cur[1], prev[1]);
    EXPECT_GE(cur[2], prev[2]);
    EXPECT_GE(cur[3], prev[3]);
    EXPECT_LE(cur[4], prev[4]);
    EXPECT_LE(cur[5], prev[5]);
    std::copy(cur, cur + 6, prev);
  }
}

TEST(Integrity, Multiplier) {
  EXPECT_EQ(integrity_multiplier({{"prompt_injection", 0.24, 1}}), 0.76);
  EXPECT_EQ(integrity_multiplier({}), 1.0);
  // Hand evaluation term by term: (1 - 0.5) * (1 - 2*0.3).
  EXPECT_NEAR(integrity_multiplier({{"a", 0.5, 1}, {"b", 0.3, 2}}), 0.5 * 0.4, 1e-15);
  EXPECT_EQ(integrity_multiplier({{"a", 0.8, 2}}), 0.0);
  EXPECT_THROW(integrity_multiplier({{"a", 1.5, 1}}), ParameterError);
  EXPECT_THROW(integrity_multiplier({{"a", 0.5, -1}}), ParameterError);
}

TEST(Score, ScenarioAReference) {
  auto r = compute_lsri(fixtures::scenario_a());
  EXPECT_NEAR(r.score, 0.78, 0.01);
  EXPECT_EQ(r.phi, 1.0);
  const std::map<std::string, double> printed = {{"latency", 0.27},    {"throughput", 0.30}, {"regulatory", 0.20},
                                                 {"model_size", 0.0},  {"update_freq", 0.25}, {"cost", 0.28}};
  for (const auto& [id, f] : printed) EXPECT_LE(std::abs(r.per_factor_risk.at(id) - f), 0.005 + kSlack) << id;
}

TEST(Score, ScenarioBReference) {
  auto r = compute_lsri(fixtures::scenario_b());
  EXPECT_NEAR(r.score, 0.40, 0.01);
  EXPECT_EQ(r.phi, 0.76);
  const std::map<std::string, double> printed = {{"latency", 0.02},   {"throughput", 0.14}, {"regulatory", 0.90},
                                                 {"model_size", 0.0}, {"update_freq", 0.90}, {"cost", 0.85}};
  for (const auto& [id, f] : printed) EXPECT_LE(std::abs(r.per_factor_risk.at(id) - f), 0.005 + kSlack) << id;
}

TEST(Score, ScenarioAUnroundedMatchesDirectEvaluation) {
  // Oracle: the weighted sum written out with the closed-form mappings.
  const double f[] = {1 / (1 + std::exp(-(85.0 - 100) / 15)), std::exp(-1.2), 0.2, 0.0, 0.25, 0.275};
  double sum = 0;
  for (double v : f) sum += v / 6;
  auto r = compute_lsri(fixtures::scenario_a());
  EXPECT_NEAR(r.raw_score, 1 - sum, 1e-12);
  EXPECT_NEAR(r.raw_score, 0.784145, 1e-6);
}

TEST(Score, PhiZeroAnnihilates) {
  auto p = fixtures::scenario_a();
  p.violations.push_back({"backdoor", 1.0, 1.0});
  EXPECT_EQ(compute_lsri(p).score, 0.0);
}

TEST(Score, PhiZeroForcesZeroOnRandomProfiles) {
  std::mt19937_64 rng(20250115);
  std::uniform_real_distribution<double> u(0, 1), big(0, 1e7), pos(0.5, 1e6);
  for (int trial = 0; trial < 250; ++trial) {
    LsriProfile p;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) {
      MappingSpec spec;
      switch (rng() % 6) {
        case 0: spec = Sigmoid{pos(rng), pos(rng)}; break;
        case 1: spec = Exponential{pos(rng)}; break;
        case 2: spec = Step{pos(rng)}; break;
        case 3: spec = LinearCost{pos(rng)}; break;
        case 4: spec = LinearFreq{pos(rng)}; break;
        default: spec = LinearReg{}; break;
      }
      double x = std::holds_alternative<LinearReg>(spec) ? u(rng) : big(rng);
      p.factors.push_back({"f" + std::to_string(i), u(rng) + 0.01, spec, x});
    }
    double total = 0;
    for (auto& f : p.factors) total += f.weight;
    for (auto& f : p.factors) f.weight /= total;
    double wsum = 0;
    for (std::size_t i = 0; i + 1 < p.factors.size(); ++i) wsum += p.factors[i].weight;
    p.factors.back().weight = 1.0 - wsum;

    // Some benign violations, then one that zeroes the product.
    for (int v = 0; v < static_cast<int>(rng() % 3); ++v) p.violations.push_back({"benign", u(rng) * 0.5, 1});
    const double e = 0.5 + u(rng) * 0.5;
    p.violations.push_back({"fatal", e, 1.0 / e + 0.01 + u(rng)});
    std::shuffle(p.violations.begin(), p.violations.end(), rng);

    auto r = compute_lsri(p);
    EXPECT_EQ(r.phi, 0.0);
    EXPECT_EQ(r.score, 0.0);
  }
}

TEST(Score, EqualWeightsGiveMeanRisk) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    LsriProfile p;
    const int n = 1 + static_cast<int>(rng() % 10);
    double mean = 0;
    for (int i = 0; i < n; ++i) {
      double cfp = u(rng);
      p.factors.push_back({"r" + std::to_string(i), 0, LinearReg{}, cfp});
      mean += (1 - cfp) / n;
    }
    set_equal_weights(p);
    EXPECT_NEAR(compute_lsri(p).score, 1 - mean, 1e-12);
  }
}

TEST(Score, ValidationErrors) {
  auto p = fixtures::scenario_a();
  p.factors[0].weight += 0.01;
  EXPECT_THROW(compute_lsri(p), ProfileError);
  EXPECT_THROW(compute_lsri(LsriProfile{}), ProfileError);
  p = fixtures::scenario_a();
  p.factors[1].id = p.factors[0].id;
  EXPECT_THROW(compute_lsri(p), ProfileError);
}

TEST(Sweep, LatencyReferenceTable) {
  auto points = sensitivity_sweep(fixtures::scenario_a(), "latency", {50, 100, 125, 150});
  ASSERT_EQ(points.size(), 4u);
  // Oracle: closed-form sigmoid and the Scenario A mean with latency replaced.
  const double x[] = {50, 100, 125, 150};
  const double others = std::exp(-1.2) + 0.2 + 0.0 + 0.25 + 0.275;
  // The reference figures are the exact values truncated to two decimals.
  const double f_ref[] = {0.03, 0.50, 0.84, 0.96};
  const double s_ref[] = {0.82, 0.74, 0.68, 0.66};
  for (int i = 0; i < 4; ++i) {
    const double f = 1 / (1 + std::exp(-(x[i] - 100) / 15));
    EXPECT_NEAR(points[i].risk, f, 1e-12);
    EXPECT_NEAR(points[i].score, 1 - (f + others) / 6, 1e-12);
    EXPECT_EQ(std::floor(points[i].risk * 100) / 100, f_ref[i]) << x[i];
    EXPECT_EQ(std::floor(points[i].score * 100) / 100, s_ref[i]) << x[i];
    EXPECT_NEAR(points[i].score, s_ref[i], 0.02);
  }
  EXPECT_NEAR(points[2].score, 0.688, 0.001);
  EXPECT_NEAR(points[3].score, 0.668, 0.001);
}

TEST(Sweep, IdentitySubstitutionAndUnknownFactor) {
  auto p = fixtures::scenario_a();
  auto points = sensitivity_sweep(p, "cost", {275});
  EXPECT_DOUBLE_EQ(points[0].score, compute_lsri(p).score);
  EXPECT_THROW(sensitivity_sweep(p, "nope", {1}), LookupError);
}

TEST(Compare, Profiles) {
  auto a = fixtures::scenario_a(), b = fixtures::scenario_b();
  EXPECT_NEAR(compare_profiles(a, b).delta, 0.38, 0.02);
  EXPECT_EQ(compare_profiles(a, a).delta, 0.0);
  auto dead = a;
  dead.violations.push_back({"x", 1, 1});
  EXPECT_DOUBLE_EQ(compare_profiles(a, dead).delta, compute_lsri(a).score);
  auto cmp = compare_profiles(a, b);
  EXPECT_EQ(cmp.factors.size(), 6u);
}

TEST(ProfileFile, SamplesParseToFixtures) {
  auto a = parse_profile(read_sample("scenario_a.json"));
  auto b = parse_profile(read_sample("scenario_b.json"));
  EXPECT_DOUBLE_EQ(compute_lsri(a).raw_score, compute_lsri(fixtures::scenario_a()).raw_score);
  EXPECT_DOUBLE_EQ(compute_lsri(b).raw_score, compute_lsri(fixtures::scenario_b()).raw_score);
}

TEST(ProfileFile, StrictParsing) {
  EXPECT_THROW(parse_profile(R"({"factors":[{"id":"a","mapping":{"kind":"linear_reg"},"observed":0.1,"wieght":1}]})"),
               ParseError);
  EXPECT_THROW(parse_profile(R"({"factors":[{"id":"a","mapping":{"kind":"cubic"},"observed":1}]})"), ParseError);
  EXPECT_THROW(parse_profile(R"({"factors":[{"id":"a","weight":0.5,"mapping":{"kind":"linear_reg"},"observed":0.1},
                                            {"id":"b","mapping":{"kind":"linear_reg"},"observed":0.1}]})"),
               ProfileError);
  try {
    parse_profile("{\n  \"factors\": [\n    oops\n  ]\n}");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(ProfileFile, RoundTrip) {
  auto a = fixtures::scenario_b();
  auto back = profile_from_json(profile_to_json(a));
  EXPECT_EQ(compute_lsri(back).raw_score, compute_lsri(a).raw_score);
  EXPECT_EQ(back.violations.size(), 1u);
}
