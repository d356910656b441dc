#pragma once

// LLM Scalability Risk Index:
//   LSRI = Phi * (1 - sum_i w_i * f_i(x_i)),   Phi = prod_j max(0, 1 - alpha_j * E_j)
// Each f_i maps a raw operational metric to a unit-interval risk. Everything
// is evaluated in double precision; rounding happens only when printing.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "modeltrust/errors.hpp"

namespace modeltrust::lsri {

inline constexpr double kWeightTolerance = 1e-9;

// Latency in ms: risk rises around the threshold `tau` with slope set by `sigma`.
struct Sigmoid {
  double tau = 100.0;
  double sigma = 15.0;
};
// Throughput in requests/day against industrial scale `lambda`.
struct Exponential {
  double lambda = 1e6;
};
// Parameter count against a hard bound (inclusive).
struct Step {
  double threshold = 20e9;
};
// Cost in currency/day against a budget ceiling.
struct LinearCost {
  double ceiling = 1000.0;
};
// Updates/day against a target frequency.
struct LinearFreq {
  double target = 2.0;
};
// Observed metric is the compliance fraction CFP itself.
struct LinearReg {};

using MappingSpec = std::variant<Sigmoid, Exponential, Step, LinearCost, LinearFreq, LinearReg>;

struct RiskFactor {
  std::string id;
  double weight = 0.0;
  MappingSpec spec;
  double observed = 0.0;
};

struct IntegrityViolation {
  std::string category;
  double magnitude = 0.0;
  double sensitivity = 1.0;
};

struct LsriProfile {
  std::vector<RiskFactor> factors;
  std::vector<IntegrityViolation> violations;
};

struct LsriReport {
  // Keyed by factor id; order of the profile is kept separately.
  std::map<std::string, double> per_factor_risk;
  std::vector<std::string> factor_order;
  double phi = 1.0;
  double raw_score = 0.0;
  double score = 0.0;
};

inline const char* kind_name(const MappingSpec& spec) {
  struct Visitor {
    const char* operator()(const Sigmoid&) const { return "sigmoid"; }
    const char* operator()(const Exponential&) const { return "exponential"; }
    const char* operator()(const Step&) const { return "step"; }
    const char* operator()(const LinearCost&) const { return "linear_cost"; }
    const char* operator()(const LinearFreq&) const { return "linear_freq"; }
    const char* operator()(const LinearReg&) const { return "linear_reg"; }
  };
  return std::visit(Visitor{}, spec);
}

namespace detail {

inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string(what) + " must be finite");
}

inline void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ParameterError(std::string(what) + " must be > 0");
}

inline void require_non_negative(double x) {
  require_finite(x, "observed metric");
  if (x < 0.0) throw DomainError("observed metric must be >= 0");
}

}  // namespace detail

inline double map_sigmoid(const Sigmoid& s, double x_ms) {
  detail::require_positive(s.sigma, "sigma");
  detail::require_finite(s.tau, "tau");
  detail::require_finite(x_ms, "latency");
  return 1.0 / (1.0 + std::exp(-(x_ms - s.tau) / s.sigma));
}

inline double map_exponential(const Exponential& e, double requests_per_day) {
  detail::require_positive(e.lambda, "lambda");
  detail::require_non_negative(requests_per_day);
  return std::exp(-requests_per_day / e.lambda);
}

inline double map_step(const Step& s, double parameters) {
  detail::require_positive(s.threshold, "threshold");
  detail::require_non_negative(parameters);
  return parameters <= s.threshold ? 0.0 : 1.0;
}

inline double map_linear(const LinearCost& c, double cost) {
  detail::require_positive(c.ceiling, "ceiling");
  detail::require_non_negative(cost);
  return std::min(1.0, cost / c.ceiling);
}

inline double map_linear(const LinearFreq& f, double updates_per_day) {
  detail::require_positive(f.target, "target");
  detail::require_non_negative(updates_per_day);
  return std::max(0.0, 1.0 - updates_per_day / f.target);
}

inline double map_linear(const LinearReg&, double cfp) {
  detail::require_non_negative(cfp);
  if (cfp > 1.0) throw DomainError("compliance fraction must be <= 1");
  return 1.0 - cfp;
}

inline double map_risk(const MappingSpec& spec, double x) {
  struct Visitor {
    double x;
    double operator()(const Sigmoid& s) const { return map_sigmoid(s, x); }
    double operator()(const Exponential& e) const { return map_exponential(e, x); }
    double operator()(const Step& s) const { return map_step(s, x); }
    double operator()(const LinearCost& c) const { return map_linear(c, x); }
    double operator()(const LinearFreq& f) const { return map_linear(f, x); }
    double operator()(const LinearReg& r) const { return map_linear(r, x); }
  };
  return std::visit(Visitor{x}, spec);
}

inline void validate(const IntegrityViolation& v) {
  if (!(v.magnitude >= 0.0 && v.magnitude <= 1.0))
    throw ParameterError("violation '" + v.category + "': magnitude must lie in [0,1]");
  if (!(v.sensitivity >= 0.0) || !std::isfinite(v.sensitivity))
    throw ParameterError("violation '" + v.category + "': sensitivity must be >= 0");
}

inline double integrity_multiplier(const std::vector<IntegrityViolation>& violations) {
  double phi = 1.0;
  for (const auto& v : violations) {
    validate(v);
    phi *= std::max(0.0, 1.0 - v.sensitivity * v.magnitude);
  }
  return phi;
}

inline void validate(const LsriProfile& p) {
  if (p.factors.empty()) throw ProfileError("profile needs at least one factor");
  double total = 0.0;
  for (std::size_t i = 0; i < p.factors.size(); ++i) {
    const auto& f = p.factors[i];
    if (f.id.empty()) throw ProfileError("factor " + std::to_string(i) + " has an empty id");
    for (std::size_t j = 0; j < i; ++j)
      if (p.factors[j].id == f.id) throw ProfileError("duplicate factor id '" + f.id + "'");
    if (!(f.weight >= 0.0) || !std::isfinite(f.weight))
      throw ProfileError("factor '" + f.id + "': weight must be >= 0");
    total += f.weight;
  }
  if (std::abs(total - 1.0) > kWeightTolerance)
    throw ProfileError("factor weights sum to " + std::to_string(total) + ", expected 1");
  for (const auto& v : p.violations) validate(v);
}

// Assigns w_i = 1/n to every factor.
inline void set_equal_weights(LsriProfile& p) {
  for (auto& f : p.factors) f.weight = 1.0 / static_cast<double>(p.factors.size());
}

inline LsriReport compute_lsri(const LsriProfile& profile) {
  validate(profile);
  LsriReport report;
  double weighted = 0.0;
  for (const auto& f : profile.factors) {
    double risk = map_risk(f.spec, f.observed);
    report.per_factor_risk[f.id] = risk;
    report.factor_order.push_back(f.id);
    weighted += f.weight * risk;
  }
  report.phi = integrity_multiplier(profile.violations);
  report.raw_score = report.phi * (1.0 - weighted);
  report.score = std::clamp(report.raw_score, 0.0, 1.0);
  return report;
}

struct SweepPoint {
  double observed = 0.0;
  double risk = 0.0;
  double score = 0.0;
};

inline std::vector<SweepPoint> sensitivity_sweep(const LsriProfile& profile, const std::string& factor_id,
                                                 const std::vector<double>& values) {
  auto it = std::find_if(profile.factors.begin(), profile.factors.end(),
                         [&](const RiskFactor& f) { return f.id == factor_id; });
  if (it == profile.factors.end()) throw LookupError("no factor named '" + factor_id + "'");
  const auto index = static_cast<std::size_t>(it - profile.factors.begin());

  std::vector<SweepPoint> out;
  out.reserve(values.size());
  LsriProfile trial = profile;
  for (double x : values) {
    trial.factors[index].observed = x;
    LsriReport r = compute_lsri(trial);
    out.push_back({x, r.per_factor_risk.at(factor_id), r.score});
  }
  return out;
}

struct FactorComparison {
  std::string id;
  std::optional<double> risk_a;
  std::optional<double> risk_b;
};

struct ProfileComparison {
  std::vector<FactorComparison> factors;
  LsriReport a;
  LsriReport b;
  double delta = 0.0;  // score(a) - score(b)
};

// Factors follow profile `a`; ids only present in `b` are appended after.
inline ProfileComparison compare_profiles(const LsriProfile& a, const LsriProfile& b) {
  ProfileComparison cmp;
  cmp.a = compute_lsri(a);
  cmp.b = compute_lsri(b);
  for (const auto& id : cmp.a.factor_order) {
    FactorComparison row{id, cmp.a.per_factor_risk.at(id), std::nullopt};
    if (auto it = cmp.b.per_factor_risk.find(id); it != cmp.b.per_factor_risk.end()) row.risk_b = it->second;
    cmp.factors.push_back(row);
  }
  for (const auto& id : cmp.b.factor_order) {
    if (!cmp.a.per_factor_risk.contains(id))
      cmp.factors.push_back({id, std::nullopt, cmp.b.per_factor_risk.at(id)});
  }
  cmp.delta = cmp.a.score - cmp.b.score;
  return cmp;
}

}  // namespace modeltrust::lsri
