#pragma once

// Property suites behind `infobif verify`. Each check reports the measured
// worst case next to its threshold.

#include "infobif/curve.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace infobif {

struct CheckResult {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string detail;
};

struct SuiteResult {
  std::string suite;
  std::vector<CheckResult> checks;
  bool pass() const;
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  /// Dataset to use in addition to (euler, gradients) or instead of
  /// (theorem1, theorem3) the built-in random and toy instances.
  std::optional<JointDistribution> data;
  int euler_instances = 1000;
  int gradient_instances = 100;
  Eigen::Index classes = 2;
};

/// Random strictly positive joint with the given shape.
JointDistribution random_joint(Eigen::Index kx, Eigen::Index k, std::mt19937_64& rng);
/// Random strictly positive quantizer (entries bounded away from zero).
Quantizer random_quantizer(Eigen::Index n, Eigen::Index k, std::mt19937_64& rng);
/// Symmetric 2 x 2 joint with concave relevance-compression curves.
JointDistribution concave_toy();

SuiteResult verify_euler(const VerifyOptions& options);
SuiteResult verify_gradients(const VerifyOptions& options);
SuiteResult verify_theorem1(const VerifyOptions& options);
SuiteResult verify_theorem3_suite(const VerifyOptions& options);

/// suite is one of all, euler, gradients, theorem1, theorem3.
std::vector<SuiteResult> run_verify(const std::string& suite, const VerifyOptions& options);

std::string format_table(const std::vector<SuiteResult>& results);

}  // namespace infobif
