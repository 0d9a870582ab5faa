#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bose2d/compare.hpp"
#include "bose2d/gibbs.hpp"
#include "bose2d/model.hpp"

namespace bose2d {

inline constexpr const char* kToolVersion = "1.0.0";

/// One experiment, validated on load. Text is YAML (nested key-value); a
/// JSON document is accepted as well.
struct ExperimentConfig {
  std::string source;  // verbatim text
  std::string sha256;  // of `source`

  ModeSet modes = ModeSet::disk(0.0);
  Potential potential = Potential::zero();
  double kappa = 1.0;
  std::vector<double> temperatures;
  std::vector<double> lambdas;  // empty: λ = 1/T

  EnsembleSpec ensemble{100000, 16, 1};
  bool exact_single_mode = true;
  bool dump_ensemble = false;

  TruncationTolerances truncation;
  std::size_t max_block_dim = 5000;
  std::size_t max_states = 20'000'000;

  std::vector<GapSpec> gaps{{1, 2.0}};
  bool subtracted_gap = true;
  std::map<std::string, double> tolerances;

  std::vector<double> wick_radii{1, 2, 3, 4, 5};
  EnsembleSpec wick_ensemble{100000, 16, 1};

  std::filesystem::path output = "out";

  ComparisonSetup comparison_setup() const;
};

/// Throws ConfigError naming the offending line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string sha256_hex(const std::string& data);

}  // namespace bose2d
