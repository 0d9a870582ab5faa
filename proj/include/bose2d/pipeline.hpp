#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "bose2d/classical.hpp"
#include "bose2d/compare.hpp"
#include "bose2d/config.hpp"

namespace bose2d {

/// "%.17g" formatting used for every float in CSV output.
std::string format_double(double x);

/// First line of every CSV artifact: tool version and config hash.
std::string header_line(const std::string& config_sha256);

struct SweepResult {
  std::vector<ComparisonRow> rows;
  Verdict verdict;
};

/// Writes comparison.csv, verdict.json, gibbs_summary.csv (and
/// ensemble.csv when configured) into `out`.
SweepResult run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out);

/// gibbs_summary.csv only (interacting state per temperature).
std::vector<ComparisonRow> run_quantum_exact(const ExperimentConfig& cfg, const std::filesystem::path& out);

/// classical_summary.csv (z and one-body moments), optional ensemble.csv.
ClassicalSide run_classical_sample(const ExperimentConfig& cfg, const std::filesystem::path& out);

/// wick_check.csv on disks of the configured radii.
WickReport run_wick_check(const ExperimentConfig& cfg, const std::filesystem::path& out);

/// Re-reads comparison.csv in `dir`, writes verdict.json there. Throws
/// UsageError when comparison.csv is missing.
Verdict run_report(const std::filesystem::path& dir);

// Serialization pieces, exposed for tests.
std::string comparison_csv(const std::vector<ComparisonRow>& rows, const std::string& config_sha256,
                           const std::map<std::string, double>& tolerances);
std::string gibbs_summary_csv(const std::vector<ComparisonRow>& rows, const std::string& config_sha256);
std::string verdict_json(const Verdict& verdict, const std::string& config_sha256, std::size_t modes);
std::string ensemble_csv(const WeightedEnsemble& ensemble, const std::string& config_sha256);

struct ParsedComparison {
  std::vector<ComparisonRow> rows;
  std::map<std::string, double> tolerances;
  std::string config_sha256;
};
ParsedComparison parse_comparison_csv(const std::string& text);

}  // namespace bose2d
