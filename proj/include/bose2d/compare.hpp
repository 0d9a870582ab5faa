#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bose2d/classical.hpp"
#include "bose2d/gibbs.hpp"
#include "bose2d/model.hpp"

namespace bose2d {

/// (Σ σ_i^p)^{1/p} over singular values; Hermitian input uses |eigenvalues|.
double schatten_norm(const Eigen::MatrixXcd& a, double p);
double schatten_norm(const Eigen::MatrixXd& a, double p);

/// One density-matrix comparison: order k, Schatten exponent p.
struct GapSpec {
  int order = 1;
  double p = 2.0;

  std::string name() const;
};

struct GapValue {
  GapSpec spec;
  Estimate gap;
};

/// Theorem quantities at one temperature.
struct ComparisonRow {
  double temperature = 0.0;
  double lambda = 0.0;
  double nu = 0.0;
  double e0 = 0.0;
  double delta_f = 0.0;  // (F_{λ,T} − F_{0,T}) / T
  Estimate neg_log_z;
  Estimate free_energy_gap;  // |Δ_F + log z|
  std::vector<GapValue> gaps;
  std::optional<Estimate> subtracted_gap;  // g_S1

  // quantum-side summary
  double log_z = 0.0;
  double free_energy = 0.0;
  double free_energy_free = 0.0;
  double mean_particles = 0.0;
  Truncation truncation;
  double top_sector_share = 0.0;
  std::size_t states = 0;
  int truncation_iterations = 0;

  bool ok = true;
  std::string diagnostic;
};

struct ComparisonSetup {
  ModeSet modes = ModeSet::disk(0.0);
  Potential potential = Potential::zero();
  double kappa = 1.0;
  std::vector<double> temperatures;
  std::vector<double> lambdas;  // empty: λ = 1/T
  EnsembleSpec ensemble;
  std::vector<GapSpec> gaps{{1, 2.0}};
  bool subtracted_gap = true;
  /// Use quadrature for z when the set is the single zero mode.
  bool exact_single_mode = true;
  TruncationTolerances truncation;
  std::size_t max_block_dim = 5000;
  std::size_t max_states = 20'000'000;
};

/// Measure-side inputs shared by every row (μ does not depend on T).
struct ClassicalSide {
  Estimate z;
  Estimate neg_log_z;
  bool exact_z = false;
  std::map<int, Eigen::MatrixXcd> moments;
  std::map<int, std::vector<Eigen::MatrixXcd>> stream_moments;
  Eigen::MatrixXcd free_covariance;
};

ClassicalSide classical_side(const ComparisonSetup& setup);

/// Rows for every temperature, ordered by T. A failing row carries its
/// diagnostic instead of aborting the sweep.
std::vector<ComparisonRow> theorem_quantities(const ComparisonSetup& setup, const ClassicalSide& classical);
std::vector<ComparisonRow> theorem_quantities(const ComparisonSetup& setup);

struct SeriesVerdict {
  std::string name;
  std::vector<double> temperatures;
  std::vector<double> values;
  std::vector<double> errors;
  bool monotone = false;
  double terminal = 0.0;
  std::optional<double> tolerance;
  bool terminal_ok = true;
  double slope = 0.0;  // least-squares d log(value) / d log(T)
  bool pass = false;
};

struct Verdict {
  std::vector<SeriesVerdict> quantities;
  bool rows_ok = true;
  bool pass = false;
};

/// Decreasing within error bars (strictly when errors vanish), terminal
/// value against an optional tolerance, and the log-log slope.
SeriesVerdict assess_series(const std::string& name, const std::vector<double>& temperatures,
                            const std::vector<double>& values, const std::vector<double>& errors,
                            std::optional<double> tolerance);

/// Needs at least three rows.
Verdict convergence_report(const std::vector<ComparisonRow>& rows,
                           const std::map<std::string, double>& tolerances);

}  // namespace bose2d
