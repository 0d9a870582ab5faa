#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bose2d/fock.hpp"
#include "bose2d/model.hpp"

namespace bose2d {

struct GibbsParams {
  double temperature = 1.0;
  double lambda = 0.0;
  double nu = 0.0;
  double e0 = 0.0;
  double kappa = 1.0;
};

/// Truncated Fock space: sectors 0..max_particles, per-mode occupation caps.
struct Truncation {
  std::vector<int> caps;
  int max_particles = 0;
};

struct GibbsOptions {
  /// Keep sector bases and eigenvectors (needed for the density-matrix and
  /// free-energy-functional routes; memory grows with the truncation).
  bool keep_states = false;
  /// Reduced density matrices Γ^(k) to accumulate during the solve.
  std::vector<int> orders;
  std::size_t max_block_dim = 5000;
  std::size_t max_states = 20'000'000;
};

/// Eigenpairs of H_λ on one (particle number, momentum) block.
struct SpectralBlock {
  int particles = 0;
  Mode momentum;
  std::vector<std::size_t> states;  // indices into the sector basis
  Eigen::VectorXd energies;
  Eigen::MatrixXd vectors;  // empty unless keep_states
};

struct GibbsSolution {
  GibbsParams params;
  Truncation truncation;
  std::vector<SectorBasis> sectors;  // by particle number, only with keep_states
  std::vector<SpectralBlock> blocks;  // sector order, then momentum order

  double log_z = 0.0;
  double free_energy = 0.0;  // −T log Z + E₀
  double mean_particles = 0.0;
  std::vector<double> sector_shares;  // probability of each particle number
  double top_sector_share = 0.0;
  std::vector<double> boundary_shares;  // P(n_m = cap_m) per mode
  std::map<int, Eigen::MatrixXd> reduced;  // Γ^(k) for the requested orders
  std::size_t total_states = 0;
  std::size_t largest_block = 0;

  double partition_function() const;
  /// Gibbs probability of eigenstate j in block b.
  double probability(std::size_t block, Eigen::Index j) const;
};

/// Free-gas truncation start: zero mode ⌈8T/κ⌉, others max(4, ⌈8T/(|k|²+κ)⌉).
Truncation initial_truncation(const ModeSet& modes, double kappa, double temperature);

/// Gibbs state at explicit (T, λ, ν, E₀).
GibbsSolution gibbs_state_at(const ModeSet& modes, const Potential& w, const GibbsParams& params,
                             const Truncation& truncation, const GibbsOptions& options = {});

/// Gibbs state with ν and E₀ taken from coupling_schedule.
GibbsSolution gibbs_state(const ModeSet& modes, const Potential& w, double kappa, double temperature,
                          double lambda, const Truncation& truncation, const GibbsOptions& options = {});

/// T Σ log(1 − exp(−(|k|²+κ)/T)), exact for λ = 0, ν = −κ.
double free_energy_noninteracting(const ModeSet& modes, double kappa, double temperature);

/// Bose–Einstein Γ^(1) of the free gas, diagonal in the mode basis.
Eigen::MatrixXd free_one_body_density(const ModeSet& modes, double kappa, double temperature);

/// Sector-block state Σ p_j |ψ_j⟩⟨ψ_j|, vectors expressed in the block bases
/// of a GibbsSolution (columns orthonormal).
struct SpectralState {
  std::vector<Eigen::MatrixXd> vectors;
  std::vector<Eigen::VectorXd> probabilities;
};

SpectralState gibbs_spectral_state(const GibbsSolution& solution);
/// Same eigenbasis, Boltzmann weights at another temperature.
SpectralState thermal_spectral_state(const GibbsSolution& solution, double temperature);

/// tr[(H_λ − νN)Γ] + T tr[Γ log Γ] + E₀, with 0 log 0 = 0.
double free_energy_functional(const SpectralState& state, const GibbsSolution& solution);

struct DensityMatrix {
  int order = 0;
  Eigen::MatrixXd matrix;  // on enumerate_sector(modes, order)

  double trace() const { return matrix.trace(); }
};

/// Γ^(k) by normal-ordered correlators,
/// ⟨e_α|Γ^(k)|e_β⟩ = (∏ α_m! β_m!)^{-1/2} tr[(a†)^β a^α Γ].
/// Uses stored eigenvectors when present, otherwise the cached matrix.
DensityMatrix reduced_density_matrix(const GibbsSolution& solution, const ModeSet& modes, int order);

/// Dense density block Γ_n in the sector occupation basis (needs keep_states).
Eigen::MatrixXd sector_density(const GibbsSolution& solution, int particles);

/// Symmetric partial trace of an n-sector operator down to k particles.
Eigen::MatrixXd partial_trace_reduction(const Eigen::MatrixXd& block, const SectorBasis& basis,
                                        const ModeSet& modes, int order);

/// Γ^(k) = Σ_n C(n,k) tr_{n→k} Γ_n, the independent route.
DensityMatrix reduced_by_partial_trace(const GibbsSolution& solution, const ModeSet& modes, int order);

struct TruncationTolerances {
  double eps_z = 1e-8;
  double eps_tail = 1e-10;
  double growth = 1.5;
  int max_cap = 20000;
  int max_iterations = 40;
};

struct TruncationReport {
  Truncation truncation;
  bool converged = false;
  int iterations = 0;
  std::vector<double> log_z_history;
  std::string diagnostics;
  GibbsSolution solution;
};

/// Grows caps geometrically until tails fall below eps_tail and successive
/// Z agree within eps_z. Throws TruncationError when the budget runs out.
TruncationReport truncation_control_at(const ModeSet& modes, const Potential& w, const GibbsParams& params,
                                       const TruncationTolerances& tolerances,
                                       const GibbsOptions& options = {});

TruncationReport truncation_control(const ModeSet& modes, const Potential& w, double kappa,
                                    double temperature, double lambda,
                                    const TruncationTolerances& tolerances = {},
                                    const GibbsOptions& options = {});

}  // namespace bose2d
