#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bose2d/model.hpp"
#include "bose2d/streams.hpp"

namespace bose2d {

using Complex = std::complex<double>;

/// Fourier amplitudes û(k), one per mode of the owning ModeSet.
using FieldSample = std::vector<Complex>;

/// Draws u ~ μ₀: û(k) = g_k/√(|k|²+κ), g_k standard complex Gaussian.
/// Modes are filled in ModeSet order, real part before imaginary part.
FieldSample sample_free_field(const ModeSet& modes, double kappa, Engine& stream);

/// Wick-ordered quartic energy on an active subset of a host mode set.
///
/// E = ½ Σ_q ŵ(q)|ρ̂(q)|², ρ̂(q) = Σ_{k, k+q ∈ active} û(k+q)·conj(û(k)) − c·1{q=0}.
/// Samples are indexed by the host set, so nested cutoffs can reuse one
/// draw (common random numbers).
class InteractionKernel {
 public:
  /// c = counterterm_density(active, κ).
  InteractionKernel(const ModeSet& host, const ModeSet& active, const Potential& w, double kappa);
  /// Explicit counterterm (0 gives the unsubtracted interaction).
  InteractionKernel(const ModeSet& host, const ModeSet& active, const Potential& w, double kappa,
                    double counterterm);

  double energy(std::span<const Complex> u) const;
  /// ρ̂(q) for every transfer, ordered as transfers().
  std::vector<Complex> density(std::span<const Complex> u) const;

  double counterterm() const { return counterterm_; }
  const std::vector<Mode>& transfers() const { return transfers_; }
  std::size_t host_size() const { return host_size_; }

 private:
  struct Pair {
    std::size_t upper;  // host index of k + q
    std::size_t lower;  // host index of k
    std::size_t transfer;
  };

  std::size_t host_size_;
  double counterterm_;
  std::size_t zero_transfer_;
  std::vector<Mode> transfers_;
  std::vector<double> weights_;
  std::vector<Pair> pairs_;
};

/// E^int_K[u] with the sub-cutoff |m| ≤ sub_cutoff (index units) applied to S.
double interaction_energy(std::span<const Complex> u, const ModeSet& modes, const Potential& w,
                          double kappa, std::optional<double> sub_cutoff = std::nullopt);

struct EnsembleSpec {
  std::size_t samples = 0;
  std::size_t streams = 1;
  std::uint64_t seed = 0;
};

/// μ₀ samples with their reweighting factors exp(−E^int) ∈ (0, 1].
struct WeightedEnsemble {
  EnsembleSpec spec;
  std::vector<FieldSample> samples;
  std::vector<double> energies;
  std::vector<double> weights;
  std::vector<std::size_t> stream_begin;  // size streams + 1

  std::size_t size() const { return samples.size(); }
  std::size_t streams() const { return stream_begin.empty() ? 0 : stream_begin.size() - 1; }
};

/// Samples in stream order; bit-identical for equal (spec, parameters)
/// whatever the worker count.
WeightedEnsemble draw_ensemble(const ModeSet& modes, const Potential& w, double kappa,
                               const EnsembleSpec& spec);

struct Estimate {
  double value = 0.0;
  double standard_error = 0.0;
};

/// z = E_{μ₀}[exp(−E^int)] with standard error sd/√n.
Estimate estimate_partition_z(const WeightedEnsemble& ensemble);

/// Self-normalized estimate of E_μ[c_n(u) conj(c_n'(u))] on the k-particle
/// occupation basis of enumerate_sector(modes, k), Hermitian part.
Eigen::MatrixXcd moment_matrix(const WeightedEnsemble& ensemble, int order, const ModeSet& modes);

/// Same estimate computed separately on every stream.
std::vector<Eigen::MatrixXcd> stream_moment_matrices(const WeightedEnsemble& ensemble, int order,
                                                     const ModeSet& modes);

/// Exact k = 1 moment matrix of the free field: diag 1/(|k|²+κ).
Eigen::MatrixXcd free_field_covariance(const ModeSet& modes, double kappa);

/// Single-mode measure, evaluated by quadrature over t = |û(0)|².
struct SingleModeMoments {
  double z;
  double mean_density;  // E_μ|û(0)|²
};
SingleModeMoments single_mode_moments(double w0, double kappa);

struct WickGap {
  std::size_t from;  // index into the mode-set sequence
  std::size_t to;
  Estimate l1_gap;  // E_{μ₀}|E_from − E_to|
  /// z-score of (gap_prev − gap_this) over paired samples; NaN for the first row.
  double decrease_z = 0.0;
};

struct WickLevel {
  std::size_t modes = 0;
  double counterterm = 0.0;
  Estimate subtracted_mean;
  Estimate raw_mean;  // unsubtracted interaction, same samples
  double min_energy = 0.0;
};

struct WickReport {
  std::vector<WickLevel> levels;
  std::vector<WickGap> gaps;
  bool all_nonnegative = true;
};

/// L¹(μ₀) Cauchy table for nested cutoffs, one draw on the largest set
/// shared by every level.
WickReport wick_cauchy_check(const std::vector<ModeSet>& sequence, const Potential& w, double kappa,
                             const EnsembleSpec& spec);

}  // namespace bose2d
