#include "bose2d/classical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "bose2d/errors.hpp"
#include "bose2d/fock.hpp"

namespace bose2d {

FieldSample sample_free_field(const ModeSet& modes, double kappa, Engine& stream) {
  if (!(kappa > 0.0)) throw DomainError("kappa must be positive");
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  FieldSample u(modes.size());
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const double re = gauss(stream);
    const double im = gauss(stream);
    u[i] = Complex(re, im) / std::sqrt(modes[i].kinetic() + kappa);
  }
  return u;
}

InteractionKernel::InteractionKernel(const ModeSet& host, const ModeSet& active, const Potential& w,
                                     double kappa)
    : InteractionKernel(host, active, w, kappa, counterterm_density(active, kappa)) {}

InteractionKernel::InteractionKernel(const ModeSet& host, const ModeSet& active, const Potential& w,
                                     double kappa, double counterterm)
    : host_size_(host.size()), counterterm_(counterterm) {
  if (!(kappa > 0.0)) throw DomainError("kappa must be positive");
  if (!active.is_subset_of(host)) throw UsageError("active mode set must be a subset of the host set");
  transfers_ = active.transfers();
  weights_.reserve(transfers_.size());
  for (const Mode& q : transfers_) weights_.push_back(w(q));
  zero_transfer_ = static_cast<std::size_t>(
      std::lower_bound(transfers_.begin(), transfers_.end(), Mode{0, 0}) - transfers_.begin());

  std::vector<std::size_t> host_index;
  for (const Mode& m : active) host_index.push_back(*host.index_of(m));
  pairs_.reserve(active.size() * active.size());
  for (std::size_t a = 0; a < active.size(); ++a) {
    for (std::size_t b = 0; b < active.size(); ++b) {
      const Mode q = active[a] - active[b];
      const auto t = static_cast<std::size_t>(
          std::lower_bound(transfers_.begin(), transfers_.end(), q) - transfers_.begin());
      pairs_.push_back({host_index[a], host_index[b], t});
    }
  }
}

std::vector<Complex> InteractionKernel::density(std::span<const Complex> u) const {
  if (u.size() != host_size_) throw UsageError("field sample length does not match the mode set");
  std::vector<Complex> rho(transfers_.size(), Complex(0.0, 0.0));
  for (const Pair& p : pairs_) rho[p.transfer] += u[p.upper] * std::conj(u[p.lower]);
  rho[zero_transfer_] -= counterterm_;
  return rho;
}

double InteractionKernel::energy(std::span<const Complex> u) const {
  const auto rho = density(u);
  double e = 0.0;
  for (std::size_t t = 0; t < rho.size(); ++t) e += weights_[t] * std::norm(rho[t]);
  return 0.5 * e;
}

double interaction_energy(std::span<const Complex> u, const ModeSet& modes, const Potential& w,
                          double kappa, std::optional<double> sub_cutoff) {
  const ModeSet active = sub_cutoff ? modes.restricted(*sub_cutoff) : modes;
  return InteractionKernel(modes, active, w, kappa).energy(u);
}

namespace {

void check_spec(const EnsembleSpec& spec) {
  if (spec.samples == 0) throw UsageError("ensemble needs at least one sample");
  if (spec.streams == 0) throw UsageError("ensemble needs at least one stream");
  if (spec.streams > spec.samples) throw UsageError("more streams than samples");
}

std::vector<std::size_t> stream_offsets(const EnsembleSpec& spec) {
  std::vector<std::size_t> begin(spec.streams + 1, 0);
  for (std::size_t s = 0; s < spec.streams; ++s) {
    begin[s + 1] = begin[s] + stream_share(spec.samples, spec.streams, s);
  }
  return begin;
}

Estimate mean_and_error(double sum, double sum_sq, std::size_t n) {
  const double mean = sum / static_cast<double>(n);
  if (n < 2) return {mean, 0.0};
  const double var = std::max(0.0, (sum_sq - sum * mean) / static_cast<double>(n - 1));
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

}  // namespace

WeightedEnsemble draw_ensemble(const ModeSet& modes, const Potential& w, double kappa,
                               const EnsembleSpec& spec) {
  check_spec(spec);
  const InteractionKernel kernel(modes, modes, w, kappa);
  WeightedEnsemble ens;
  ens.spec = spec;
  ens.stream_begin = stream_offsets(spec);
  ens.samples.resize(spec.samples);
  ens.energies.resize(spec.samples);
  ens.weights.resize(spec.samples);

  const auto streams = static_cast<long>(spec.streams);
#pragma omp parallel for schedule(dynamic)
  for (long s = 0; s < streams; ++s) {
    Engine engine = make_stream(spec.seed, static_cast<std::uint64_t>(s));
    for (std::size_t i = ens.stream_begin[s]; i < ens.stream_begin[s + 1]; ++i) {
      ens.samples[i] = sample_free_field(modes, kappa, engine);
      ens.energies[i] = kernel.energy(ens.samples[i]);
      ens.weights[i] = std::exp(-ens.energies[i]);
    }
  }
  return ens;
}

Estimate estimate_partition_z(const WeightedEnsemble& ensemble) {
  if (ensemble.size() == 0) throw UsageError("cannot estimate z from an empty ensemble");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double x : ensemble.weights) {
    sum += x;
    sum_sq += x * x;
  }
  return mean_and_error(sum, sum_sq, ensemble.size());
}

namespace {

struct MomentAccumulator {
  Eigen::MatrixXcd weighted;
  double weight_sum = 0.0;
};

// c_n(u) = √(k!/∏ n_m!) ∏ û(m)^{n_m}
Eigen::VectorXcd sector_coefficients(const SectorBasis& basis, std::span<const Complex> u, int order) {
  Eigen::VectorXcd c(static_cast<Eigen::Index>(basis.size()));
  const double log_kfact = std::lgamma(order + 1.0);
  for (std::size_t i = 0; i < basis.size(); ++i) {
    Complex prod(1.0, 0.0);
    double log_denominator = 0.0;
    const Occupation& occ = basis[i];
    for (std::size_t m = 0; m < occ.size(); ++m) {
      for (int r = 0; r < occ[m]; ++r) prod *= u[m];
      log_denominator += std::lgamma(occ[m] + 1.0);
    }
    c(static_cast<Eigen::Index>(i)) = std::exp(0.5 * (log_kfact - log_denominator)) * prod;
  }
  return c;
}

std::vector<MomentAccumulator> accumulate_moments(const WeightedEnsemble& ens, int order,
                                                  const ModeSet& modes) {
  if (order <= 0) throw UsageError("moment order must be >= 1");
  if (ens.size() == 0) throw UsageError("empty ensemble");
  if (ens.samples.front().size() != modes.size()) {
    throw UsageError("ensemble samples do not match the mode set basis");
  }
  const SectorBasis basis = enumerate_sector(modes, order);
  const auto d = static_cast<Eigen::Index>(basis.size());
  std::vector<MomentAccumulator> acc(ens.streams());
  const auto streams = static_cast<long>(ens.streams());
#pragma omp parallel for schedule(dynamic)
  for (long s = 0; s < streams; ++s) {
    MomentAccumulator& a = acc[static_cast<std::size_t>(s)];
    a.weighted = Eigen::MatrixXcd::Zero(d, d);
    for (std::size_t i = ens.stream_begin[s]; i < ens.stream_begin[s + 1]; ++i) {
      const Eigen::VectorXcd c = sector_coefficients(basis, ens.samples[i], order);
      a.weighted.noalias() += ens.weights[i] * (c * c.adjoint());
      a.weight_sum += ens.weights[i];
    }
  }
  return acc;
}

Eigen::MatrixXcd hermitian_part(const Eigen::MatrixXcd& m) { return 0.5 * (m + m.adjoint()); }

}  // namespace

Eigen::MatrixXcd moment_matrix(const WeightedEnsemble& ensemble, int order, const ModeSet& modes) {
  const auto acc = accumulate_moments(ensemble, order, modes);
  Eigen::MatrixXcd total = Eigen::MatrixXcd::Zero(acc.front().weighted.rows(), acc.front().weighted.cols());
  double wsum = 0.0;
  for (const auto& a : acc) {
    total += a.weighted;
    wsum += a.weight_sum;
  }
  return hermitian_part(total / wsum);
}

std::vector<Eigen::MatrixXcd> stream_moment_matrices(const WeightedEnsemble& ensemble, int order,
                                                     const ModeSet& modes) {
  const auto acc = accumulate_moments(ensemble, order, modes);
  std::vector<Eigen::MatrixXcd> out;
  out.reserve(acc.size());
  for (const auto& a : acc) out.push_back(hermitian_part(a.weighted / a.weight_sum));
  return out;
}

Eigen::MatrixXcd free_field_covariance(const ModeSet& modes, double kappa) {
  if (!(kappa > 0.0)) throw DomainError("kappa must be positive");
  const auto d = static_cast<Eigen::Index>(modes.size());
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) m(i, i) = 1.0 / (modes[static_cast<std::size_t>(i)].kinetic() + kappa);
  return m;
}

SingleModeMoments single_mode_moments(double w0, double kappa) {
  if (!(kappa > 0.0)) throw DomainError("kappa must be positive");
  if (!(w0 >= 0.0)) throw DomainError("w0 must be >= 0");
  // t = |û(0)|² is exponential with rate κ; E^int = ½ w0 (t − 1/κ)²
  const double c = 1.0 / kappa;
  auto density = [&](double t) { return kappa * std::exp(-kappa * t - 0.5 * w0 * (t - c) * (t - c)); };
  boost::math::quadrature::exp_sinh<double> integrator;
  const double z = integrator.integrate(density);
  const double first = integrator.integrate([&](double t) { return t * density(t); });
  return {z, first / z};
}

WickReport wick_cauchy_check(const std::vector<ModeSet>& sequence, const Potential& w, double kappa,
                             const EnsembleSpec& spec) {
  check_spec(spec);
  if (sequence.empty()) throw UsageError("wick check needs at least one mode set");
  for (std::size_t l = 1; l < sequence.size(); ++l) {
    if (!sequence[l - 1].is_subset_of(sequence[l])) {
      throw UsageError("wick check mode sets must be nested (level " + std::to_string(l - 1) +
                       " is not contained in level " + std::to_string(l) + ")");
    }
  }
  const ModeSet& host = sequence.back();
  const std::size_t levels = sequence.size();
  std::vector<InteractionKernel> subtracted;
  std::vector<InteractionKernel> raw;
  for (const ModeSet& s : sequence) {
    subtracted.emplace_back(host, s, w, kappa);
    raw.emplace_back(host, s, w, kappa, 0.0);
  }

  struct Sums {
    std::vector<double> e, e2, r, r2, gap, gap2, dec, dec2, lowest;
  };
  const auto begin = stream_offsets(spec);
  std::vector<Sums> per_stream(spec.streams);
  const auto streams = static_cast<long>(spec.streams);
#pragma omp parallel for schedule(dynamic)
  for (long s = 0; s < streams; ++s) {
    Sums& acc = per_stream[static_cast<std::size_t>(s)];
    for (auto* v : {&acc.e, &acc.e2, &acc.r, &acc.r2, &acc.gap, &acc.gap2, &acc.dec, &acc.dec2}) {
      v->assign(levels, 0.0);
    }
    acc.lowest.assign(levels, std::numeric_limits<double>::infinity());
    Engine engine = make_stream(spec.seed, static_cast<std::uint64_t>(s));
    std::vector<double> energy(levels);
    std::vector<double> gap(levels, 0.0);
    for (std::size_t i = begin[s]; i < begin[s + 1]; ++i) {
      const FieldSample u = sample_free_field(host, kappa, engine);
      for (std::size_t l = 0; l < levels; ++l) {
        energy[l] = subtracted[l].energy(u);
        const double r = raw[l].energy(u);
        acc.e[l] += energy[l];
        acc.e2[l] += energy[l] * energy[l];
        acc.r[l] += r;
        acc.r2[l] += r * r;
        acc.lowest[l] = std::min(acc.lowest[l], energy[l]);
      }
      for (std::size_t l = 1; l < levels; ++l) {
        gap[l] = std::abs(energy[l] - energy[l - 1]);
        acc.gap[l] += gap[l];
        acc.gap2[l] += gap[l] * gap[l];
        if (l >= 2) {
          const double d = gap[l - 1] - gap[l];
          acc.dec[l] += d;
          acc.dec2[l] += d * d;
        }
      }
    }
  }

  Sums total;
  for (auto* v : {&total.e, &total.e2, &total.r, &total.r2, &total.gap, &total.gap2, &total.dec, &total.dec2}) {
    v->assign(levels, 0.0);
  }
  total.lowest.assign(levels, std::numeric_limits<double>::infinity());
  for (const Sums& acc : per_stream) {
    for (std::size_t l = 0; l < levels; ++l) {
      total.e[l] += acc.e[l];
      total.e2[l] += acc.e2[l];
      total.r[l] += acc.r[l];
      total.r2[l] += acc.r2[l];
      total.gap[l] += acc.gap[l];
      total.gap2[l] += acc.gap2[l];
      total.dec[l] += acc.dec[l];
      total.dec2[l] += acc.dec2[l];
      total.lowest[l] = std::min(total.lowest[l], acc.lowest[l]);
    }
  }

  WickReport report;
  for (std::size_t l = 0; l < levels; ++l) {
    WickLevel lv;
    lv.modes = sequence[l].size();
    lv.counterterm = subtracted[l].counterterm();
    lv.subtracted_mean = mean_and_error(total.e[l], total.e2[l], spec.samples);
    lv.raw_mean = mean_and_error(total.r[l], total.r2[l], spec.samples);
    lv.min_energy = total.lowest[l];
    report.all_nonnegative = report.all_nonnegative && lv.min_energy >= 0.0;
    report.levels.push_back(lv);
  }
  for (std::size_t l = 1; l < levels; ++l) {
    WickGap g;
    g.from = l - 1;
    g.to = l;
    g.l1_gap = mean_and_error(total.gap[l], total.gap2[l], spec.samples);
    if (l >= 2) {
      const Estimate dec = mean_and_error(total.dec[l], total.dec2[l], spec.samples);
      g.decrease_z = dec.standard_error > 0.0 ? dec.value / dec.standard_error
                                              : (dec.value > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    } else {
      g.decrease_z = std::numeric_limits<double>::quiet_NaN();
    }
    report.gaps.push_back(g);
  }
  return report;
}

}  // namespace bose2d
