#include "bose2d/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "bose2d/errors.hpp"

namespace bose2d {

namespace {

double log_multinomial(const Occupation& occ) {
  int total = 0;
  double denominator = 0.0;
  for (int n : occ) {
    total += n;
    denominator += std::lgamma(n + 1.0);
  }
  return std::lgamma(total + 1.0) - denominator;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)));
}

// k-particle basis plus the (α, β) pairs allowed by momentum conservation.
struct CorrelatorPlan {
  SectorBasis basis;
  std::vector<std::vector<std::size_t>> partners;  // β indices per α
  std::vector<double> log_factorials;              // Σ log α_m! per state

  CorrelatorPlan(const ModeSet& modes, int order) : basis(enumerate_sector(modes, order)) {
    const auto obs = number_and_momentum(basis, modes);
    partners.resize(basis.size());
    for (std::size_t a = 0; a < basis.size(); ++a) {
      for (std::size_t b = 0; b < basis.size(); ++b) {
        if (obs.momentum[a] == obs.momentum[b]) partners[a].push_back(b);
      }
      double lf = 0.0;
      for (int n : basis[a]) lf += std::lgamma(n + 1.0);
      log_factorials.push_back(lf);
    }
  }
};

// out[α, β] += (∏ α!β!)^{-1/2} Σ_s amp(s) ρ[s, t(s)], where (a†)^β a^α |s⟩ = amp |t(s)⟩.
// `states` are the sorted sector indices spanned by rho.
void accumulate_correlators(const SectorBasis& sector, const std::vector<std::size_t>& states,
                            const Eigen::MatrixXd& rho, const CorrelatorPlan& plan, Eigen::MatrixXd& out) {
  Occupation reduced;
  Occupation target;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const Occupation& occ = sector[states[i]];
    for (std::size_t a = 0; a < plan.basis.size(); ++a) {
      const Occupation& alpha = plan.basis[a];
      double log_amp = 0.0;
      bool alive = true;
      reduced = occ;
      for (std::size_t m = 0; m < occ.size() && alive; ++m) {
        if (alpha[m] == 0) continue;
        if (occ[m] < alpha[m]) {
          alive = false;
          break;
        }
        log_amp += std::lgamma(occ[m] + 1.0) - std::lgamma(occ[m] - alpha[m] + 1.0);
        reduced[m] -= alpha[m];
      }
      if (!alive) continue;
      for (std::size_t b : plan.partners[a]) {
        const Occupation& beta = plan.basis[b];
        double log_amp2 = log_amp;
        target = reduced;
        for (std::size_t m = 0; m < occ.size(); ++m) {
          if (beta[m] == 0) continue;
          log_amp2 += std::lgamma(reduced[m] + beta[m] + 1.0) - std::lgamma(reduced[m] + 1.0);
          target[m] += beta[m];
        }
        const auto t = sector.index_of(target);
        if (!t) continue;  // outside the caps
        const auto pos = std::lower_bound(states.begin(), states.end(), *t);
        if (pos == states.end() || *pos != *t) continue;
        const auto j = static_cast<Eigen::Index>(pos - states.begin());
        const double norm = 0.5 * (log_amp2 - plan.log_factorials[a] - plan.log_factorials[b]);
        out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +=
            std::exp(norm) * rho(static_cast<Eigen::Index>(i), j);
      }
    }
  }
}

struct SectorResult {
  bool empty = true;
  std::optional<SectorBasis> basis;
  std::vector<SpectralBlock> blocks;
  double shift = std::numeric_limits<double>::infinity();
  double zsum = 0.0;
  Eigen::VectorXd occupation;  // Σ w n_m
  Eigen::VectorXd boundary;    // Σ w 1{n_m = cap_m}
  std::map<int, Eigen::MatrixXd> reduced;
  std::size_t states = 0;
  std::size_t largest = 0;
};

SectorResult solve_sector(const ModeSet& modes, const Potential& w, const GibbsParams& params,
                          const Truncation& trunc, const GibbsOptions& options, int n,
                          const std::map<int, CorrelatorPlan>& plans) {
  SectorResult out;
  const std::size_t nm = modes.size();
  out.occupation = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nm));
  out.boundary = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nm));
  SectorBasis basis = enumerate_sector(modes, n, trunc.caps);
  if (basis.size() == 0) return out;
  out.empty = false;
  out.states = basis.size();

  const SparseOperator h = assemble_hamiltonian(basis, modes, w, params.lambda);
  auto momentum = momentum_blocks(basis, modes);
  const double chemical = params.nu * n;

  std::vector<Eigen::MatrixXd> vectors;
  for (auto& mb : momentum) {
    if (mb.states.size() > options.max_block_dim) {
      std::ostringstream msg;
      msg << "block of dimension " << mb.states.size() << " in sector " << n
          << " exceeds max_block_dim = " << options.max_block_dim;
      throw TruncationError(msg.str());
    }
    out.largest = std::max(out.largest, mb.states.size());
    SpectralBlock block;
    block.particles = n;
    block.momentum = mb.momentum;
    block.states = std::move(mb.states);
    const Eigen::MatrixXd hb = h.dense_block(block.states);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(hb);
    if (solver.info() != Eigen::Success) throw NumericalError("eigensolver failed in sector " + std::to_string(n));
    block.energies = solver.eigenvalues();
    vectors.push_back(solver.eigenvectors());
    out.shift = std::min(out.shift, block.energies.minCoeff() - chemical);
    out.blocks.push_back(std::move(block));
  }

  for (std::size_t b = 0; b < out.blocks.size(); ++b) {
    SpectralBlock& block = out.blocks[b];
    const Eigen::MatrixXd& v = vectors[b];
    const Eigen::VectorXd weights =
        ((-(block.energies.array() - chemical - out.shift)) / params.temperature).exp().matrix();
    out.zsum += weights.sum();
    // diagonal of V diag(w) Vᵀ
    const Eigen::VectorXd diag = v.array().square().matrix() * weights;
    for (std::size_t i = 0; i < block.states.size(); ++i) {
      const Occupation& occ = basis[block.states[i]];
      const double d = diag(static_cast<Eigen::Index>(i));
      for (std::size_t m = 0; m < nm; ++m) {
        out.occupation(static_cast<Eigen::Index>(m)) += d * occ[m];
        if (occ[m] == std::min(trunc.caps[m], trunc.max_particles)) out.boundary(static_cast<Eigen::Index>(m)) += d;
      }
    }
    for (const auto& [k, plan] : plans) {
      if (k < 2 || k > n) continue;
      auto& acc = out.reduced[k];
      if (acc.size() == 0) {
        const auto d = static_cast<Eigen::Index>(plan.basis.size());
        acc = Eigen::MatrixXd::Zero(d, d);
      }
      const Eigen::MatrixXd rho = v * weights.asDiagonal() * v.transpose();
      accumulate_correlators(basis, block.states, rho, plan, acc);
    }
    if (options.keep_states) block.vectors = v;
  }
  if (options.keep_states) out.basis = std::move(basis);
  return out;
}

void check_params(const GibbsParams& p, const Potential& w) {
  if (!(p.temperature > 0.0) || !std::isfinite(p.temperature)) throw DomainError("temperature must be positive");
  if (!(p.kappa > 0.0)) throw DomainError("kappa must be positive");
  if (!(p.lambda >= 0.0)) throw DomainError("lambda must be >= 0");
  if ((p.lambda == 0.0 || w.is_identically_zero()) && p.nu >= 0.0) {
    throw DivergenceError("free zero mode with nu = " + std::to_string(p.nu) +
                          " >= 0: the partition function diverges");
  }
}

}  // namespace

double GibbsSolution::partition_function() const { return std::exp(log_z); }

double GibbsSolution::probability(std::size_t block, Eigen::Index j) const {
  const SpectralBlock& b = blocks.at(block);
  const double eps = b.energies(j) - params.nu * b.particles;
  return std::exp(-eps / params.temperature - log_z);
}

Truncation initial_truncation(const ModeSet& modes, double kappa, double temperature) {
  if (!(kappa > 0.0) || !(temperature > 0.0)) throw DomainError("kappa and temperature must be positive");
  Truncation t;
  for (const Mode& m : modes) {
    if (m.index_norm2() == 0) {
      t.caps.push_back(static_cast<int>(std::ceil(8.0 * temperature / kappa)));
    } else {
      t.caps.push_back(std::max(4, static_cast<int>(std::ceil(8.0 * temperature / (m.kinetic() + kappa)))));
    }
  }
  const auto zero = modes.index_of(Mode{0, 0});
  t.max_particles = t.caps[zero ? *zero : 0];
  return t;
}

GibbsSolution gibbs_state_at(const ModeSet& modes, const Potential& w, const GibbsParams& params,
                             const Truncation& truncation, const GibbsOptions& options) {
  check_params(params, w);
  if (truncation.caps.size() != modes.size()) throw UsageError("truncation caps must have one entry per mode");
  if (truncation.max_particles < 0) throw UsageError("max_particles must be >= 0");

  {
    // count occupations with Σn ≤ N_max and n_m ≤ cap_m before building anything
    const auto nmax = static_cast<std::size_t>(truncation.max_particles);
    std::vector<double> ways(nmax + 1, 0.0);
    ways[0] = 1.0;
    for (int cap : truncation.caps) {
      std::vector<double> next(nmax + 1, 0.0);
      for (std::size_t n = 0; n <= nmax; ++n) {
        if (ways[n] == 0.0) continue;
        for (std::size_t j = 0; j <= static_cast<std::size_t>(std::max(cap, 0)) && n + j <= nmax; ++j) next[n + j] += ways[n];
      }
      ways = std::move(next);
    }
    const double total = std::accumulate(ways.begin(), ways.end(), 0.0);
    if (total > static_cast<double>(options.max_states)) {
      std::ostringstream msg;
      msg << "truncated Fock space has " << static_cast<std::size_t>(total) << " states, above max_states = "
          << options.max_states;
      throw TruncationError(msg.str());
    }
  }

  std::map<int, CorrelatorPlan> plans;
  for (int k : options.orders) {
    if (k < 1) throw UsageError("reduced density matrix order must be >= 1");
    if (k >= 2 && !plans.contains(k)) plans.emplace(k, CorrelatorPlan(modes, k));
  }

  const int sectors = truncation.max_particles + 1;
  std::vector<SectorResult> results(static_cast<std::size_t>(sectors));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(sectors));
#pragma omp parallel for schedule(dynamic)
  for (int n = 0; n < sectors; ++n) {
    try {
      results[static_cast<std::size_t>(n)] = solve_sector(modes, w, params, truncation, options, n, plans);
    } catch (...) {
      errors[static_cast<std::size_t>(n)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  GibbsSolution sol;
  sol.params = params;
  sol.truncation = truncation;
  double shift = std::numeric_limits<double>::infinity();
  for (const auto& r : results) {
    if (!r.empty) shift = std::min(shift, r.shift);
    sol.total_states += r.states;
    sol.largest_block = std::max(sol.largest_block, r.largest);
  }
  if (sol.total_states > options.max_states) {
    throw TruncationError("truncated Fock space has " + std::to_string(sol.total_states) +
                          " states, above max_states = " + std::to_string(options.max_states));
  }

  const auto nm = static_cast<Eigen::Index>(modes.size());
  Eigen::VectorXd occupation = Eigen::VectorXd::Zero(nm);
  Eigen::VectorXd boundary = Eigen::VectorXd::Zero(nm);
  std::map<int, Eigen::MatrixXd> reduced;
  std::vector<double> sector_weight(static_cast<std::size_t>(sectors), 0.0);
  double zscaled = 0.0;
  for (int n = 0; n < sectors; ++n) {
    auto& r = results[static_cast<std::size_t>(n)];
    if (r.empty) continue;
    const double scale = std::exp(-(r.shift - shift) / params.temperature);
    sector_weight[static_cast<std::size_t>(n)] = r.zsum * scale;
    zscaled += r.zsum * scale;
    occupation += scale * r.occupation;
    boundary += scale * r.boundary;
    for (auto& [k, m] : r.reduced) {
      auto& acc = reduced[k];
      if (acc.size() == 0) acc = Eigen::MatrixXd::Zero(m.rows(), m.cols());
      acc += scale * m;
    }
  }

  sol.log_z = std::log(zscaled) - shift / params.temperature;
  sol.free_energy = -params.temperature * sol.log_z + params.e0;
  for (double& s : sector_weight) s /= zscaled;
  sol.sector_shares = std::move(sector_weight);
  sol.top_sector_share = sol.sector_shares.back();
  sol.mean_particles = 0.0;
  for (int n = 0; n < sectors; ++n) sol.mean_particles += n * sol.sector_shares[static_cast<std::size_t>(n)];
  occupation /= zscaled;
  boundary /= zscaled;
  sol.boundary_shares.assign(boundary.data(), boundary.data() + boundary.size());

  for (int k : options.orders) {
    if (k == 1) {
      sol.reduced[1] = occupation.asDiagonal();
    } else if (reduced.contains(k)) {
      sol.reduced[k] = reduced[k] / zscaled;
      sol.reduced[k] = 0.5 * (sol.reduced[k] + sol.reduced[k].transpose()).eval();
    } else {
      const auto d = static_cast<Eigen::Index>(enumerate_sector(modes, k).size());
      sol.reduced[k] = Eigen::MatrixXd::Zero(d, d);
    }
  }

  for (auto& r : results) {
    for (auto& b : r.blocks) sol.blocks.push_back(std::move(b));
    if (options.keep_states) {
      if (r.basis) sol.sectors.push_back(std::move(*r.basis));
      else sol.sectors.emplace_back(static_cast<int>(sol.sectors.size()), std::vector<Occupation>{}, truncation.caps);
    }
  }
  return sol;
}

GibbsSolution gibbs_state(const ModeSet& modes, const Potential& w, double kappa, double temperature,
                          double lambda, const Truncation& truncation, const GibbsOptions& options) {
  const Coupling c = coupling_schedule(modes, w, kappa, temperature, lambda);
  return gibbs_state_at(modes, w, {temperature, lambda, c.nu, c.e0, kappa}, truncation, options);
}

double free_energy_noninteracting(const ModeSet& modes, double kappa, double temperature) {
  if (!(kappa > 0.0) || !(temperature > 0.0)) throw DomainError("kappa and temperature must be positive");
  double f = 0.0;
  for (const Mode& m : modes) f += std::log(-std::expm1(-(m.kinetic() + kappa) / temperature));
  return temperature * f;
}

Eigen::MatrixXd free_one_body_density(const ModeSet& modes, double kappa, double temperature) {
  if (!(kappa > 0.0) || !(temperature > 0.0)) throw DomainError("kappa and temperature must be positive");
  Eigen::VectorXd occ(static_cast<Eigen::Index>(modes.size()));
  for (std::size_t i = 0; i < modes.size(); ++i) {
    occ(static_cast<Eigen::Index>(i)) = bose_occupation(modes[i].kinetic(), kappa, temperature);
  }
  return occ.asDiagonal();
}

namespace {

void require_states(const GibbsSolution& sol, const char* what) {
  if (sol.sectors.empty() || sol.blocks.empty() || sol.blocks.front().vectors.size() == 0) {
    throw UsageError(std::string(what) + " needs a solution computed with keep_states");
  }
}

}  // namespace

SpectralState thermal_spectral_state(const GibbsSolution& sol, double temperature) {
  require_states(sol, "thermal_spectral_state");
  if (!(temperature > 0.0)) throw DomainError("temperature must be positive");
  double shift = std::numeric_limits<double>::infinity();
  for (const auto& b : sol.blocks) shift = std::min(shift, b.energies.minCoeff() - sol.params.nu * b.particles);
  SpectralState state;
  double total = 0.0;
  for (const auto& b : sol.blocks) {
    state.vectors.push_back(b.vectors);
    Eigen::VectorXd p =
        ((-(b.energies.array() - sol.params.nu * b.particles - shift)) / temperature).exp().matrix();
    total += p.sum();
    state.probabilities.push_back(std::move(p));
  }
  for (auto& p : state.probabilities) p /= total;
  return state;
}

SpectralState gibbs_spectral_state(const GibbsSolution& sol) {
  return thermal_spectral_state(sol, sol.params.temperature);
}

double free_energy_functional(const SpectralState& state, const GibbsSolution& sol) {
  require_states(sol, "free_energy_functional");
  if (state.vectors.size() != sol.blocks.size() || state.probabilities.size() != sol.blocks.size()) {
    throw UsageError("state does not have the block structure of the solution");
  }
  double total = 0.0;
  double energy = 0.0;
  double entropy_term = 0.0;
  for (std::size_t b = 0; b < sol.blocks.size(); ++b) {
    const SpectralBlock& block = sol.blocks[b];
    const Eigen::MatrixXd& psi = state.vectors[b];
    const Eigen::VectorXd& p = state.probabilities[b];
    if (psi.rows() != block.energies.size() || psi.cols() != p.size()) {
      throw UsageError("state block " + std::to_string(b) + " has the wrong shape");
    }
    // ψᵀ H ψ = Σ_i E_i (Vᵀψ)_i²
    const Eigen::MatrixXd overlaps = block.vectors.transpose() * psi;
    const Eigen::VectorXd expect = overlaps.array().square().matrix().transpose() * block.energies;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      if (p(j) < 0.0) throw UsageError("state has a negative probability");
      total += p(j);
      energy += p(j) * (expect(j) - sol.params.nu * block.particles);
      if (p(j) > 0.0) entropy_term += p(j) * std::log(p(j));
    }
  }
  if (std::abs(total - 1.0) > 1e-10) throw UsageError("state is not normalized (trace " + std::to_string(total) + ")");
  return energy + sol.params.temperature * entropy_term + sol.params.e0;
}

DensityMatrix reduced_density_matrix(const GibbsSolution& sol, const ModeSet& modes, int order) {
  if (order < 1) throw UsageError("reduced density matrix order must be >= 1");
  if (order > sol.truncation.max_particles) {
    throw UsageError("order " + std::to_string(order) + " exceeds the largest retained sector");
  }
  const bool have_states = !sol.sectors.empty() && !sol.blocks.empty() && sol.blocks.front().vectors.size() > 0;
  if (!have_states) {
    auto it = sol.reduced.find(order);
    if (it == sol.reduced.end()) {
      throw UsageError("order " + std::to_string(order) + " was neither cached nor computable (no stored states)");
    }
    return {order, it->second};
  }
  const CorrelatorPlan plan(modes, order);
  const auto d = static_cast<Eigen::Index>(plan.basis.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t b = 0; b < sol.blocks.size(); ++b) {
    const SpectralBlock& block = sol.blocks[b];
    if (block.particles < order) continue;
    Eigen::VectorXd p(block.energies.size());
    for (Eigen::Index j = 0; j < p.size(); ++j) p(j) = sol.probability(b, j);
    const Eigen::MatrixXd rho = block.vectors * p.asDiagonal() * block.vectors.transpose();
    accumulate_correlators(sol.sectors[static_cast<std::size_t>(block.particles)], block.states, rho, plan, out);
  }
  return {order, out};
}

Eigen::MatrixXd sector_density(const GibbsSolution& sol, int particles) {
  require_states(sol, "sector_density");
  if (particles < 0 || particles >= static_cast<int>(sol.sectors.size())) {
    throw UsageError("sector " + std::to_string(particles) + " is not retained");
  }
  const auto d = static_cast<Eigen::Index>(sol.sectors[static_cast<std::size_t>(particles)].size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t b = 0; b < sol.blocks.size(); ++b) {
    const SpectralBlock& block = sol.blocks[b];
    if (block.particles != particles) continue;
    Eigen::VectorXd p(block.energies.size());
    for (Eigen::Index j = 0; j < p.size(); ++j) p(j) = sol.probability(b, j);
    const Eigen::MatrixXd rho = block.vectors * p.asDiagonal() * block.vectors.transpose();
    for (std::size_t i = 0; i < block.states.size(); ++i) {
      for (std::size_t j = 0; j < block.states.size(); ++j) {
        out(static_cast<Eigen::Index>(block.states[i]), static_cast<Eigen::Index>(block.states[j])) =
            rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
  }
  return out;
}

Eigen::MatrixXd partial_trace_reduction(const Eigen::MatrixXd& block, const SectorBasis& basis,
                                        const ModeSet& modes, int order) {
  const int n = basis.particles();
  if (order < 0 || order > n) throw UsageError("partial trace order must satisfy 0 <= k <= n");
  if (block.rows() != static_cast<Eigen::Index>(basis.size()) || block.cols() != block.rows()) {
    throw UsageError("block does not match the sector basis");
  }
  // |N⟩ = Σ_{α+γ=N} √(C(α)C(γ)/C(N)) |α⟩⊗|γ⟩ with C the multinomial count
  const SectorBasis kept = enumerate_sector(modes, order);
  const SectorBasis traced = enumerate_sector(modes, n - order);
  const auto d = static_cast<Eigen::Index>(kept.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  Occupation left;
  Occupation right;
  for (const Occupation& gamma : traced.states()) {
    const double log_cg = log_multinomial(gamma);
    for (std::size_t a = 0; a < kept.size(); ++a) {
      left = kept[a];
      for (std::size_t m = 0; m < left.size(); ++m) left[m] += gamma[m];
      const auto i = basis.index_of(left);
      if (!i) continue;
      const double log_left = log_multinomial(kept[a]) - log_multinomial(left);
      for (std::size_t b = 0; b < kept.size(); ++b) {
        right = kept[b];
        for (std::size_t m = 0; m < right.size(); ++m) right[m] += gamma[m];
        const auto j = basis.index_of(right);
        if (!j) continue;
        const double log_right = log_multinomial(kept[b]) - log_multinomial(right);
        out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) +=
            std::exp(log_cg + 0.5 * (log_left + log_right)) *
            block(static_cast<Eigen::Index>(*i), static_cast<Eigen::Index>(*j));
      }
    }
  }
  return out;
}

DensityMatrix reduced_by_partial_trace(const GibbsSolution& sol, const ModeSet& modes, int order) {
  require_states(sol, "reduced_by_partial_trace");
  if (order < 1 || order > sol.truncation.max_particles) throw UsageError("order outside the retained sectors");
  const auto d = static_cast<Eigen::Index>(enumerate_sector(modes, order).size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  for (int n = order; n < static_cast<int>(sol.sectors.size()); ++n) {
    const SectorBasis& basis = sol.sectors[static_cast<std::size_t>(n)];
    if (basis.size() == 0) continue;
    out += binomial(n, order) * partial_trace_reduction(sector_density(sol, n), basis, modes, order);
  }
  return {order, out};
}

TruncationReport truncation_control_at(const ModeSet& modes, const Potential& w, const GibbsParams& params,
                                       const TruncationTolerances& tol, const GibbsOptions& options) {
  if (!(tol.eps_z > 0.0) || !(tol.eps_tail > 0.0) || !(tol.growth > 1.0)) {
    throw UsageError("truncation tolerances must be positive and growth > 1");
  }
  auto grow = [&](int c) { return std::max(c + 1, static_cast<int>(std::ceil(c * tol.growth))); };

  TruncationReport report;
  Truncation trunc = initial_truncation(modes, params.kappa, params.temperature);
  for (int it = 0; it < tol.max_iterations; ++it) {
    report.solution = gibbs_state_at(modes, w, params, trunc, options);
    report.iterations = it + 1;
    report.log_z_history.push_back(report.solution.log_z);

    bool grew = false;
    Truncation next = trunc;
    if (report.solution.top_sector_share > tol.eps_tail) {
      next.max_particles = grow(trunc.max_particles);
      grew = true;
    }
    for (std::size_t m = 0; m < modes.size(); ++m) {
      // a cap at or above max_particles never binds on its own
      if (trunc.caps[m] >= trunc.max_particles) {
        next.caps[m] = std::max(next.caps[m], next.max_particles);
        continue;
      }
      if (report.solution.boundary_shares[m] > tol.eps_tail) {
        next.caps[m] = grow(trunc.caps[m]);
        grew = true;
      }
    }
    const std::size_t h = report.log_z_history.size();
    const bool stable = h < 2 || std::abs(report.log_z_history[h - 1] - report.log_z_history[h - 2]) <= tol.eps_z;
    if (!grew && stable) {
      report.truncation = trunc;
      report.converged = true;
      std::ostringstream msg;
      msg << "converged after " << report.iterations << " evaluations; top-sector share "
          << report.solution.top_sector_share << ", states " << report.solution.total_states;
      report.diagnostics = msg.str();
      return report;
    }
    if (!grew) {
      // tails are small but Z moved: confirm with one more uniform growth
      next.max_particles = grow(trunc.max_particles);
      for (std::size_t m = 0; m < modes.size(); ++m) next.caps[m] = grow(trunc.caps[m]);
    }
    for (int c : next.caps) {
      if (c > tol.max_cap) {
        std::ostringstream msg;
        msg << "cap budget exceeded (cap " << c << " > " << tol.max_cap << ") after " << report.iterations
            << " evaluations; last top-sector share " << report.solution.top_sector_share;
        throw TruncationError(msg.str());
      }
    }
    trunc = std::move(next);
  }
  throw TruncationError("truncation control did not converge within " + std::to_string(tol.max_iterations) +
                        " evaluations");
}

TruncationReport truncation_control(const ModeSet& modes, const Potential& w, double kappa, double temperature,
                                    double lambda, const TruncationTolerances& tolerances,
                                    const GibbsOptions& options) {
  const Coupling c = coupling_schedule(modes, w, kappa, temperature, lambda);
  return truncation_control_at(modes, w, {temperature, lambda, c.nu, c.e0, kappa}, tolerances, options);
}

}  // namespace bose2d
