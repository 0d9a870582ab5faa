#include "bose2d/selftest.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "bose2d/classical.hpp"
#include "bose2d/compare.hpp"
#include "bose2d/fock.hpp"
#include "bose2d/gibbs.hpp"
#include "bose2d/model.hpp"

namespace bose2d {

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

bool close(double a, double b, double rel, double abs = 0.0) {
  return std::abs(a - b) <= std::max(abs, rel * std::max(std::abs(a), std::abs(b)));
}

class Runner {
 public:
  void check(const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
    SelftestCheck c;
    c.name = name;
    try {
      auto [ok, detail] = body();
      c.pass = ok;
      c.detail = detail;
    } catch (const std::exception& e) {
      c.pass = false;
      c.detail = std::string("threw: ") + e.what();
    }
    checks.push_back(std::move(c));
  }
  std::vector<SelftestCheck> checks;
};

ModeSet five_modes() { return ModeSet::disk(1.0); }

}  // namespace

std::vector<SelftestCheck> run_selftest(const SelftestOptions& options) {
  Runner r;
  const ModeSet single = ModeSet::disk(0.0);
  const ModeSet five = five_modes();

  // model
  r.check("counterterm of the zero mode at kappa=1 is 1", [&] {
    const double c = counterterm_density(single, 1.0);
    return std::pair{c == 1.0, fmt(c)};
  });
  r.check("counterterm decreases to 0 as kappa grows", [&] {
    double prev = counterterm_density(five, 1.0);
    bool ok = true;
    for (double kappa : {10.0, 1e2, 1e4, 1e8}) {
      const double c = counterterm_density(five, kappa);
      ok = ok && c < prev;
      prev = c;
    }
    return std::pair{ok && prev < 1e-7, fmt(prev)};
  });
  r.check("N0(T)/T approaches the counterterm", [&] {
    const double c = counterterm_density(five, 1.0);
    const double g3 = std::abs(bose_particle_number(five, 1.0, 1e3) / 1e3 - c);
    const double g4 = std::abs(bose_particle_number(five, 1.0, 1e4) / 1e4 - c);
    return std::pair{g4 < g3, fmt(g3) + " -> " + fmt(g4)};
  });
  r.check("zero coupling gives nu=-kappa, E0=0", [&] {
    const Coupling a = coupling_schedule(five, Potential::constant(0.0, 1.0), 1.0, 8.0, 0.125);
    const Coupling b = coupling_schedule(five, Potential::constant(1.0, 1.0), 1.0, 8.0, 0.0);
    const bool ok = a.nu == -1.0 && a.e0 == 0.0 && b.nu == -1.0 && b.e0 == 0.0;
    return std::pair{ok, "nu " + fmt(a.nu) + ", " + fmt(b.nu)};
  });

  // classical
  r.check("free-field sampler is deterministic", [&] {
    Engine e1 = make_stream(7, 3);
    Engine e2 = make_stream(7, 3);
    return std::pair{sample_free_field(five, 1.0, e1) == sample_free_field(five, 1.0, e2), std::string()};
  });
  const Potential unit = Potential::constant(1.0, 0.0);
  r.check("E_int(u=0) = 0.5 on the zero mode", [&] {
    const FieldSample u{0.0};
    const double e = interaction_energy(u, single, unit, 1.0);
    return std::pair{close(e, 0.5, 1e-15), fmt(e)};
  });
  r.check("E_int vanishes when |u(0)|^2 = c", [&] {
    const double c = counterterm_density(single, 1.0) + (options.counterterm_fault ? 1e-3 : 0.0);
    const InteractionKernel kernel(single, single, unit, 1.0, c);
    const FieldSample u{1.0};
    const double e = kernel.energy(u);
    return std::pair{e >= 0.0 && e <= 1e-14, fmt(e)};
  });
  r.check("E_int(u(0)=2) = 4.5", [&] {
    const FieldSample u{2.0};
    const double e = interaction_energy(u, single, unit, 1.0);
    return std::pair{close(e, 4.5, 1e-15), fmt(e)};
  });
  r.check("w=0 gives z=1 with zero error", [&] {
    const auto ens = draw_ensemble(five, Potential::zero(), 1.0, {1000, 4, 11});
    const Estimate z = estimate_partition_z(ens);
    return std::pair{z.value == 1.0 && z.standard_error == 0.0, fmt(z.value)};
  });
  r.check("trace of M1 under the free field matches the counterterm", [&] {
    const auto ens = draw_ensemble(five, Potential::zero(), 1.0, {200000, 8, 5});
    const double tr = moment_matrix(ens, 1, five).trace().real();
    const double c = counterterm_density(five, 1.0);
    // per-mode |u|^2 is exponential: variance of the trace is Σ 1/(k²+κ)²
    double var = 0.0;
    for (const Mode& m : five) var += 1.0 / ((m.kinetic() + 1.0) * (m.kinetic() + 1.0));
    const double se = std::sqrt(var / 200000.0);
    return std::pair{std::abs(tr - c) < 5.0 * se, fmt(tr) + " vs " + fmt(c)};
  });
  r.check("Wick moment E|u(0)|^4 = 2/kappa^2", [&] {
    const auto ens = draw_ensemble(single, Potential::zero(), 2.0, {200000, 8, 9});
    const double m = moment_matrix(ens, 2, single)(0, 0).real();
    // |g|^4 with E|g|^8 = 24: sd = √20 / κ²
    const double se = std::sqrt(20.0 / 200000.0) / 4.0;
    return std::pair{std::abs(m - 0.5) < 5.0 * se, fmt(m)};
  });
  r.check("Wick difference at equal cutoff is 0", [&] {
    const auto rep = wick_cauchy_check({five, five}, Potential::gaussian(1.0, 0.02), 1.0, {2000, 2, 3});
    return std::pair{rep.gaps.at(0).l1_gap.value == 0.0, fmt(rep.gaps.at(0).l1_gap.value)};
  });
  r.check("Wick differences vanish for w=0", [&] {
    const auto rep = wick_cauchy_check({single, five}, Potential::zero(), 1.0, {2000, 2, 3});
    return std::pair{rep.gaps.at(0).l1_gap.value == 0.0, fmt(rep.gaps.at(0).l1_gap.value)};
  });
  r.check("single-mode z by quadrature = exp(-1/2) sqrt(pi/2)", [&] {
    const double z = single_mode_moments(1.0, 1.0).z;
    const double exact = std::exp(-0.5) * std::sqrt(std::numbers::pi / 2.0);
    return std::pair{close(z, exact, 1e-10), fmt(z)};
  });

  // fock
  r.check("two modes, two particles: (2,0),(1,1),(0,2)", [&] {
    const ModeSet two = ModeSet::from_modes({{0, 0}, {1, 0}, {-1, 0}});
    const SectorBasis b = enumerate_sector(two, 2);
    // drop the third mode by capping it at 0
    const SectorBasis capped = enumerate_sector(two, 2, std::vector<int>{2, 2, 0});
    const std::vector<Occupation> want{{2, 0, 0}, {1, 1, 0}, {0, 2, 0}};
    return std::pair{capped.states() == want && b.size() == 6, std::to_string(capped.size())};
  });
  r.check("zero particles: the vacuum only", [&] {
    const SectorBasis b = enumerate_sector(five, 0);
    return std::pair{b.size() == 1 && b[0] == Occupation(5, 0), std::to_string(b.size())};
  });
  r.check("ladder amplitudes", [&] {
    const Mode z{0, 0};
    const bool null_ok = !apply_ladder({0}, single, z, Ladder::annihilate).has_value();
    const auto up = apply_ladder({3}, single, z, Ladder::create);
    const auto down = apply_ladder({5}, single, z, Ladder::annihilate);
    const auto back = apply_ladder(down->state, single, z, Ladder::create);
    const double number = down->amplitude * back->amplitude;
    const bool ok = null_ok && up && close(up->amplitude, 2.0, 1e-15) && close(number, 5.0, 1e-14);
    return std::pair{ok, fmt(number)};
  });
  r.check("kinetic diagonal is 4 pi^2 for a unit mode", [&] {
    const SectorBasis b = enumerate_sector(five, 1);
    const Eigen::MatrixXd h = assemble_hamiltonian(b, five, unit, 0.0).dense();
    const auto i = b.index_of(Occupation{0, 0, 0, 1, 0});
    const double v = h(static_cast<Eigen::Index>(*i), static_cast<Eigen::Index>(*i));
    return std::pair{close(v, 4.0 * std::numbers::pi * std::numbers::pi, 1e-14), fmt(v)};
  });
  r.check("five-mode Hamiltonian is Hermitian", [&] {
    const SectorBasis b = enumerate_sector(five, 4);
    const SparseOperator h = assemble_hamiltonian(b, five, Potential::gaussian(1.0, 0.02), 0.3);
    return std::pair{h.is_hermitian(1e-12), std::to_string(b.size()) + " states"};
  });
  r.check("vacuum and (1_p, 1_-p) carry zero momentum", [&] {
    const SectorBasis vac = enumerate_sector(five, 0);
    const auto v = number_and_momentum(vac, five);
    const SectorBasis two = enumerate_sector(five, 2);
    const auto p = five.index_of(Mode{1, 0});
    const auto q = five.index_of(Mode{-1, 0});
    Occupation occ(5, 0);
    occ[*p] = 1;
    occ[*q] = 1;
    const auto obs = number_and_momentum(two, five);
    const auto i = *two.index_of(occ);
    const bool ok = v.number[0] == 0.0 && v.momentum[0] == Mode{} && obs.momentum[i] == Mode{};
    return std::pair{ok, std::string()};
  });

  // gibbs
  r.check("free energy of the free gas vanishes as T -> 0", [&] {
    const double f = free_energy_noninteracting(five, 1.0, 0.01);
    return std::pair{f <= 0.0 && f > -1e-30, fmt(f)};
  });
  r.check("free energy is additive over disjoint mode sets", [&] {
    const double all = free_energy_noninteracting(five, 1.0, 4.0);
    const double zero = free_energy_noninteracting(single, 1.0, 4.0);
    const ModeSet ring = ModeSet::from_modes({{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}});
    double rest = 0.0;
    for (const Mode& m : ring) {
      if (m != Mode{}) rest += 4.0 * std::log(-std::expm1(-(m.kinetic() + 1.0) / 4.0));
    }
    return std::pair{close(all, zero + rest, 1e-13), fmt(all)};
  });
  r.check("lambda=0 single mode Z matches the geometric series", [&] {
    const double t = 4.0;
    const TruncationReport rep = truncation_control(single, unit, 1.0, t, 0.0);
    const double exact = -std::log(-std::expm1(-1.0 / t));
    const bool ok = rep.converged && std::abs(rep.solution.log_z - exact) <= 1e-8;
    const double n = rep.solution.mean_particles;
    return std::pair{ok && close(n, bose_particle_number(single, 1.0, t), 1e-8), fmt(rep.solution.log_z)};
  });
  r.check("variational identity at the Gibbs state", [&] {
    GibbsOptions opt;
    opt.keep_states = true;
    const GibbsSolution sol = gibbs_state(five, Potential::gaussian(1.0, 0.02), 1.0, 2.0, 0.5, {{6, 3, 3, 3, 3}, 6}, opt);
    const double f = free_energy_functional(gibbs_spectral_state(sol), sol);
    return std::pair{close(f, sol.free_energy, 1e-8), fmt(f)};
  });
  r.check("pure vacuum has free energy E0", [&] {
    GibbsOptions opt;
    opt.keep_states = true;
    const GibbsSolution sol = gibbs_state(single, unit, 1.0, 2.0, 0.5, {{4}, 4}, opt);
    SpectralState vac = gibbs_spectral_state(sol);
    for (std::size_t b = 0; b < vac.probabilities.size(); ++b) {
      vac.probabilities[b].setZero();
      if (sol.blocks[b].particles == 0) vac.probabilities[b](0) = 1.0;
    }
    const double f = free_energy_functional(vac, sol);
    return std::pair{close(f, sol.params.e0, 1e-12), fmt(f)};
  });
  r.check("one-body matrix of a two-particle pure state", [&] {
    const SectorBasis two = enumerate_sector(five, 2);
    Occupation occ(5, 0);
    occ[1] = 1;
    occ[3] = 1;
    const auto i = static_cast<Eigen::Index>(*two.index_of(occ));
    Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(two.size(), two.size());
    rho(i, i) = 1.0;
    const Eigen::MatrixXd g1 = 2.0 * partial_trace_reduction(rho, two, five, 1);
    Eigen::MatrixXd want = Eigen::MatrixXd::Zero(5, 5);
    want(1, 1) = 1.0;
    want(3, 3) = 1.0;
    return std::pair{(g1 - want).cwiseAbs().maxCoeff() < 1e-14, fmt(g1.trace())};
  });
  r.check("trace identity tr G(k) = E[C(N,k)]", [&] {
    GibbsOptions opt;
    opt.keep_states = true;
    opt.orders = {1, 2};
    const GibbsSolution sol = gibbs_state(five, Potential::gaussian(1.0, 0.02), 1.0, 2.0, 0.5, {{6, 3, 3, 3, 3}, 6}, opt);
    double e1 = 0.0;
    double e2 = 0.0;
    for (std::size_t n = 0; n < sol.sector_shares.size(); ++n) {
      e1 += sol.sector_shares[n] * static_cast<double>(n);
      e2 += sol.sector_shares[n] * 0.5 * static_cast<double>(n) * (static_cast<double>(n) - 1.0);
    }
    const double t1 = reduced_density_matrix(sol, five, 1).trace();
    const double t2 = reduced_density_matrix(sol, five, 2).trace();
    return std::pair{close(t1, e1, 1e-10) && close(t2, e2, 1e-10), fmt(t1) + ", " + fmt(t2)};
  });
  r.check("partial trace to k=n is the identity, to k=0 the trace", [&] {
    const SectorBasis two = enumerate_sector(five, 2);
    Engine engine = make_stream(1, 0);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Eigen::MatrixXd a(two.size(), two.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = unif(engine);
    const Eigen::MatrixXd rho = a * a.transpose();
    const Eigen::MatrixXd same = partial_trace_reduction(rho, two, five, 2);
    const Eigen::MatrixXd scalar = partial_trace_reduction(rho, two, five, 0);
    const bool ok = (same - rho).cwiseAbs().maxCoeff() < 1e-12 && close(scalar(0, 0), rho.trace(), 1e-12);
    return std::pair{ok, fmt(scalar(0, 0))};
  });

  // compare
  r.check("Schatten norms of diag(3,-4) and the identity", [&] {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = -4.0;
    const double n1 = schatten_norm(d, 1.0);
    const double n2 = schatten_norm(d, 2.0);
    const double id = schatten_norm(Eigen::MatrixXd(Eigen::MatrixXd::Identity(2, 2)), 2.0);
    const bool ok = close(n1, 7.0, 1e-14) && close(n2, 5.0, 1e-14) && close(id, std::sqrt(2.0), 1e-14);
    return std::pair{ok, fmt(n1) + ", " + fmt(n2) + ", " + fmt(id)};
  });
  r.check("verdict on synthetic gap series", [&] {
    const std::vector<double> ts{4, 8, 16};
    const auto good = assess_series("g", ts, {0.4, 0.2, 0.1}, {0, 0, 0}, 0.15);
    const auto bad = assess_series("g", ts, {0.1, 0.3, 0.2}, {0, 0, 0}, std::nullopt);
    const bool ok = good.pass && close(good.slope, -1.0, 1e-12) && !bad.monotone && !bad.pass;
    return std::pair{ok, "slope " + fmt(good.slope)};
  });

  return r.checks;
}

std::string format_selftest(const std::vector<SelftestCheck>& checks) {
  std::ostringstream out;
  for (const auto& c : checks) {
    out << (c.pass ? "PASS " : "FAIL ") << c.name;
    if (!c.detail.empty()) out << ": " << c.detail;
    out << '\n';
  }
  return out.str();
}

}  // namespace bose2d
