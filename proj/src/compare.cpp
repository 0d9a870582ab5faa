#include "bose2d/compare.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "bose2d/errors.hpp"

namespace bose2d {

namespace {

double norm_from_singular_values(const Eigen::VectorXd& sigma, double p) {
  if (std::isinf(p)) return sigma.size() ? sigma.maxCoeff() : 0.0;
  const double top = sigma.size() ? sigma.maxCoeff() : 0.0;
  if (top == 0.0) return 0.0;
  // scale by the largest value so σ^p cannot overflow
  double sum = 0.0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) sum += std::pow(sigma(i) / top, p);
  return top * std::pow(sum, 1.0 / p);
}

double sample_sd(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double factorial(int k) { return std::tgamma(k + 1.0); }

}  // namespace

double schatten_norm(const Eigen::MatrixXcd& a, double p) {
  if (!(p >= 1.0)) throw UsageError("Schatten exponent must be >= 1");
  if (!a.allFinite()) throw UsageError("Schatten norm of a non-finite matrix");
  if (a.size() == 0) return 0.0;
  const double scale = a.cwiseAbs().maxCoeff();
  if (a.rows() == a.cols() && (a - a.adjoint()).cwiseAbs().maxCoeff() <= 1e-14 * scale) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(a, Eigen::EigenvaluesOnly);
    return norm_from_singular_values(es.eigenvalues().cwiseAbs(), p);
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
  return norm_from_singular_values(svd.singularValues(), p);
}

double schatten_norm(const Eigen::MatrixXd& a, double p) {
  return schatten_norm(Eigen::MatrixXcd(a.cast<Complex>()), p);
}

std::string GapSpec::name() const {
  std::ostringstream s;
  s << "g_" << order << "_";
  if (p == std::floor(p)) s << static_cast<long>(p);
  else s << p;
  return s.str();
}

ClassicalSide classical_side(const ComparisonSetup& setup) {
  ClassicalSide side;
  side.free_covariance = free_field_covariance(setup.modes, setup.kappa);
  const WeightedEnsemble ens = draw_ensemble(setup.modes, setup.potential, setup.kappa, setup.ensemble);
  side.z = estimate_partition_z(ens);
  side.neg_log_z = {-std::log(side.z.value), side.z.standard_error / side.z.value};
  if (setup.exact_single_mode && setup.modes.size() == 1) {
    const double z = single_mode_moments(setup.potential(Mode{0, 0}), setup.kappa).z;
    side.neg_log_z = {-std::log(z), 0.0};
    side.exact_z = true;
  }
  std::set<int> orders;
  for (const GapSpec& g : setup.gaps) orders.insert(g.order);
  if (setup.subtracted_gap) orders.insert(1);
  for (int k : orders) {
    side.moments[k] = moment_matrix(ens, k, setup.modes);
    side.stream_moments[k] = stream_moment_matrices(ens, k, setup.modes);
  }
  return side;
}

std::vector<ComparisonRow> theorem_quantities(const ComparisonSetup& setup, const ClassicalSide& classical) {
  if (!setup.lambdas.empty() && setup.lambdas.size() != setup.temperatures.size()) {
    throw UsageError("one lambda per temperature required");
  }
  GibbsOptions options;
  options.max_block_dim = setup.max_block_dim;
  options.max_states = setup.max_states;
  std::set<int> orders;
  for (const GapSpec& g : setup.gaps) orders.insert(g.order);
  if (setup.subtracted_gap) orders.insert(1);
  options.orders.assign(orders.begin(), orders.end());

  std::vector<ComparisonRow> rows;
  for (std::size_t i = 0; i < setup.temperatures.size(); ++i) {
    ComparisonRow row;
    const double t = setup.temperatures[i];
    row.temperature = t;
    row.lambda = setup.lambdas.empty() ? 1.0 / t : setup.lambdas[i];
    try {
      const Coupling c = coupling_schedule(setup.modes, setup.potential, setup.kappa, t, row.lambda);
      row.nu = c.nu;
      row.e0 = c.e0;
      const GibbsParams params{t, row.lambda, c.nu, c.e0, setup.kappa};
      const TruncationReport tr = truncation_control_at(setup.modes, setup.potential, params, setup.truncation, options);
      const GibbsSolution& sol = tr.solution;
      row.log_z = sol.log_z;
      row.free_energy = sol.free_energy;
      row.free_energy_free = free_energy_noninteracting(setup.modes, setup.kappa, t);
      row.mean_particles = sol.mean_particles;
      row.truncation = tr.truncation;
      row.top_sector_share = sol.top_sector_share;
      row.states = sol.total_states;
      row.truncation_iterations = tr.iterations;

      row.delta_f = (row.free_energy - row.free_energy_free) / t;
      row.neg_log_z = classical.neg_log_z;
      row.free_energy_gap = {std::abs(row.delta_f - classical.neg_log_z.value), classical.neg_log_z.standard_error};

      for (const GapSpec& g : setup.gaps) {
        const Eigen::MatrixXd scaled = (factorial(g.order) / std::pow(t, g.order)) * sol.reduced.at(g.order);
        const Eigen::MatrixXcd quantum = scaled.cast<Complex>();
        const double value = schatten_norm(Eigen::MatrixXcd(quantum - classical.moments.at(g.order)), g.p);
        std::vector<double> per_stream;
        for (const auto& m : classical.stream_moments.at(g.order)) {
          per_stream.push_back(schatten_norm(Eigen::MatrixXcd(quantum - m), g.p));
        }
        const double err = sample_sd(per_stream) / std::sqrt(static_cast<double>(per_stream.size()));
        row.gaps.push_back({g, {value, err}});
      }

      if (setup.subtracted_gap) {
        const Eigen::MatrixXd free_one = free_one_body_density(setup.modes, setup.kappa, t);
        const Eigen::MatrixXcd quantum = ((sol.reduced.at(1) - free_one) / t).cast<Complex>();
        auto difference = [&](const Eigen::MatrixXcd& m1) {
          return Eigen::MatrixXcd(quantum - (m1 - classical.free_covariance));
        };
        const double value = schatten_norm(difference(classical.moments.at(1)), 1.0);
        std::vector<double> per_stream;
        for (const auto& m : classical.stream_moments.at(1)) per_stream.push_back(schatten_norm(difference(m), 1.0));
        row.subtracted_gap =
            Estimate{value, sample_sd(per_stream) / std::sqrt(static_cast<double>(per_stream.size()))};
      }
    } catch (const NumericalError& e) {
      row.ok = false;
      row.diagnostic = e.what();
    } catch (const ConfigError& e) {
      row.ok = false;
      row.diagnostic = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ComparisonRow> theorem_quantities(const ComparisonSetup& setup) {
  return theorem_quantities(setup, classical_side(setup));
}

SeriesVerdict assess_series(const std::string& name, const std::vector<double>& temperatures,
                            const std::vector<double>& values, const std::vector<double>& errors,
                            std::optional<double> tolerance) {
  if (values.size() != temperatures.size() || errors.size() != values.size()) {
    throw UsageError("series lengths differ");
  }
  if (values.size() < 3) throw UsageError("convergence report needs at least 3 rows");
  constexpr double kFloor = 1e-12;
  SeriesVerdict v;
  v.name = name;
  v.temperatures = temperatures;
  v.values = values;
  v.errors = errors;
  v.monotone = true;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double sigma = std::hypot(errors[i - 1], errors[i]);
    const bool converged = values[i] <= kFloor && values[i - 1] <= kFloor;
    if (!(values[i] - values[i - 1] < sigma) && !converged) v.monotone = false;
  }
  v.terminal = values.back();
  v.tolerance = tolerance;
  v.terminal_ok = !tolerance || v.terminal <= *tolerance;

  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > 0.0 && temperatures[i] > 0.0) {
      lx.push_back(std::log(temperatures[i]));
      ly.push_back(std::log(values[i]));
    }
  }
  if (lx.size() >= 2) {
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    v.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  }
  v.pass = v.monotone && v.terminal_ok;
  return v;
}

Verdict convergence_report(const std::vector<ComparisonRow>& rows, const std::map<std::string, double>& tolerances) {
  if (rows.size() < 3) throw UsageError("convergence report needs at least 3 rows");
  Verdict verdict;
  std::vector<ComparisonRow> good;
  for (const auto& r : rows) {
    if (r.ok) good.push_back(r);
    else verdict.rows_ok = false;
  }
  if (good.size() < 3) {
    verdict.pass = false;
    return verdict;
  }
  auto tol = [&](const std::string& name) -> std::optional<double> {
    auto it = tolerances.find(name);
    if (it == tolerances.end()) return std::nullopt;
    return it->second;
  };
  std::vector<double> ts;
  for (const auto& r : good) ts.push_back(r.temperature);

  auto collect = [&](const std::string& name, auto&& get) {
    std::vector<double> values;
    std::vector<double> errors;
    for (const auto& r : good) {
      const Estimate e = get(r);
      values.push_back(e.value);
      errors.push_back(e.standard_error);
    }
    verdict.quantities.push_back(assess_series(name, ts, values, errors, tol(name)));
  };

  collect("free_energy_gap", [](const ComparisonRow& r) { return r.free_energy_gap; });
  for (std::size_t g = 0; g < good.front().gaps.size(); ++g) {
    collect(good.front().gaps[g].spec.name(), [g](const ComparisonRow& r) { return r.gaps.at(g).gap; });
  }
  if (good.front().subtracted_gap) {
    collect("g_s1", [](const ComparisonRow& r) { return r.subtracted_gap.value_or(Estimate{}); });
  }
  verdict.pass = verdict.rows_ok && std::all_of(verdict.quantities.begin(), verdict.quantities.end(),
                                                [](const SeriesVerdict& s) { return s.pass; });
  return verdict;
}

}  // namespace bose2d
