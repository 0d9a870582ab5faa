#include "bose2d/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "bose2d/errors.hpp"

namespace bose2d {

namespace {

std::string describe(const Mode& m) {
  return "(" + std::to_string(m.m1) + "," + std::to_string(m.m2) + ")";
}

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw DomainError(std::string(name) + " must be positive and finite, got " +
                      std::to_string(value));
  }
}

}  // namespace

ModeSet ModeSet::disk(double radius) {
  if (!(radius >= 0.0)) throw DomainError("disk radius must be non-negative");
  const int r = static_cast<int>(std::floor(radius));
  // integer comparison so that radius = 2 includes (0, ±2) exactly
  const double r2 = radius * radius;
  std::vector<Mode> modes;
  for (int a = -r; a <= r; ++a) {
    for (int b = -r; b <= r; ++b) {
      if (a * a + b * b <= r2 + 1e-9) modes.push_back({a, b});
    }
  }
  return ModeSet(std::move(modes));
}

ModeSet ModeSet::momentum_ball(double k_radius) {
  if (!(k_radius >= 0.0)) throw DomainError("momentum radius must be non-negative");
  const double k2max = k_radius * k_radius;
  const int r = static_cast<int>(std::floor(k_radius / kTwoPi));
  std::vector<Mode> modes;
  for (int a = -r; a <= r; ++a) {
    for (int b = -r; b <= r; ++b) {
      Mode m{a, b};
      if (m.kinetic() <= k2max) modes.push_back(m);
    }
  }
  return ModeSet(std::move(modes));
}

ModeSet ModeSet::from_modes(std::vector<Mode> modes) {
  std::sort(modes.begin(), modes.end());
  if (auto dup = std::adjacent_find(modes.begin(), modes.end()); dup != modes.end()) {
    throw ConfigError("duplicate mode " + describe(*dup));
  }
  if (!std::binary_search(modes.begin(), modes.end(), Mode{0, 0})) {
    throw ConfigError("mode set must contain the zero mode (0,0)");
  }
  for (const Mode& m : modes) {
    if (!std::binary_search(modes.begin(), modes.end(), -m)) {
      throw ConfigError("mode set is not closed under negation: " + describe(m) +
                        " present but " + describe(-m) + " missing");
    }
  }
  return ModeSet(std::move(modes));
}

std::optional<std::size_t> ModeSet::index_of(const Mode& m) const {
  auto it = std::lower_bound(modes_.begin(), modes_.end(), m);
  if (it == modes_.end() || *it != m) return std::nullopt;
  return static_cast<std::size_t>(it - modes_.begin());
}

bool ModeSet::is_subset_of(const ModeSet& other) const {
  return std::includes(other.modes_.begin(), other.modes_.end(), modes_.begin(), modes_.end());
}

ModeSet ModeSet::restricted(double index_radius) const {
  const double r2 = index_radius * index_radius;
  std::vector<Mode> kept;
  std::copy_if(modes_.begin(), modes_.end(), std::back_inserter(kept),
               [&](const Mode& m) { return m.index_norm2() <= r2 + 1e-9; });
  return ModeSet(std::move(kept));
}

std::vector<Mode> ModeSet::transfers() const {
  std::set<Mode> out;
  for (const Mode& a : modes_) {
    for (const Mode& b : modes_) out.insert(a - b);
  }
  return {out.begin(), out.end()};
}

Potential Potential::constant(double w0, double radius) {
  if (!(w0 >= 0.0) || !std::isfinite(w0)) throw ConfigError("potential w0 must be finite and >= 0");
  if (!(radius >= 0.0)) throw ConfigError("potential radius must be >= 0");
  return Potential(Constant{w0, radius});
}

Potential Potential::gaussian(double w0, double alpha) {
  if (!(w0 >= 0.0) || !std::isfinite(w0)) throw ConfigError("potential w0 must be finite and >= 0");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("potential alpha must be finite and >= 0");
  return Potential(Gaussian{w0, alpha});
}

Potential Potential::table(std::map<Mode, double> values) {
  for (const auto& [q, v] : values) {
    if (!std::isfinite(v)) throw ConfigError("potential entry " + describe(q) + " is not finite");
    if (v < 0.0) {
      throw ConfigError("potential entry " + describe(q) + " = " + std::to_string(v) +
                        " is negative (w-hat must be >= 0)");
    }
    auto partner = values.find(-q);
    if (partner == values.end() || partner->second != v) {
      throw ConfigError("potential is not even: entry " + describe(q) + " has no equal entry at " +
                        describe(-q));
    }
  }
  return Potential(Table{std::move(values)});
}

double Potential::operator()(const Mode& q) const {
  return std::visit(
      [&](const auto& f) -> double {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, Table>) {
          auto it = f.values.find(q);
          if (it == f.values.end()) {
            throw ConfigError("potential table has no entry for transfer " + describe(q));
          }
          return it->second;
        } else if constexpr (std::is_same_v<F, Constant>) {
          return q.index_norm2() <= f.radius * f.radius + 1e-9 ? f.w0 : 0.0;
        } else {
          return f.w0 * std::exp(-f.alpha * q.kinetic());
        }
      },
      family_);
}

bool Potential::covers(const Mode& q) const {
  if (const auto* t = std::get_if<Table>(&family_)) return t->values.contains(q);
  return true;
}

bool Potential::is_identically_zero() const {
  return std::visit(
      [](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, Table>) {
          return std::all_of(f.values.begin(), f.values.end(),
                             [](const auto& kv) { return kv.second == 0.0; });
        } else {
          return f.w0 == 0.0;
        }
      },
      family_);
}

double Potential::summability_weight(const ModeSet& modes) const {
  double sum = 0.0;
  for (const Mode& q : modes.transfers()) sum += std::sqrt(1.0 + q.kinetic()) * (*this)(q);
  return sum;
}

double counterterm_density(const ModeSet& modes, double kappa, std::optional<double> sub_cutoff) {
  require_positive(kappa, "kappa");
  const double r2 = sub_cutoff ? *sub_cutoff * *sub_cutoff : 0.0;
  double c = 0.0;
  for (const Mode& m : modes) {
    if (sub_cutoff && m.index_norm2() > r2 + 1e-9) continue;
    c += 1.0 / (m.kinetic() + kappa);
  }
  return c;
}

double bose_occupation(double kinetic, double kappa, double temperature) {
  return 1.0 / std::expm1((kinetic + kappa) / temperature);
}

double bose_particle_number(const ModeSet& modes, double kappa, double temperature) {
  require_positive(kappa, "kappa");
  require_positive(temperature, "temperature");
  double n = 0.0;
  for (const Mode& m : modes) n += bose_occupation(m.kinetic(), kappa, temperature);
  return n;
}

Coupling coupling_schedule(const ModeSet& modes, const Potential& w, double kappa,
                           double temperature, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be >= 0");
  const double n0 = bose_particle_number(modes, kappa, temperature);
  const double w0 = w(Mode{0, 0});
  return {w0 * lambda * n0 - kappa, 0.5 * lambda * w0 * n0 * n0, n0};
}

Schedule Schedule::inverse_temperature(double kappa, std::vector<double> temperatures) {
  Schedule s;
  s.kappa = kappa;
  s.temperatures = std::move(temperatures);
  for (double t : s.temperatures) s.lambdas.push_back(t > 0.0 ? 1.0 / t : 0.0);
  s.validate();
  return s;
}

void Schedule::validate() const {
  require_positive(kappa, "kappa");
  if (temperatures.size() != lambdas.size()) {
    throw UsageError("schedule needs one lambda per temperature");
  }
  for (std::size_t i = 0; i < temperatures.size(); ++i) {
    require_positive(temperatures[i], "temperature");
    require_positive(lambdas[i], "lambda");
    if (i > 0 && !(temperatures[i] > temperatures[i - 1])) {
      throw UsageError("temperatures must be strictly increasing");
    }
  }
}

}  // namespace bose2d
