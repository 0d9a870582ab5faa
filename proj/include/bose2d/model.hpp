#pragma once

#include <compare>
#include <map>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace bose2d {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Fourier mode on the unit torus, k = 2π·(m1, m2).
struct Mode {
  int m1 = 0;
  int m2 = 0;

  auto operator<=>(const Mode&) const = default;

  Mode operator-() const { return {-m1, -m2}; }
  Mode operator+(const Mode& o) const { return {m1 + o.m1, m2 + o.m2}; }
  Mode operator-(const Mode& o) const { return {m1 - o.m1, m2 - o.m2}; }

  int index_norm2() const { return m1 * m1 + m2 * m2; }
  /// |k|² = 4π²(m1² + m2²)
  double kinetic() const { return kTwoPi * kTwoPi * index_norm2(); }
};

/// Finite, negation-closed set of modes containing the zero mode, kept in
/// lexicographic order on (m1, m2).
class ModeSet {
 public:
  /// All modes with m1² + m2² ≤ radius² (radius in lattice-index units).
  static ModeSet disk(double radius);
  /// All modes with |k| ≤ k_radius.
  static ModeSet momentum_ball(double k_radius);
  /// Explicit list; throws ConfigError on duplicates, a missing zero mode or
  /// a missing partner −k.
  static ModeSet from_modes(std::vector<Mode> modes);

  std::size_t size() const { return modes_.size(); }
  std::span<const Mode> modes() const { return modes_; }
  const Mode& operator[](std::size_t i) const { return modes_[i]; }
  auto begin() const { return modes_.begin(); }
  auto end() const { return modes_.end(); }

  std::optional<std::size_t> index_of(const Mode& m) const;
  bool contains(const Mode& m) const { return index_of(m).has_value(); }
  bool is_subset_of(const ModeSet& other) const;

  /// Sub-cutoff selection |m| ≤ index_radius. Still symmetric and contains 0.
  ModeSet restricted(double index_radius) const;

  /// All differences k − k' of members (sorted, unique).
  std::vector<Mode> transfers() const;

  bool operator==(const ModeSet&) const = default;

 private:
  explicit ModeSet(std::vector<Mode> sorted) : modes_(std::move(sorted)) {}
  std::vector<Mode> modes_;
};

/// Pair interaction in momentum-transfer space, ŵ(q) ≥ 0 and even.
class Potential {
 public:
  struct Table {
    std::map<Mode, double> values;
  };
  /// ŵ(q) = w0 for |q| ≤ radius (index units), 0 outside.
  struct Constant {
    double w0;
    double radius;
  };
  /// ŵ(q) = w0·exp(−α|q|²), |q|² in physical units.
  struct Gaussian {
    double w0;
    double alpha;
  };

  static Potential zero() { return Potential(Constant{0.0, 0.0}); }
  static Potential constant(double w0, double radius);
  static Potential gaussian(double w0, double alpha);
  /// Throws ConfigError on negative, non-finite or non-even entries.
  static Potential table(std::map<Mode, double> values);

  /// Throws ConfigError when a table has no entry for q.
  double operator()(const Mode& q) const;
  bool covers(const Mode& q) const;
  bool is_identically_zero() const;

  /// Σ_q (1+|q|²)^{1/2} ŵ(q) over the transfer set of `modes`.
  double summability_weight(const ModeSet& modes) const;

  const std::variant<Table, Constant, Gaussian>& family() const { return family_; }

 private:
  explicit Potential(std::variant<Table, Constant, Gaussian> f) : family_(std::move(f)) {}
  std::variant<Table, Constant, Gaussian> family_;
};

/// ⟨|P_K u(x)|²⟩ under the free field: Σ 1/(|k|²+κ) over the selected modes.
double counterterm_density(const ModeSet& modes, double kappa,
                           std::optional<double> sub_cutoff = std::nullopt);

/// Free-gas particle number N₀(T) = Σ 1/(exp((|k|²+κ)/T) − 1).
double bose_particle_number(const ModeSet& modes, double kappa, double temperature);

/// Bose–Einstein occupation of a single level with energy |k|²+κ.
double bose_occupation(double kinetic, double kappa, double temperature);

struct Coupling {
  double nu = 0.0;  // chemical potential
  double e0 = 0.0;  // energy reference
  double n0 = 0.0;  // N₀(T) over the active set
};

/// ν = ŵ(0)·λ·N₀(T) − κ and E₀ = ½·λ·ŵ(0)·N₀(T)².
Coupling coupling_schedule(const ModeSet& modes, const Potential& w, double kappa,
                           double temperature, double lambda);

/// Temperatures with their couplings; λ = 1/T unless given explicitly.
struct Schedule {
  double kappa = 1.0;
  std::vector<double> temperatures;
  std::vector<double> lambdas;

  static Schedule inverse_temperature(double kappa, std::vector<double> temperatures);
  void validate() const;
};

}  // namespace bose2d
