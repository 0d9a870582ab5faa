#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bose2d/errors.hpp"
#include "bose2d/model.hpp"

using namespace bose2d;

namespace {

// Straight summation in long double, independent of the library loops.
long double direct_bose_number(const ModeSet& s, long double kappa, long double t) {
  long double sum = 0.0L;
  for (const Mode& m : s) {
    const long double k2 = 4.0L * std::numbers::pi_v<long double> * std::numbers::pi_v<long double> *
                           (m.m1 * m.m1 + m.m2 * m.m2);
    sum += 1.0L / (std::exp((k2 + kappa) / t) - 1.0L);
  }
  return sum;
}

}  // namespace

TEST_CASE("disk mode sets are ordered, symmetric and contain zero") {
  const ModeSet s = ModeSet::disk(1.0);
  REQUIRE(s.size() == 5);
  CHECK(s[0] == Mode{-1, 0});
  CHECK(s[1] == Mode{0, -1});
  CHECK(s[2] == Mode{0, 0});
  CHECK(s[3] == Mode{0, 1});
  CHECK(s[4] == Mode{1, 0});
  for (const Mode& m : s) CHECK(s.contains(-m));
  CHECK(ModeSet::disk(0.0).size() == 1);
  CHECK(ModeSet::disk(std::sqrt(2.0)).size() == 9);
  CHECK(ModeSet::disk(5.0).size() == 81);
}

TEST_CASE("momentum ball uses |k| = 2 pi |m|") {
  CHECK(ModeSet::momentum_ball(kTwoPi * 0.99).size() == 1);
  CHECK(ModeSet::momentum_ball(kTwoPi * 1.01).size() == 5);
}

TEST_CASE("explicit mode sets are validated") {
  CHECK_NOTHROW(ModeSet::from_modes({{0, 0}, {2, 1}, {-2, -1}}));
  CHECK_THROWS_AS(ModeSet::from_modes({{1, 0}, {-1, 0}}), ConfigError);
  CHECK_THROWS_AS(ModeSet::from_modes({{0, 0}, {1, 0}}), ConfigError);
  CHECK_THROWS_AS(ModeSet::from_modes({{0, 0}, {0, 0}}), ConfigError);
  const ModeSet s = ModeSet::from_modes({{1, 0}, {0, 0}, {-1, 0}});
  CHECK(s[0] == Mode{-1, 0});
  CHECK(s.index_of(Mode{1, 0}) == 2u);
  CHECK_FALSE(s.index_of(Mode{0, 1}).has_value());
}

TEST_CASE("nested sets and restriction") {
  const ModeSet big = ModeSet::disk(3.0);
  const ModeSet small = ModeSet::disk(1.5);
  CHECK(small.is_subset_of(big));
  CHECK_FALSE(big.is_subset_of(small));
  CHECK(big.restricted(1.5) == small);
}

TEST_CASE("transfers are the sorted pairwise differences") {
  const ModeSet s = ModeSet::disk(1.0);
  const auto t = s.transfers();
  // differences of the five modes: |q|^2 in {0, 1, 2, 4}
  CHECK(t.size() == 13);
  CHECK(std::is_sorted(t.begin(), t.end()));
  for (const Mode& q : t) CHECK(q.index_norm2() <= 4);
}

TEST_CASE("potential families") {
  const Potential c = Potential::constant(2.0, 1.0);
  CHECK(c(Mode{0, 0}) == 2.0);
  CHECK(c(Mode{1, 0}) == 2.0);
  CHECK(c(Mode{1, 1}) == 0.0);
  const Potential g = Potential::gaussian(1.0, 0.02);
  CHECK(g(Mode{1, 0}) == doctest::Approx(std::exp(-0.02 * 4.0 * std::numbers::pi * std::numbers::pi)));
  CHECK(g(Mode{2, 1}) == g(Mode{-2, -1}));
  CHECK(Potential::zero().is_identically_zero());
  CHECK_FALSE(g.is_identically_zero());
  CHECK_THROWS_AS(Potential::constant(-1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(Potential::gaussian(1.0, -0.1), ConfigError);
}

TEST_CASE("tabulated potential is checked for sign, evenness and coverage") {
  const Potential t = Potential::table({{{0, 0}, 1.0}, {{1, 0}, 0.5}, {{-1, 0}, 0.5}});
  CHECK(t(Mode{1, 0}) == 0.5);
  CHECK(t.covers(Mode{-1, 0}));
  CHECK_FALSE(t.covers(Mode{0, 1}));
  CHECK_THROWS_AS(t(Mode{0, 1}), ConfigError);
  CHECK_THROWS_AS(Potential::table({{{0, 0}, -1.0}}), ConfigError);
  CHECK_THROWS_AS(Potential::table({{{0, 0}, 1.0}, {{1, 0}, 0.5}, {{-1, 0}, 0.25}}), ConfigError);
  CHECK_THROWS_AS(Potential::table({{{0, 0}, 1.0}, {{1, 0}, 0.5}}), ConfigError);
}

TEST_CASE("summability weight of a constant potential") {
  const ModeSet s = ModeSet::disk(1.0);
  const Potential c = Potential::constant(1.0, 0.0);
  CHECK(c.summability_weight(s) == doctest::Approx(1.0));
}

TEST_CASE("counterterm density") {
  CHECK(counterterm_density(ModeSet::disk(0.0), 1.0) == 1.0);
  const double four_pi2 = 4.0 * std::numbers::pi * std::numbers::pi;
  CHECK(counterterm_density(ModeSet::disk(1.0), 1.0) == doctest::Approx(1.0 + 4.0 / (four_pi2 + 1.0)).epsilon(1e-14));
  CHECK(counterterm_density(ModeSet::disk(1.0), 1.0) == doctest::Approx(1.09882).epsilon(1e-5));
  CHECK(counterterm_density(ModeSet::disk(3.0), 1.0, 1.0) == counterterm_density(ModeSet::disk(1.0), 1.0));
  CHECK_THROWS_AS(counterterm_density(ModeSet::disk(1.0), 0.0), DomainError);
  CHECK_THROWS_AS(counterterm_density(ModeSet::disk(1.0), -1.0), DomainError);
}

TEST_CASE("counterterm decreases monotonically to zero in kappa") {
  const ModeSet s = ModeSet::disk(2.0);
  double prev = counterterm_density(s, 0.1);
  for (double kappa = 0.2; kappa < 1e9; kappa *= 3.0) {
    const double c = counterterm_density(s, kappa);
    CHECK(c < prev);
    CHECK(c > 0.0);
    prev = c;
  }
  CHECK(prev < 1e-7);
}

TEST_CASE("counterterm is additive over a split of the modes") {
  const ModeSet s = ModeSet::disk(2.0);
  double by_mode = 0.0;
  for (const Mode& m : s) by_mode += 1.0 / (m.kinetic() + 1.5);
  CHECK(counterterm_density(s, 1.5) == doctest::Approx(by_mode).epsilon(1e-14));
}

TEST_CASE("Bose particle number") {
  const ModeSet zero = ModeSet::disk(0.0);
  CHECK(bose_particle_number(zero, 1.0, 1.0) == doctest::Approx(0.5819767068693265).epsilon(1e-14));
  CHECK(bose_particle_number(zero, 1.0, 100.0) == doctest::Approx(99.50083333194445).epsilon(1e-13));
  const ModeSet s = ModeSet::disk(2.0);
  for (double t : {0.5, 3.0, 40.0, 700.0}) {
    CHECK(bose_particle_number(s, 1.0, t) == doctest::Approx(double(direct_bose_number(s, 1.0L, t))).epsilon(1e-12));
  }
  CHECK_THROWS_AS(bose_particle_number(zero, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(bose_particle_number(zero, 0.0, 1.0), DomainError);
}

TEST_CASE("N0 increases with T and decreases with kappa") {
  const ModeSet s = ModeSet::disk(2.0);
  double prev = 0.0;
  for (double t = 0.25; t < 1e4; t *= 1.7) {
    const double n = bose_particle_number(s, 1.0, t);
    CHECK(n > prev);
    prev = n;
  }
  prev = INFINITY;
  for (double kappa = 0.01; kappa < 1e3; kappa *= 2.3) {
    const double n = bose_particle_number(s, kappa, 10.0);
    CHECK(n < prev);
    prev = n;
  }
}

TEST_CASE("N0/T approaches the counterterm with a shrinking gap") {
  const ModeSet s = ModeSet::disk(1.0);
  const double c = counterterm_density(s, 1.0);
  const double g3 = std::abs(bose_particle_number(s, 1.0, 1e3) / 1e3 - c) / c;
  const double g4 = std::abs(bose_particle_number(s, 1.0, 1e4) / 1e4 - c) / c;
  CHECK(g4 < g3);
  CHECK(g4 < 1e-3);
}

TEST_CASE("N0 on growing disks behaves like T log T") {
  for (double t : {1e2, 1e3, 1e4}) {
    const double n1 = bose_particle_number(ModeSet::momentum_ball(std::sqrt(100.0 * t)), 1.0, t);
    const double n2 = bose_particle_number(ModeSet::momentum_ball(std::sqrt(200.0 * t)), 1.0, 2.0 * t);
    CHECK(n2 / n1 > 1.9);
    CHECK(n2 / n1 < 2.3);
  }
}

TEST_CASE("coupling schedule") {
  const ModeSet zero = ModeSet::disk(0.0);
  const Potential unit = Potential::constant(1.0, 0.0);
  const Coupling c = coupling_schedule(zero, unit, 1.0, 1.0, 1.0);
  CHECK(c.n0 == doctest::Approx(0.5819767068693265).epsilon(1e-14));
  CHECK(c.nu == doctest::Approx(-0.418023).epsilon(1e-6));
  CHECK(c.e0 == doctest::Approx(0.169349).epsilon(1e-5));
  CHECK(c.nu == doctest::Approx(c.n0 - 1.0).epsilon(1e-15));
  CHECK(c.e0 == doctest::Approx(0.5 * c.n0 * c.n0).epsilon(1e-15));

  const Coupling off = coupling_schedule(zero, Potential::zero(), 2.0, 5.0, 0.2);
  CHECK(off.nu == -2.0);
  CHECK(off.e0 == 0.0);
  const Coupling free = coupling_schedule(zero, unit, 2.0, 5.0, 0.0);
  CHECK(free.nu == -2.0);
  CHECK(free.e0 == 0.0);
  CHECK_THROWS_AS(coupling_schedule(zero, unit, 1.0, 1.0, -0.5), DomainError);
}

TEST_CASE("schedule validation") {
  const Schedule s = Schedule::inverse_temperature(1.0, {4, 8, 16});
  CHECK(s.lambdas == std::vector<double>{0.25, 0.125, 0.0625});
  CHECK_NOTHROW(s.validate());
  Schedule bad = s;
  bad.temperatures = {4, 4, 16};
  CHECK_THROWS(bad.validate());
  bad = s;
  bad.kappa = 0.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}
