#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include "bose2d/errors.hpp"
#include "bose2d/fock.hpp"

using namespace bose2d;

namespace {

long long binom(int n, int k) {
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Ladder operators on the full product space ⊗_m span{|0>..|cap>}, built
// without any reference to sectors.
struct ProductSpace {
  int modes;
  int cap;
  long dim;

  ProductSpace(int m, int c) : modes(m), cap(c), dim(1) {
    for (int i = 0; i < m; ++i) dim *= (c + 1);
  }

  long index(const Occupation& occ) const {
    long idx = 0;
    for (int m = 0; m < modes; ++m) idx = idx * (cap + 1) + occ[m];
    return idx;
  }

  Eigen::SparseMatrix<double> annihilator(int mode) const {
    std::vector<Eigen::Triplet<double>> t;
    Occupation occ(modes);
    for (long i = 0; i < dim; ++i) {
      long rest = i;
      for (int m = modes - 1; m >= 0; --m) {
        occ[m] = static_cast<int>(rest % (cap + 1));
        rest /= (cap + 1);
      }
      if (occ[mode] == 0) continue;
      Occupation lower = occ;
      lower[mode] -= 1;
      t.emplace_back(index(lower), i, std::sqrt(double(occ[mode])));
    }
    Eigen::SparseMatrix<double> a(dim, dim);
    a.setFromTriplets(t.begin(), t.end());
    return a;
  }
};

Eigen::MatrixXd product_space_hamiltonian(const SectorBasis& basis, const ModeSet& s, const Potential& w,
                                          double lambda) {
  const int n = basis.particles();
  const ProductSpace space(static_cast<int>(s.size()), n);
  std::vector<Eigen::SparseMatrix<double>> a;
  for (int m = 0; m < static_cast<int>(s.size()); ++m) a.push_back(space.annihilator(m));
  Eigen::SparseMatrix<double> h(space.dim, space.dim);
  for (std::size_t m = 0; m < s.size(); ++m) {
    h += s[m].kinetic() * Eigen::SparseMatrix<double>(a[m].transpose() * a[m]);
  }
  for (const Mode& p : s) {
    for (const Mode& q : s) {
      for (const Mode& k : s.transfers()) {
        const auto o1 = s.index_of(p + k);
        const auto o2 = s.index_of(q - k);
        if (!o1 || !o2) continue;
        const double c = 0.5 * lambda * w(k);
        const auto ip = *s.index_of(p);
        const auto iq = *s.index_of(q);
        const Eigen::SparseMatrix<double> term =
            Eigen::SparseMatrix<double>(a[*o1].transpose()) * Eigen::SparseMatrix<double>(a[*o2].transpose()) *
            a[ip] * a[iq];
        h += c * term;
      }
    }
  }
  const Eigen::MatrixXd dense(h);
  const auto d = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd out(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      out(i, j) = dense(space.index(basis[static_cast<std::size_t>(i)]), space.index(basis[static_cast<std::size_t>(j)]));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("sector enumeration on two modes") {
  const ModeSet s = ModeSet::from_modes({{0, 0}, {1, 0}, {-1, 0}});
  const SectorBasis b = enumerate_sector(s, 2, std::vector<int>{2, 2, 0});
  REQUIRE(b.size() == 3);
  CHECK(b[0] == Occupation{2, 0, 0});
  CHECK(b[1] == Occupation{1, 1, 0});
  CHECK(b[2] == Occupation{0, 2, 0});
}

TEST_CASE("vacuum sector") {
  for (double r : {0.0, 1.0, 2.0}) {
    const ModeSet s = ModeSet::disk(r);
    const SectorBasis b = enumerate_sector(s, 0);
    REQUIRE(b.size() == 1);
    CHECK(b[0] == Occupation(s.size(), 0));
  }
}

TEST_CASE("sector sizes follow stars and bars") {
  const ModeSet five = ModeSet::disk(1.0);
  CHECK(enumerate_sector(five, 3).size() == 35);
  for (double r : {0.0, 1.0, 1.5}) {
    const ModeSet s = ModeSet::disk(r);
    const int m = static_cast<int>(s.size());
    for (int n = 0; n <= 6; ++n) {
      CHECK(static_cast<long long>(enumerate_sector(s, n).size()) == binom(n + m - 1, m - 1));
    }
  }
}

TEST_CASE("sector states are complete, distinct, descending and capped") {
  const ModeSet s = ModeSet::disk(1.0);
  const std::vector<int> caps{1, 2, 5, 0, 3};
  const SectorBasis b = enumerate_sector(s, 4, caps);
  std::set<Occupation> seen;
  for (std::size_t i = 0; i < b.size(); ++i) {
    int total = 0;
    for (std::size_t m = 0; m < caps.size(); ++m) {
      CHECK(b[i][m] >= 0);
      CHECK(b[i][m] <= caps[m]);
      total += b[i][m];
    }
    CHECK(total == 4);
    if (i > 0) CHECK(b[i - 1] > b[i]);
    CHECK(b.index_of(b[i]) == i);
    seen.insert(b[i]);
  }
  CHECK(seen.size() == b.size());
  // brute-force count
  std::size_t count = 0;
  for (int a = 0; a <= 1; ++a)
    for (int c = 0; c <= 2; ++c)
      for (int d = 0; d <= 5; ++d)
        for (int e = 0; e <= 3; ++e) count += (a + c + d + e == 4);
  CHECK(b.size() == count);
  CHECK_FALSE(b.index_of(Occupation{0, 0, 0, 4, 0}).has_value());
}

TEST_CASE("sector enumeration rejects bad input") {
  const ModeSet s = ModeSet::disk(1.0);
  CHECK_THROWS_AS(enumerate_sector(s, -1), UsageError);
  CHECK_THROWS_AS(enumerate_sector(s, 2, std::vector<int>{1, 1}), UsageError);
}

TEST_CASE("ladder operators") {
  const ModeSet s = ModeSet::disk(0.0);
  const Mode z{0, 0};
  CHECK_FALSE(apply_ladder({0}, s, z, Ladder::annihilate).has_value());
  const auto up = apply_ladder({3}, s, z, Ladder::create);
  REQUIRE(up);
  CHECK(up->state == Occupation{4});
  CHECK(up->amplitude == doctest::Approx(2.0));
  const auto down = apply_ladder({5}, s, z, Ladder::annihilate);
  REQUIRE(down);
  const auto back = apply_ladder(down->state, s, z, Ladder::create);
  REQUIRE(back);
  CHECK(back->state == Occupation{5});
  CHECK(down->amplitude * back->amplitude == doctest::Approx(5.0).epsilon(1e-14));
  const std::vector<int> caps{3};
  CHECK_FALSE(apply_ladder({3}, s, z, Ladder::create, caps).has_value());
  CHECK(apply_ladder({2}, s, z, Ladder::create, caps).has_value());
  CHECK_THROWS_AS(apply_ladder({1}, s, Mode{1, 0}, Ladder::create), UsageError);
}

TEST_CASE("single-mode interaction is (lambda w0/2) n(n-1)") {
  const ModeSet s = ModeSet::disk(0.0);
  for (int n = 0; n <= 6; ++n) {
    const SectorBasis b = enumerate_sector(s, n);
    const Eigen::MatrixXd h = assemble_hamiltonian(b, s, Potential::constant(1.5, 0.0), 0.7).dense();
    REQUIRE(h.rows() == 1);
    CHECK(h(0, 0) == doctest::Approx(0.5 * 0.7 * 1.5 * n * (n - 1)));
  }
  const SectorBasis two = enumerate_sector(s, 2);
  CHECK(assemble_hamiltonian(two, s, Potential::constant(1.0, 0.0), 1.0).dense()(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("kinetic diagonal") {
  const ModeSet s = ModeSet::disk(1.0);
  const SectorBasis b = enumerate_sector(s, 1);
  const Eigen::MatrixXd h = assemble_hamiltonian(b, s, Potential::constant(1.0, 3.0), 0.0).dense();
  const double k2 = 4.0 * std::numbers::pi * std::numbers::pi;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const bool is_zero = b[i][2] == 1;
    CHECK(h(i, i) == doctest::Approx(is_zero ? 0.0 : k2).epsilon(1e-14));
  }
  CHECK((h - Eigen::MatrixXd(h.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Hamiltonian matches the product-space construction") {
  const ModeSet three = ModeSet::from_modes({{0, 0}, {1, 0}, {-1, 0}});
  const ModeSet five = ModeSet::disk(1.0);
  const Potential g = Potential::gaussian(1.3, 0.02);
  for (int n = 0; n <= 4; ++n) {
    const SectorBasis b = enumerate_sector(three, n);
    const Eigen::MatrixXd mine = assemble_hamiltonian(b, three, g, 0.37).dense();
    const Eigen::MatrixXd ref = product_space_hamiltonian(b, three, g, 0.37);
    CHECK((mine - ref).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
  }
  for (int n = 2; n <= 3; ++n) {
    const SectorBasis b = enumerate_sector(five, n);
    const Eigen::MatrixXd mine = assemble_hamiltonian(b, five, g, 0.8).dense();
    const Eigen::MatrixXd ref = product_space_hamiltonian(b, five, g, 0.8);
    CHECK((mine - ref).cwiseAbs().maxCoeff() <= 1e-12 * ref.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("Hamiltonian is Hermitian, deterministic and conserves momentum") {
  const ModeSet s = ModeSet::disk(std::sqrt(2.0));
  const Potential g = Potential::gaussian(1.0, 0.02);
  std::mt19937 rng(17);
  for (int trial = 0; trial < 4; ++trial) {
    const int n = 2 + trial;
    std::vector<int> caps(s.size());
    for (int& c : caps) c = std::uniform_int_distribution<int>(1, n)(rng);
    const SectorBasis b = enumerate_sector(s, n, caps);
    const SparseOperator h = assemble_hamiltonian(b, s, g, 0.5);
    CHECK(h.is_hermitian(1e-12));
    const SparseOperator again = assemble_hamiltonian(b, s, g, 0.5);
    const auto e1 = h.entries();
    const auto e2 = again.entries();
    REQUIRE(e1.size() == e2.size());
    bool same = true;
    for (std::size_t i = 0; i < e1.size(); ++i) {
      same = same && e1[i].row == e2[i].row && e1[i].col == e2[i].col && e1[i].value == e2[i].value;
    }
    CHECK(same);

    const auto obs = number_and_momentum(b, s);
    const Eigen::MatrixXd hd = h.dense();
    for (int axis = 0; axis < 2; ++axis) {
      Eigen::VectorXd p(b.size());
      for (std::size_t i = 0; i < b.size(); ++i) p(i) = axis == 0 ? obs.momentum[i].m1 : obs.momentum[i].m2;
      const Eigen::MatrixXd comm = hd * p.asDiagonal() - p.asDiagonal() * hd;
      CHECK(comm.cwiseAbs().maxCoeff() < 1e-10);
    }
    for (double v : obs.number) CHECK(v == n);
  }
}

TEST_CASE("interaction is positive semidefinite when w(x) >= 0") {
  const ModeSet s = ModeSet::disk(1.0);
  // Gaussian decay and 1 + cos(2 pi x1) both have nonnegative position-space form
  const Potential cosine = Potential::table({{{0, 0}, 1.0}, {{1, 0}, 0.5}, {{-1, 0}, 0.5}, {{0, 1}, 0.0},
                                             {{0, -1}, 0.0}, {{1, 1}, 0.0}, {{-1, -1}, 0.0}, {{1, -1}, 0.0},
                                             {{-1, 1}, 0.0}, {{2, 0}, 0.0}, {{-2, 0}, 0.0}, {{0, 2}, 0.0},
                                             {{0, -2}, 0.0}});
  for (const Potential& w : {Potential::gaussian(1.0, 0.02), cosine}) {
    for (int n = 1; n <= 5; ++n) {
      const SectorBasis b = enumerate_sector(s, n);
      REQUIRE(b.size() <= 200);
      const Eigen::MatrixXd v = assemble_interaction(b, s, w).dense();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v, Eigen::EigenvaluesOnly);
      CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    }
  }
}

TEST_CASE("a flat transfer ball gives an indefinite interaction") {
  // w(x) = 1 + 2cos(2 pi x1) + 2cos(2 pi x2) dips to -3
  const ModeSet s = ModeSet::disk(1.0);
  const SectorBasis b = enumerate_sector(s, 2);
  const Eigen::MatrixXd v = assemble_interaction(b, s, Potential::constant(1.0, 1.0)).dense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v, Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().minCoeff() < -0.5);
}

TEST_CASE("quartic terms keep all four modes in the set") {
  const ModeSet s = ModeSet::disk(1.0);
  const auto terms = quartic_terms(s, Potential::gaussian(1.0, 0.02));
  CHECK_FALSE(terms.empty());
  for (const auto& t : terms) {
    const Mode in = s[t.in1] + s[t.in2];
    const Mode out = s[t.out1] + s[t.out2];
    CHECK(in == out);
    CHECK(t.coefficient > 0.0);
  }
  CHECK(quartic_terms(s, Potential::zero()).empty());
}

TEST_CASE("number and momentum observables") {
  const ModeSet s = ModeSet::disk(1.0);
  const auto vac = number_and_momentum(enumerate_sector(s, 0), s);
  CHECK(vac.number[0] == 0.0);
  CHECK(vac.momentum[0] == Mode{});
  const SectorBasis two = enumerate_sector(s, 2);
  Occupation pair(5, 0);
  pair[*s.index_of(Mode{0, 1})] = 1;
  pair[*s.index_of(Mode{0, -1})] = 1;
  const auto obs = number_and_momentum(two, s);
  CHECK(obs.momentum[*two.index_of(pair)] == Mode{});
  Occupation both_up(5, 0);
  both_up[*s.index_of(Mode{1, 0})] = 2;
  CHECK(obs.momentum[*two.index_of(both_up)] == Mode{2, 0});
}

TEST_CASE("momentum blocks partition the sector") {
  const ModeSet s = ModeSet::disk(1.0);
  const SectorBasis b = enumerate_sector(s, 3);
  const auto blocks = momentum_blocks(b, s);
  const auto obs = number_and_momentum(b, s);
  std::size_t total = 0;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i > 0) CHECK(blocks[i - 1].momentum < blocks[i].momentum);
    for (std::size_t st : blocks[i].states) CHECK(obs.momentum[st] == blocks[i].momentum);
    CHECK(std::is_sorted(blocks[i].states.begin(), blocks[i].states.end()));
    total += blocks[i].states.size();
  }
  CHECK(total == b.size());
}
