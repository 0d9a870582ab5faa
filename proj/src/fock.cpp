#include "bose2d/fock.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>

#include <boost/container_hash/hash.hpp>

#include "bose2d/errors.hpp"

namespace bose2d {

std::size_t OccupationHash::operator()(const Occupation& occ) const noexcept {
  return boost::hash_range(occ.begin(), occ.end());
}

SectorBasis::SectorBasis(int particles, std::vector<Occupation> states, std::vector<int> caps)
    : particles_(particles), states_(std::move(states)), caps_(std::move(caps)) {
  index_.reserve(states_.size());
  for (std::size_t i = 0; i < states_.size(); ++i) index_.emplace(states_[i], i);
}

std::optional<std::size_t> SectorBasis::index_of(const Occupation& occ) const {
  auto it = index_.find(occ);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

SectorBasis enumerate_sector(const ModeSet& modes, int particles, std::optional<std::vector<int>> caps) {
  if (particles < 0) throw UsageError("sector particle number must be >= 0");
  const std::size_t m = modes.size();
  std::vector<int> cap(m, particles);
  if (caps) {
    if (caps->size() != m) throw UsageError("caps must have one entry per mode");
    for (std::size_t i = 0; i < m; ++i) {
      if ((*caps)[i] < 0) throw UsageError("caps must be >= 0");
      cap[i] = std::min(particles, (*caps)[i]);
    }
  }
  // capacity of modes i..m-1, for pruning
  std::vector<long> tail(m + 1, 0);
  for (std::size_t i = m; i-- > 0;) tail[i] = tail[i + 1] + cap[i];

  std::vector<Occupation> states;
  Occupation current(m, 0);
  auto fill = [&](auto&& self, std::size_t pos, int remaining) -> void {
    if (pos == m) {
      if (remaining == 0) states.push_back(current);
      return;
    }
    if (remaining > tail[pos]) return;
    const int lo = static_cast<int>(std::max<long>(0, remaining - tail[pos + 1]));
    for (int k = std::min(remaining, cap[pos]); k >= lo; --k) {
      current[pos] = k;
      self(self, pos + 1, remaining - k);
    }
    current[pos] = 0;
  };
  if (m > 0) fill(fill, 0, particles);
  else if (particles == 0) states.emplace_back();

  return SectorBasis(particles, std::move(states), caps ? *caps : std::vector<int>{});
}

std::optional<LadderResult> apply_ladder(const Occupation& state, const ModeSet& modes,
                                         const Mode& mode, Ladder kind, std::span<const int> caps) {
  const auto idx = modes.index_of(mode);
  if (!idx) {
    throw UsageError("mode (" + std::to_string(mode.m1) + "," + std::to_string(mode.m2) +
                     ") is not in the mode set");
  }
  if (state.size() != modes.size()) throw UsageError("occupation length does not match mode set");
  LadderResult out{state, 0.0};
  int& n = out.state[*idx];
  if (kind == Ladder::annihilate) {
    if (n == 0) return std::nullopt;
    out.amplitude = std::sqrt(static_cast<double>(n));
    --n;
  } else {
    if (!caps.empty() && n + 1 > caps[*idx]) return std::nullopt;
    ++n;
    out.amplitude = std::sqrt(static_cast<double>(n));
  }
  return out;
}

std::vector<SparseOperator::Entry> SparseOperator::entries() const {
  std::vector<Entry> out;
  out.reserve(static_cast<std::size_t>(matrix_.nonZeros()));
  for (int r = 0; r < matrix_.outerSize(); ++r) {
    for (Matrix::InnerIterator it(matrix_, r); it; ++it) {
      out.push_back({static_cast<std::size_t>(it.row()), static_cast<std::size_t>(it.col()), it.value()});
    }
  }
  return out;
}

bool SparseOperator::is_hermitian(double tol) const {
  const Matrix transposed = matrix_.transpose();
  const Matrix diff = matrix_ - transposed;
  double worst = 0.0;
  for (int r = 0; r < diff.outerSize(); ++r) {
    for (Matrix::InnerIterator it(diff, r); it; ++it) worst = std::max(worst, std::abs(it.value()));
  }
  return worst <= tol;
}

Eigen::MatrixXd SparseOperator::dense_block(std::span<const std::size_t> indices) const {
  const auto d = static_cast<Eigen::Index>(indices.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto row = static_cast<int>(indices[static_cast<std::size_t>(i)]);
    for (Matrix::InnerIterator it(matrix_, row); it; ++it) {
      auto pos = std::lower_bound(indices.begin(), indices.end(), static_cast<std::size_t>(it.col()));
      if (pos != indices.end() && *pos == static_cast<std::size_t>(it.col())) {
        out(i, pos - indices.begin()) = it.value();
      }
    }
  }
  return out;
}

std::vector<QuarticTerm> quartic_terms(const ModeSet& modes, const Potential& w) {
  std::vector<QuarticTerm> terms;
  const std::size_t m = modes.size();
  for (std::size_t p = 0; p < m; ++p) {
    for (std::size_t q = 0; q < m; ++q) {
      for (std::size_t o1 = 0; o1 < m; ++o1) {
        const Mode k = modes[o1] - modes[p];
        const auto o2 = modes.index_of(modes[q] - k);
        if (!o2) continue;
        const double wk = w(k);
        if (wk == 0.0) continue;
        terms.push_back({o1, *o2, p, q, 0.5 * wk});
      }
    }
  }
  return terms;
}

namespace {

// Applies a†_{out1} a†_{out2} a_{in1} a_{in2} (rightmost first) in place.
// Returns 0 when the state is annihilated.
double apply_quartic(Occupation& occ, const QuarticTerm& t) {
  double amp = 1.0;
  for (std::size_t mode : {t.in2, t.in1}) {
    if (occ[mode] == 0) return 0.0;
    amp *= std::sqrt(static_cast<double>(occ[mode]));
    --occ[mode];
  }
  for (std::size_t mode : {t.out2, t.out1}) {
    ++occ[mode];
    amp *= std::sqrt(static_cast<double>(occ[mode]));
  }
  return amp;
}

}  // namespace

SparseOperator assemble_interaction(const SectorBasis& basis, const ModeSet& modes, const Potential& w) {
  const auto terms = quartic_terms(modes, w);
  const auto dim = static_cast<Eigen::Index>(basis.size());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(basis.size() * 8);
  Occupation scratch;
  for (std::size_t col = 0; col < basis.size(); ++col) {
    for (const QuarticTerm& t : terms) {
      scratch = basis[col];
      const double amp = apply_quartic(scratch, t);
      if (amp == 0.0) continue;
      // states pushed above a cap are outside the truncated space
      if (auto row = basis.index_of(scratch)) {
        triplets.emplace_back(static_cast<int>(*row), static_cast<int>(col), t.coefficient * amp);
      }
    }
  }
  SparseOperator::Matrix mat(dim, dim);
  mat.setFromTriplets(triplets.begin(), triplets.end());
  mat.prune(0.0);
  return SparseOperator(std::move(mat));
}

SparseOperator assemble_hamiltonian(const SectorBasis& basis, const ModeSet& modes, const Potential& w,
                                    double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
  const auto dim = static_cast<Eigen::Index>(basis.size());
  SparseOperator::Matrix kinetic(dim, dim);
  std::vector<Eigen::Triplet<double>> diag;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    double e = 0.0;
    for (std::size_t m = 0; m < modes.size(); ++m) e += modes[m].kinetic() * basis[i][m];
    if (e != 0.0) diag.emplace_back(static_cast<int>(i), static_cast<int>(i), e);
  }
  kinetic.setFromTriplets(diag.begin(), diag.end());
  if (lambda == 0.0) return SparseOperator(std::move(kinetic));
  SparseOperator::Matrix h = kinetic + lambda * assemble_interaction(basis, modes, w).matrix();
  return SparseOperator(std::move(h));
}

DiagonalObservables number_and_momentum(const SectorBasis& basis, const ModeSet& modes) {
  DiagonalObservables out;
  out.number.assign(basis.size(), static_cast<double>(basis.particles()));
  out.momentum.reserve(basis.size());
  for (const Occupation& occ : basis.states()) {
    Mode p{0, 0};
    for (std::size_t m = 0; m < modes.size(); ++m) {
      p.m1 += occ[m] * modes[m].m1;
      p.m2 += occ[m] * modes[m].m2;
    }
    out.momentum.push_back(p);
  }
  return out;
}

std::vector<MomentumBlock> momentum_blocks(const SectorBasis& basis, const ModeSet& modes) {
  const auto obs = number_and_momentum(basis, modes);
  std::map<Mode, std::vector<std::size_t>> grouped;
  for (std::size_t i = 0; i < basis.size(); ++i) grouped[obs.momentum[i]].push_back(i);
  std::vector<MomentumBlock> blocks;
  blocks.reserve(grouped.size());
  for (auto& [p, states] : grouped) blocks.push_back({p, std::move(states)});
  return blocks;
}

}  // namespace bose2d
