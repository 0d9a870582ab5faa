#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "bose2d/model.hpp"

namespace bose2d {

/// Occupation numbers n_m, one per mode of the owning ModeSet.
using Occupation = std::vector<int>;

struct OccupationHash {
  std::size_t operator()(const Occupation& occ) const noexcept;
};

/// All occupation vectors with a fixed particle number, in descending
/// lexicographic order ((2,0), (1,1), (0,2), ...).
class SectorBasis {
 public:
  SectorBasis(int particles, std::vector<Occupation> states, std::vector<int> caps);

  int particles() const { return particles_; }
  std::size_t size() const { return states_.size(); }
  const Occupation& operator[](std::size_t i) const { return states_[i]; }
  const std::vector<Occupation>& states() const { return states_; }
  /// Empty when no caps are active.
  const std::vector<int>& caps() const { return caps_; }

  std::optional<std::size_t> index_of(const Occupation& occ) const;

 private:
  int particles_;
  std::vector<Occupation> states_;
  std::vector<int> caps_;
  std::unordered_map<Occupation, std::size_t, OccupationHash> index_;
};

SectorBasis enumerate_sector(const ModeSet& modes, int particles,
                             std::optional<std::vector<int>> caps = std::nullopt);

enum class Ladder { create, annihilate };

struct LadderResult {
  Occupation state;
  double amplitude;
};

/// a_m or a†_m on a single occupation state. Empty result for a_m|n_m = 0⟩
/// or when creation would exceed the cap of that mode.
std::optional<LadderResult> apply_ladder(const Occupation& state, const ModeSet& modes,
                                         const Mode& mode, Ladder kind,
                                         std::span<const int> caps = {});

/// Sector-restricted operator with real entries (all second-quantized
/// matrix elements in the occupation basis are real).
class SparseOperator {
 public:
  using Matrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  struct Entry {
    std::size_t row;
    std::size_t col;
    double value;
  };

  SparseOperator() = default;
  explicit SparseOperator(Matrix m) : matrix_(std::move(m)) { matrix_.makeCompressed(); }

  std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }
  const Matrix& matrix() const { return matrix_; }
  std::vector<Entry> entries() const;
  bool is_hermitian(double tol = 1e-12) const;
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix_); }
  /// Dense principal submatrix on the given (sorted) rows/columns.
  Eigen::MatrixXd dense_block(std::span<const std::size_t> indices) const;

 private:
  Matrix matrix_;
};

/// One admissible quartic term a†_{out1} a†_{out2} a_{in1} a_{in2} with its
/// coefficient ½ŵ(out1 − in1); all four modes lie in the set.
struct QuarticTerm {
  std::size_t out1, out2, in1, in2;
  double coefficient;
};

/// Terms of ½ Σ ŵ(k) a†_{p+k} a†_{q−k} a_p a_q that stay inside the set.
std::vector<QuarticTerm> quartic_terms(const ModeSet& modes, const Potential& w);

/// Interaction operator W restricted to the sector (no λ factor).
SparseOperator assemble_interaction(const SectorBasis& basis, const ModeSet& modes,
                                    const Potential& w);

/// H_λ = Σ|k|² a†_k a_k + λ W on one sector.
SparseOperator assemble_hamiltonian(const SectorBasis& basis, const ModeSet& modes,
                                    const Potential& w, double lambda);

struct DiagonalObservables {
  std::vector<double> number;
  std::vector<Mode> momentum;  // total momentum Σ n_m·m, index units
};

DiagonalObservables number_and_momentum(const SectorBasis& basis, const ModeSet& modes);

/// States of a sector grouped by total momentum, blocks in lexicographic
/// momentum order, states within a block in sector order.
struct MomentumBlock {
  Mode momentum;
  std::vector<std::size_t> states;
};

std::vector<MomentumBlock> momentum_blocks(const SectorBasis& basis, const ModeSet& modes);

}  // namespace bose2d
