#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gdnn/group.hpp"

namespace gdnn {

struct BasisEntry {
  int row = 0;
  int col = 0;
  int sign = 1;
  bool operator==(const BasisEntry&) const = default;
};

// Basis of {X : rho(g) X pi(g)^T = X} as sparse +-1 matrices.
struct BasisSet {
  int rows = 0;
  int cols = 0;
  std::vector<std::vector<BasisEntry>> matrices;
  // Cycles of the arc graph along which the sign product is -1. Every
  // entry on such a component is forced to zero.
  std::vector<std::vector<int>> negative_cycles;

  std::size_t size() const { return matrices.size(); }
  std::vector<std::vector<int>> dense(std::size_t b) const;
};

// Orbit structure of the entries under X -> rho(g) X pi(g)^T for the given
// generator images, resolved by breadth-first two-colouring from the
// smallest entry index of each component (root sign +1). Entries are
// numbered row-major; basis elements are ordered by their smallest entry.
BasisSet build_basis(std::span<const GroupElement> rho_gens, std::span<const GroupElement> pi_gens);

// Requires pi to be an ordinary permutation representation.
BasisSet build_basis_checked(std::span<const GroupElement> rho_gens,
                             std::span<const GroupElement> pi_gens);

struct BasisCheck {
  bool equivariant = true;
  bool independent = true;
  int failing_element = -1;
  int failing_matrix = -1;
  bool ok() const { return equivariant && independent; }
};

// Checks every basis matrix against the images of all group elements.
BasisCheck verify_basis(const BasisSet& basis, std::span<const GroupElement> rho_all,
                        std::span<const GroupElement> pi_all);

inline constexpr int kOracleCap = 400;

// Dimension of the solution space by exact fraction-free elimination of
// the linear constraints. Throws SizeCap if rows * cols exceeds cap.
int oracle_basis_dim(std::span<const GroupElement> rho_gens, std::span<const GroupElement> pi_gens,
                     int cap = kOracleCap);

}  // namespace gdnn
