#pragma once
// Complex Schur helpers shared by the Riccati solver and the Gramian gains.
#include <complex>

#include <Eigen/Dense>

namespace lqgame::detail {

// Swaps the adjacent diagonal entries k, k+1 of the upper-triangular T with a
// unitary Givens rotation, updating the Schur vectors U accordingly.
void swap_adjacent(Eigen::MatrixXcd& T, Eigen::MatrixXcd& U, Eigen::Index k);

// Bubble sort of the Schur diagonal so that entries for which `before(a, b)`
// holds move ahead. Only adjacent swaps, so the leading block stays invariant.
template <typename Less>
void reorder_schur(Eigen::MatrixXcd& T, Eigen::MatrixXcd& U, Less before) {
  const Eigen::Index n = T.rows();
  for (Eigen::Index pass = 0; pass < n; ++pass) {
    bool swapped = false;
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
      if (before(T(k + 1, k + 1), T(k, k))) {
        swap_adjacent(T, U, k);
        swapped = true;
      }
    }
    if (!swapped) break;
  }
}

// X with T11 X - X T22 = C for upper-triangular T11, T22 with disjoint spectra.
Eigen::MatrixXcd solve_triangular_sylvester(const Eigen::MatrixXcd& T11,
                                            const Eigen::MatrixXcd& T22,
                                            const Eigen::MatrixXcd& C);

}  // namespace lqgame::detail
