#include "schur.hpp"

#include <cmath>

namespace lqgame::detail {

using cplx = std::complex<double>;

void swap_adjacent(Eigen::MatrixXcd& T, Eigen::MatrixXcd& U, Eigen::Index k) {
  const cplx t11 = T(k, k);
  const cplx t22 = T(k + 1, k + 1);
  const cplx f = T(k, k + 1);
  const cplx g = t22 - t11;
  if (g == cplx(0.0)) return;

  double c = 0.0;
  cplx s;
  const double fa = std::abs(f);
  const double ga = std::abs(g);
  if (fa == 0.0) {
    c = 0.0;
    s = std::conj(g) / ga;
  } else {
    const double nrm = std::hypot(fa, ga);
    c = fa / nrm;
    s = (f / fa) * std::conj(g) / nrm;
  }

  // Rows k, k+1 of T (from column k+2 on): [x; y] <- [c s; -s^* c] [x; y].
  const Eigen::Index n = T.rows();
  for (Eigen::Index j = k + 2; j < n; ++j) {
    const cplx x = T(k, j);
    const cplx y = T(k + 1, j);
    T(k, j) = c * x + s * y;
    T(k + 1, j) = c * y - std::conj(s) * x;
  }
  // Columns k, k+1 of T (rows above k) and of U, with the conjugate rotation.
  const cplx sc = std::conj(s);
  for (Eigen::Index i = 0; i < k; ++i) {
    const cplx x = T(i, k);
    const cplx y = T(i, k + 1);
    T(i, k) = c * x + sc * y;
    T(i, k + 1) = c * y - s * x;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx x = U(i, k);
    const cplx y = U(i, k + 1);
    U(i, k) = c * x + sc * y;
    U(i, k + 1) = c * y - s * x;
  }
  T(k, k) = t22;
  T(k + 1, k + 1) = t11;
}

Eigen::MatrixXcd solve_triangular_sylvester(const Eigen::MatrixXcd& T11,
                                            const Eigen::MatrixXcd& T22,
                                            const Eigen::MatrixXcd& C) {
  const Eigen::Index k = T11.rows();
  const Eigen::Index q = T22.rows();
  Eigen::MatrixXcd X(k, q);
  // Column j: (T11 - T22(j, j) I) x_j = c_j + sum_{i<j} x_i T22(i, j).
  for (Eigen::Index j = 0; j < q; ++j) {
    Eigen::VectorXcd rhs = C.col(j);
    for (Eigen::Index i = 0; i < j; ++i) rhs += X.col(i) * T22(i, j);
    Eigen::MatrixXcd shifted = T11;
    shifted.diagonal().array() -= T22(j, j);
    X.col(j) = shifted.triangularView<Eigen::Upper>().solve(rhs);
  }
  return X;
}

}  // namespace lqgame::detail
