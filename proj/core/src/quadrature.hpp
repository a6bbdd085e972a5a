#pragma once
// Adaptive Gauss-Kronrod 7/15 quadrature for matrix-valued integrands.
#include <algorithm>
#include <array>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lqgame/errors.hpp"

namespace lqgame::detail {

// Abscissae on [-1, 1] (non-negative half) and weights.
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for kKronrodNodes[1], [3], [5], [7].
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename Matrix>
struct Panel {
  double a;
  double b;
  Matrix kronrod;
  double error;
};

template <typename Matrix, typename F>
Panel<Matrix> integrate_panel(const F& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  const Matrix centre = f(mid);
  Matrix kronrod = kKronrodWeights[7] * centre;
  Matrix gauss = kGaussWeights[3] * centre;
  for (std::size_t i = 0; i + 1 < kKronrodNodes.size(); ++i) {
    const double dx = half * kKronrodNodes[i];
    const Matrix pair = f(mid - dx) + f(mid + dx);
    kronrod += kKronrodWeights[i] * pair;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * pair;
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, (kronrod - gauss).norm()};
}

// Bisects the worst panel until the summed error estimate falls below
// rel_tol * ||integral||_F. Throws NumericalFailure after max_panels panels.
template <typename Matrix, typename F>
Matrix integrate_adaptive(const F& f, double a, double b, double rel_tol, int max_panels,
                          const std::string& who) {
  std::vector<Panel<Matrix>> panels;
  panels.push_back(integrate_panel<Matrix>(f, a, b));
  for (;;) {
    Matrix total = Matrix::Zero(panels.front().kronrod.rows(), panels.front().kronrod.cols());
    double error = 0.0;
    for (const auto& p : panels) {
      total += p.kronrod;
      error += p.error;
    }
    const double scale = std::max(total.norm(), std::numeric_limits<double>::min());
    if (error <= rel_tol * scale) return total;
    if (static_cast<int>(panels.size()) >= max_panels || !total.allFinite()) {
      throw NumericalFailure(who + ": quadrature did not converge");
    }
    auto worst = std::max_element(panels.begin(), panels.end(),
                                  [](const auto& l, const auto& r) { return l.error < r.error; });
    const double lo = worst->a;
    const double hi = worst->b;
    const double mid = 0.5 * (lo + hi);
    *worst = integrate_panel<Matrix>(f, lo, mid);
    panels.push_back(integrate_panel<Matrix>(f, mid, hi));
  }
}

}  // namespace lqgame::detail
