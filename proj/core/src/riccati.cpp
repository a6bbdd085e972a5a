#include "lqgame/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Eigenvalues>

#include "lqgame/errors.hpp"
#include "lqgame/linalg.hpp"
#include "schur.hpp"

namespace lqgame {

namespace {

using cplx = std::complex<double>;

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& R, const char* name) {
  Eigen::LLT<Eigen::MatrixXd> llt(R);
  if (R.rows() > 0 && llt.info() != Eigen::Success) {
    throw ContractViolation(std::string(name) + " not positive definite");
  }
  return llt.solve(Eigen::MatrixXd::Identity(R.rows(), R.cols()));
}

Eigen::MatrixXcd riccati_residual(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& S,
                                  const Eigen::MatrixXcd& Q, const Eigen::MatrixXcd& P) {
  return A.transpose() * P + P * A + Q - P * S * P;
}

Eigen::MatrixXcd hermitian_part(const Eigen::MatrixXcd& P) { return 0.5 * (P + P.adjoint()); }

}  // namespace

std::string to_string(NoSolutionReason reason) {
  switch (reason) {
    case NoSolutionReason::ImaginaryAxis:
      return "imaginary-axis";
    case NoSolutionReason::GraphSingular:
      return "graph-singular";
  }
  return "unknown";
}

CompositeWeights composite_weights(const Eigen::MatrixXd& B1, const Eigen::MatrixXd& B2,
                                   const Eigen::MatrixXd& R1, const Eigen::MatrixXd& R2) {
  const auto n = B1.rows();
  const auto m1 = B1.cols();
  const auto m2 = B2.cols();
  CompositeWeights w;
  w.B.resize(n, m1 + m2);
  w.B << B1, B2;
  w.R = Eigen::MatrixXd::Zero(m1 + m2, m1 + m2);
  w.R.topLeftCorner(m1, m1) = R1;
  w.R.bottomRightCorner(m2, m2) = -R2;
  const Eigen::MatrixXd S =
      B1 * spd_inverse(R1, "R1") * B1.transpose() - B2 * spd_inverse(R2, "R2") * B2.transpose();
  w.S = 0.5 * (S + S.transpose());
  return w;
}

double are_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& S, const Eigen::MatrixXd& Qw,
                    const Eigen::MatrixXcd& P) {
  return riccati_residual(A.cast<cplx>(), S.cast<cplx>(), Qw.cast<cplx>(), P).norm();
}

RiccatiResult solve_game_are(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B1,
                             const Eigen::MatrixXd& B2, const Eigen::MatrixXd& Qw,
                             const Eigen::MatrixXd& R1, const Eigen::MatrixXd& R2,
                             const RiccatiOptions& options) {
  const auto n = A.rows();
  if (A.cols() != n || B1.rows() != n || B2.rows() != n || Qw.rows() != n || Qw.cols() != n) {
    throw ContractViolation("solve_game_are: dimension mismatch");
  }
  const Eigen::MatrixXd S = composite_weights(B1, B2, R1, R2).S;
  const Eigen::MatrixXd Qs = 0.5 * (Qw + Qw.transpose());

  Eigen::MatrixXd H(2 * n, 2 * n);
  H << A, -S, -Qs, -A.transpose();

  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(H.cast<cplx>());
  if (schur.info() != Eigen::Success) {
    throw NumericalFailure("solve_game_are: Schur decomposition of the Hamiltonian failed");
  }
  Eigen::MatrixXcd T = schur.matrixT();
  Eigen::MatrixXcd U = schur.matrixU();

  const double axis_tol = 1e-7 * (1.0 + H.norm());
  Eigen::Index stable_count = 0;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    const double re = T(i, i).real();
    if (std::abs(re) <= axis_tol) {
      return NoStabilizingSolution{NoSolutionReason::ImaginaryAxis,
                                   "Hamiltonian eigenvalue " + std::to_string(re) + "+" +
                                       std::to_string(T(i, i).imag()) + "j on the imaginary axis"};
    }
    if (re < 0.0) ++stable_count;
  }
  if (stable_count != n) {
    return NoStabilizingSolution{NoSolutionReason::ImaginaryAxis,
                                 "stable subspace has dimension " + std::to_string(stable_count)};
  }

  if (options.ordering == StableOrdering::ByRealPart) {
    detail::reorder_schur(T, U, [](cplx a, cplx b) { return a.real() < b.real(); });
  } else {
    // Stable block first, but stable eigenvalues in reverse real-part order.
    detail::reorder_schur(T, U, [](cplx a, cplx b) {
      const bool sa = a.real() < 0.0;
      const bool sb = b.real() < 0.0;
      if (sa != sb) return sa;
      return a.real() > b.real();
    });
  }

  const Eigen::MatrixXcd X1 = U.topLeftCorner(n, n);
  const Eigen::MatrixXcd X2 = U.bottomLeftCorner(n, n);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(X1);
  const auto& sv = svd.singularValues();
  const double smin = n > 0 ? sv(n - 1) : 1.0;
  const double cond = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
  if (!(cond <= kGraphConditionLimit)) {
    return NoStabilizingSolution{NoSolutionReason::GraphSingular,
                                 "graph basis condition " + std::to_string(cond)};
  }

  Eigen::MatrixXcd P = hermitian_part(X1.transpose().partialPivLu().solve(X2.transpose()).transpose());

  const Eigen::MatrixXcd Ac = A.cast<cplx>();
  const Eigen::MatrixXcd Sc = S.cast<cplx>();
  const Eigen::MatrixXcd Qc = Qs.cast<cplx>();
  double residual = riccati_residual(Ac, Sc, Qc, P).norm();
  for (int step = 0; step < options.max_newton_steps; ++step) {
    const double target = 1e-14 * (1.0 + P.norm()) * (1.0 + P.norm());
    if (residual <= target) break;
    const Eigen::MatrixXcd Acl = Ac - Sc * P;
    Eigen::MatrixXcd delta;
    try {
      delta = solve_lyapunov(Acl, -riccati_residual(Ac, Sc, Qc, P));
    } catch (const NumericalFailure&) {
      break;
    }
    const Eigen::MatrixXcd candidate = hermitian_part(P + delta);
    const double cand_residual = riccati_residual(Ac, Sc, Qc, candidate).norm();
    if (!(cand_residual < residual)) break;
    P = candidate;
    residual = cand_residual;
  }

  GameRiccatiSolution sol;
  sol.P = P;
  const HermitianParts parts = hermitian_split(P);
  sol.P1 = parts.P1;
  sol.P2 = parts.P2;
  sol.A_cl_P = Ac - Sc * P;
  sol.A_cl_P1 = A - S * sol.P1;
  sol.residual = residual;
  sol.stabilizing_P = spectral_abscissa(sol.A_cl_P) < -kStabilityMargin;
  sol.stabilizing_P1 = spectral_abscissa(sol.A_cl_P1) < -kStabilityMargin;
  return sol;
}

HermitianParts hermitian_split(const Eigen::MatrixXcd& P) {
  if (P.rows() != P.cols()) throw ContractViolation("hermitian_split: P must be square");
  if ((P - P.adjoint()).norm() > 1e-8 * std::max(1.0, P.norm())) {
    throw ContractViolation("hermitian_split: P is not Hermitian");
  }
  const Eigen::MatrixXd re = P.real();
  const Eigen::MatrixXd im = P.imag();
  return {0.5 * (re + re.transpose()), 0.5 * (im - im.transpose())};
}

NashGains gains_from_p1(const Eigen::MatrixXd& P1, const Eigen::MatrixXd& B1,
                        const Eigen::MatrixXd& B2, const Eigen::MatrixXd& R1,
                        const Eigen::MatrixXd& R2) {
  return {-spd_inverse(R1, "R1") * B1.transpose() * P1, spd_inverse(R2, "R2") * B2.transpose() * P1};
}

NashGains nash_gains(const GameRiccatiSolution& sol, const Eigen::MatrixXd& B1,
                     const Eigen::MatrixXd& B2, const Eigen::MatrixXd& R1,
                     const Eigen::MatrixXd& R2) {
  if (!sol.stabilizing_P || !sol.stabilizing_P1) {
    throw ContractViolation("nash_gains: solution is not stabilizing for both P and P1");
  }
  return gains_from_p1(sol.P1, B1, B2, R1, R2);
}

double nash_value(const Eigen::MatrixXd& P1, const Eigen::MatrixXd& D) {
  if (D.size() == 0) return 0.0;
  return (D.transpose() * P1 * D).trace();
}

ContinuityReport riccati_continuity_probe(const GameModel& model, const std::vector<double>& scales,
                                          std::uint64_t seed) {
  ContinuityReport report;
  const RiccatiResult nominal = solve_game_are(model);
  const auto* base = std::get_if<GameRiccatiSolution>(&nominal);
  if (base == nullptr || !base->stabilizing_P) {
    report.note = "probe inapplicable: nominal model has no stabilizing solution";
    return report;
  }
  report.applicable = true;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  auto direction = [&](const Eigen::MatrixXd& like) {
    Eigen::MatrixXd E(like.rows(), like.cols());
    for (Eigen::Index i = 0; i < E.size(); ++i) E.data()[i] = unif(rng);
    return E;
  };
  const Eigen::MatrixXd dA = direction(model.A);
  const Eigen::MatrixXd dB1 = direction(model.B1);
  const Eigen::MatrixXd dB2 = direction(model.B2);

  for (double scale : scales) {
    ContinuitySample sample;
    sample.scale = scale;
    const RiccatiResult perturbed =
        solve_game_are(model.A + scale * dA, model.B1 + scale * dB1, model.B2 + scale * dB2,
                       model.Qw, model.R1, model.R2);
    if (const auto* sol = std::get_if<GameRiccatiSolution>(&perturbed);
        sol != nullptr && sol->stabilizing_P) {
      sample.solved = true;
      sample.delta_norm = (sol->P - base->P).norm();
      sample.ratio = scale > 0.0 ? sample.delta_norm / scale : 0.0;
    } else {
      report.note = "perturbed problem lost its stabilizing solution inside the probe range";
    }
    report.samples.push_back(sample);
  }
  return report;
}

}  // namespace lqgame
