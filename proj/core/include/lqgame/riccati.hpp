#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "lqgame/model.hpp"

namespace lqgame {

/// Strict-stability margin used for every "is A_cl Hurwitz" decision.
inline constexpr double kStabilityMargin = 1e-7;
/// Condition-number ceiling for the graph basis X1 of the stable subspace.
inline constexpr double kGraphConditionLimit = 1e10;

/// Hermitian solution P = P1 + j P2 of
///   A^T P + P A + Qw - P (B1 R1^{-1} B1^T - B2 R2^{-1} B2^T) P = 0
/// together with both closed loops the adaptive strategy cares about.
struct GameRiccatiSolution {
  Eigen::MatrixXcd P;
  Eigen::MatrixXd P1;  ///< Re P, symmetric
  Eigen::MatrixXd P2;  ///< Im P, skew-symmetric
  Eigen::MatrixXcd A_cl_P;
  Eigen::MatrixXd A_cl_P1;
  double residual = 0.0;
  bool stabilizing_P = false;
  bool stabilizing_P1 = false;
};

enum class NoSolutionReason { ImaginaryAxis, GraphSingular };

std::string to_string(NoSolutionReason reason);

/// Not an error: the game ARE simply has no stabilizing solution.
struct NoStabilizingSolution {
  NoSolutionReason reason = NoSolutionReason::ImaginaryAxis;
  std::string detail;
};

using RiccatiResult = std::variant<GameRiccatiSolution, NoStabilizingSolution>;

/// B = [B1, B2], R = diag(R1, -R2), S = B1 R1^{-1} B1^T - B2 R2^{-1} B2^T.
struct CompositeWeights {
  Eigen::MatrixXd B;
  Eigen::MatrixXd R;
  Eigen::MatrixXd S;
};

CompositeWeights composite_weights(const Eigen::MatrixXd& B1, const Eigen::MatrixXd& B2,
                                   const Eigen::MatrixXd& R1, const Eigen::MatrixXd& R2);

/// Order in which the stable eigenvalues are arranged inside the leading
/// Schur block. The invariant subspace (and so P) does not depend on it; the
/// option exists so the uniqueness property can be exercised.
enum class StableOrdering { ByRealPart, Reversed };

struct RiccatiOptions {
  StableOrdering ordering = StableOrdering::ByRealPart;
  int max_newton_steps = 3;
};

/// Stabilizing solution of the zero-sum game ARE via the ordered Schur form of
/// H = [[A, -S], [-Qw, -A^T]].
/// Returns NoStabilizingSolution if H has an eigenvalue within
/// 1e-7 * (1 + ||H||_F) of the imaginary axis or the graph basis is
/// ill-conditioned. Throws NumericalFailure if the Schur iteration fails and
/// ContractViolation if R1 or R2 is not positive definite.
RiccatiResult solve_game_are(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B1,
                             const Eigen::MatrixXd& B2, const Eigen::MatrixXd& Qw,
                             const Eigen::MatrixXd& R1, const Eigen::MatrixXd& R2,
                             const RiccatiOptions& options = {});

inline RiccatiResult solve_game_are(const GameModel& m, const RiccatiOptions& options = {}) {
  return solve_game_are(m.A, m.B1, m.B2, m.Qw, m.R1, m.R2, options);
}

/// ||A^T P + P A + Qw - P S P||_F.
double are_residual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& S, const Eigen::MatrixXd& Qw,
                    const Eigen::MatrixXcd& P);

struct HermitianParts {
  Eigen::MatrixXd P1;
  Eigen::MatrixXd P2;
};

/// P1 = sym(Re P), P2 = skew(Im P). Throws ContractViolation if P is not
/// Hermitian to 1e-8 relative.
HermitianParts hermitian_split(const Eigen::MatrixXcd& P);

struct NashGains {
  Eigen::MatrixXd L1;  ///< -R1^{-1} B1^T P1
  Eigen::MatrixXd L2;  ///<  R2^{-1} B2^T P1
};

/// Requires both stabilizing flags; throws ContractViolation otherwise.
NashGains nash_gains(const GameRiccatiSolution& sol, const Eigen::MatrixXd& B1,
                     const Eigen::MatrixXd& B2, const Eigen::MatrixXd& R1,
                     const Eigen::MatrixXd& R2);

/// Gains from an arbitrary symmetric P1, no stability precondition.
NashGains gains_from_p1(const Eigen::MatrixXd& P1, const Eigen::MatrixXd& B1,
                        const Eigen::MatrixXd& B2, const Eigen::MatrixXd& R1,
                        const Eigen::MatrixXd& R2);

/// tr(D^T P1 D), the value of the game.
double nash_value(const Eigen::MatrixXd& P1, const Eigen::MatrixXd& D);

struct ContinuitySample {
  double scale = 0.0;
  double delta_norm = 0.0;  ///< ||P(E) - P(E0)||_F
  double ratio = 0.0;       ///< delta_norm / scale (0 when scale == 0)
  bool solved = false;      ///< perturbed problem still had a stabilizing solution
};

struct ContinuityReport {
  bool applicable = false;
  std::string note;
  std::vector<ContinuitySample> samples;
};

/// Perturbs (A, B1, B2) along one seeded direction with entries uniform in
/// [-1, 1], scaled by each entry of `scales`, and records how fast P moves.
ContinuityReport riccati_continuity_probe(const GameModel& model, const std::vector<double>& scales,
                                          std::uint64_t seed = 0);

}  // namespace lqgame
