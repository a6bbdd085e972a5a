#include "lqgame/model.hpp"

#include <Eigen/Eigenvalues>

#include "lqgame/errors.hpp"

namespace lqgame {

namespace {

bool symmetric_exact(const Eigen::MatrixXd& M) {
  return (M - M.transpose()).norm() <= 1e-12 * M.norm();
}

bool positive_definite(const Eigen::MatrixXd& M) {
  if (M.rows() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()),
                                                   Eigen::EigenvaluesOnly);
  return es.info() == Eigen::Success && es.eigenvalues().minCoeff() > 0.0;
}

}  // namespace

Eigen::MatrixXd GameModel::theta() const { return stack_theta(A, B1, B2); }

Eigen::MatrixXd GameModel::B() const {
  Eigen::MatrixXd out(A.rows(), B1.cols() + B2.cols());
  out << B1, B2;
  return out;
}

std::vector<std::string> validate_model(const GameModel& m) {
  std::vector<std::string> report;
  const auto n = m.A.rows();
  if (m.A.cols() != n) report.emplace_back("dimension mismatch A (not square)");
  if (m.B1.rows() != n) report.emplace_back("dimension mismatch B1");
  if (m.B2.rows() != n) report.emplace_back("dimension mismatch B2");
  if (m.D.rows() != n) report.emplace_back("dimension mismatch D");
  if (m.Qw.rows() != n || m.Qw.cols() != n) report.emplace_back("dimension mismatch Qw");
  if (m.R1.rows() != m.B1.cols() || m.R1.cols() != m.B1.cols()) {
    report.emplace_back("dimension mismatch R1");
  }
  if (m.R2.rows() != m.B2.cols() || m.R2.cols() != m.B2.cols()) {
    report.emplace_back("dimension mismatch R2");
  }
  if (!report.empty()) return report;

  if (!m.A.allFinite() || !m.B1.allFinite() || !m.B2.allFinite() || !m.D.allFinite() ||
      !m.Qw.allFinite() || !m.R1.allFinite() || !m.R2.allFinite()) {
    report.emplace_back("non-finite matrix entry");
    return report;
  }
  if (!symmetric_exact(m.Qw)) report.emplace_back("Qw not symmetric");
  if (!symmetric_exact(m.R1)) report.emplace_back("R1 not symmetric");
  if (!symmetric_exact(m.R2)) report.emplace_back("R2 not symmetric");
  if (!positive_definite(m.R1)) report.emplace_back("R1 not positive definite");
  if (!positive_definite(m.R2)) report.emplace_back("R2 not positive definite");
  return report;
}

ThetaBlocks split_theta(const Eigen::MatrixXd& theta, const ModelDims& dims) {
  if (theta.rows() != dims.regressor_size() || theta.cols() != dims.n) {
    throw ContractViolation("split_theta: theta must be (n+m1+m2) x n");
  }
  const Eigen::MatrixXd t = theta.transpose();
  return {t.leftCols(dims.n), t.middleCols(dims.n, dims.m1), t.rightCols(dims.m2)};
}

Eigen::MatrixXd stack_theta(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B1,
                            const Eigen::MatrixXd& B2) {
  Eigen::MatrixXd top(A.rows(), A.cols() + B1.cols() + B2.cols());
  top << A, B1, B2;
  return top.transpose();
}

}  // namespace lqgame
