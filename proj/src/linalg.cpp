#include "flexctl/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "flexctl/error.hpp"

namespace flexctl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonSymmetric: return "NonSymmetric";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NonProportionalDamping: return "NonProportionalDamping";
    case ErrorCode::EigSolveFailure: return "EigSolveFailure";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::OutOfWorkspace: return "OutOfWorkspace";
    case ErrorCode::SingularDiscardedBlock: return "SingularDiscardedBlock";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NotDetectable: return "NotDetectable";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::RankDeficientActuation: return "RankDeficientActuation";
    case ErrorCode::AboveNyquist: return "AboveNyquist";
    case ErrorCode::InfeasibleLimits: return "InfeasibleLimits";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::TsMismatch: return "TsMismatch";
    case ErrorCode::WindowTooLong: return "WindowTooLong";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::EmptyBand: return "EmptyBand";
    case ErrorCode::IllPosed: return "IllPosed";
    case ErrorCode::Unstable: return "Unstable";
    case ErrorCode::InfeasibleConstraints: return "InfeasibleConstraints";
    case ErrorCode::Config: return "Config";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Pseudoinverse pseudoinverse(const MatrixXd& m) {
  Pseudoinverse out;
  if (m.size() == 0) {
    out.value = MatrixXd::Zero(m.cols(), m.rows());
    return out;
  }
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const VectorXd& s = svd.singularValues();
  const double smax = s.size() > 0 ? s(0) : 0.0;
  const double tol = static_cast<double>(std::max(m.rows(), m.cols())) *
                     std::numeric_limits<double>::epsilon() * smax;
  MatrixXd sinv = MatrixXd::Zero(m.cols(), m.rows());
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol) {
      sinv(i, i) = 1.0 / s(i);
      ++out.rank;
    }
  }
  out.value = svd.matrixV() * sinv * svd.matrixU().transpose();
  const double smin = s.size() > 0 ? s(s.size() - 1) : 0.0;
  out.condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  return out;
}

double spectral_radius(const MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<MatrixXd> es(a, false);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::EigSolveFailure, "eigenvalue iteration did not converge");
  }
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_symmetric(const MatrixXd& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(m.norm(), 1e-300);
  return (m - m.transpose()).norm() <= rel_tol * scale;
}

MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

MatrixXd block_diagonal(std::span<const MatrixXd> blocks) {
  Index rows = 0;
  Index cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  MatrixXd out = MatrixXd::Zero(rows, cols);
  Index r = 0;
  Index c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

bool all_finite(const MatrixXd& m) { return m.allFinite(); }

NullSpace null_space(const MatrixXd& m, double rel_tol) {
  NullSpace out;
  if (m.cols() == 0) {
    out.basis = MatrixXd(0, 0);
    return out;
  }
  if (m.rows() == 0) {
    out.basis = MatrixXd::Identity(m.cols(), m.cols());
    return out;
  }
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeFullV);
  const VectorXd& s = svd.singularValues();
  const double smax = s(0);
  const double tol = rel_tol > 0.0
                         ? rel_tol * smax
                         : static_cast<double>(std::max(m.rows(), m.cols())) *
                               std::numeric_limits<double>::epsilon() * smax;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > tol) ++out.rank;
  }
  out.basis = svd.matrixV().rightCols(m.cols() - out.rank);
  return out;
}

std::vector<double> vectorize(const MatrixXd& m) {
  return std::vector<double>(m.data(), m.data() + m.size());
}

}  // namespace flexctl
