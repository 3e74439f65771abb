#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace flexctl {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;
using MatrixXcd = Eigen::MatrixXcd;
using Complex = std::complex<double>;

struct Pseudoinverse {
  MatrixXd value;
  double condition = 0.0;  // sigma_max / sigma_min over min(rows, cols) singular values
  Index rank = 0;
};

// Moore-Penrose pseudoinverse from a full SVD. Singular values below
// max(rows, cols) * eps * sigma_max are treated as zero.
Pseudoinverse pseudoinverse(const MatrixXd& m);

double spectral_radius(const MatrixXd& a);

// ||m - m^T||_F <= rel_tol * max(||m||_F, 1e-300)
bool is_symmetric(const MatrixXd& m, double rel_tol);

MatrixXd symmetrize(const MatrixXd& m);

MatrixXd block_diagonal(std::span<const MatrixXd> blocks);

bool all_finite(const MatrixXd& m);

// Orthonormal basis of ker(m) and the numerical rank used to obtain it.
struct NullSpace {
  MatrixXd basis;
  Index rank = 0;
};
NullSpace null_space(const MatrixXd& m, double rel_tol = -1.0);

// Column-major vectorization, used by the flat numeric file formats.
std::vector<double> vectorize(const MatrixXd& m);

}  // namespace flexctl
