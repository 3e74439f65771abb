#include "flexctl/discretize.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "flexctl/error.hpp"

namespace flexctl {

MatrixXd expm(const MatrixXd& a) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::DimensionMismatch, "expm needs a square matrix");
  if (a.size() == 0) return a;
  MatrixXd out = a.exp();
  if (!out.allFinite()) throw Error(ErrorCode::NonFinite, "matrix exponential overflowed");
  return out;
}

ZohModel zoh_discretize(const MatrixXd& a, const MatrixXd& b, double ts) {
  if (!(ts > 0.0) || !std::isfinite(ts)) throw Error(ErrorCode::InvalidArgument, "Ts must be positive");
  if (a.rows() != a.cols() || b.rows() != a.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "zoh_discretize: A must be square with B sharing its rows");
  }
  if (!a.allFinite() || !b.allFinite()) throw Error(ErrorCode::NonFinite, "zoh_discretize: non-finite input");
  const Index n = a.rows();
  const Index m = b.cols();
  const double norm1 = n > 0 ? a.cwiseAbs().colwise().sum().maxCoeff() * ts : 0.0;
  if (norm1 > kMaxExponentNorm) {
    throw Error(ErrorCode::NonFinite, "||A||_1 Ts = " + std::to_string(norm1) + " exceeds the supported bound");
  }

  // Decoupled diagonal blocks (modal plants) are exponentiated one at a
  // time so a stiff mode does not set the scaling of the others.
  Eigen::VectorX<Index> root = Eigen::VectorX<Index>::LinSpaced(n, 0, n - 1);
  auto find = [&](Index i) {
    while (root(i) != i) i = root(i) = root(root(i));
    return i;
  };
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i)
      if (a(i, j) != 0.0) root(find(i)) = find(j);

  ZohModel out{MatrixXd::Zero(n, n), MatrixXd::Zero(n, m)};
  std::vector<bool> done(static_cast<std::size_t>(n), false);
  for (Index i0 = 0; i0 < n; ++i0) {
    if (done[static_cast<std::size_t>(i0)]) continue;
    std::vector<Index> idx;
    for (Index i = i0; i < n; ++i) {
      if (find(i) == find(i0)) {
        idx.push_back(i);
        done[static_cast<std::size_t>(i)] = true;
      }
    }
    const Index k = static_cast<Index>(idx.size());
    MatrixXd aug = MatrixXd::Zero(k + m, k + m);
    aug.topLeftCorner(k, k) = a(idx, idx) * ts;
    aug.topRightCorner(k, m) = b(idx, Eigen::all) * ts;
    const MatrixXd e = expm(aug);
    out.a(idx, idx) = e.topLeftCorner(k, k);
    out.b(idx, Eigen::all) = e.topRightCorner(k, m);
  }
  return out;
}

}  // namespace flexctl
