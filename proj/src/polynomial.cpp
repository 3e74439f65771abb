#include "flexctl/polynomial.hpp"

#include <algorithm>
#include <cmath>

#include "flexctl/error.hpp"

namespace flexctl {

bool Workspace::contains(const SchedulingPoint& p, double tol) const {
  const double sx = std::max(1.0, x_hi - x_lo) * tol;
  const double sy = std::max(1.0, y_hi - y_lo) * tol;
  return p.qx >= x_lo - sx && p.qx <= x_hi + sx && p.qy >= y_lo - sy && p.qy <= y_hi + sy;
}

SchedulingPoint Workspace::center() const { return {0.5 * (x_lo + x_hi), 0.5 * (y_lo + y_hi)}; }

std::vector<SchedulingPoint> Workspace::grid(int nx, int ny) const {
  if (nx < 1 || ny < 1) throw Error(ErrorCode::InvalidArgument, "grid needs at least one point per axis");
  std::vector<SchedulingPoint> pts;
  pts.reserve(static_cast<std::size_t>(nx * ny));
  auto coord = [](double lo, double hi, int n, int i) {
    if (n == 1) return 0.5 * (lo + hi);
    return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      pts.push_back({coord(x_lo, x_hi, nx, i), coord(y_lo, y_hi, ny, j)});
    }
  }
  return pts;
}

void Workspace::validate() const {
  if (!(x_lo < x_hi) || !(y_lo < y_hi) || !std::isfinite(x_lo) || !std::isfinite(x_hi) ||
      !std::isfinite(y_lo) || !std::isfinite(y_hi)) {
    throw Error(ErrorCode::InvalidArgument, "workspace bounds must satisfy lo < hi");
  }
}

PositionPolynomial::PositionPolynomial(Index rows, Index cols, int degree_x, int degree_y)
    : rows_(rows), cols_(cols), dx_(degree_x), dy_(degree_y) {
  if (rows < 0 || cols < 0 || degree_x < 0 || degree_y < 0) {
    throw Error(ErrorCode::InvalidArgument, "negative polynomial shape");
  }
  coeffs_.assign(static_cast<std::size_t>((dx_ + 1) * (dy_ + 1)), MatrixXd::Zero(rows, cols));
}

PositionPolynomial PositionPolynomial::constant(const MatrixXd& value) {
  PositionPolynomial p(value.rows(), value.cols(), 0, 0);
  p.coefficient(0, 0) = value;
  return p;
}

MatrixXd PositionPolynomial::evaluate(const SchedulingPoint& p) const {
  MatrixXd out = MatrixXd::Zero(rows_, cols_);
  double px = 1.0;
  for (int v = 0; v <= dx_; ++v) {
    double py = 1.0;
    for (int w = 0; w <= dy_; ++w) {
      out.noalias() += (px * py) * coefficient(v, w);
      py *= p.qy;
    }
    px *= p.qx;
  }
  return out;
}

PositionPolynomial PositionPolynomial::block(Index row, Index col, Index nrows, Index ncols) const {
  PositionPolynomial out(nrows, ncols, dx_, dy_);
  for (std::size_t k = 0; k < coeffs_.size(); ++k) {
    out.coeffs_[k] = coeffs_[k].block(row, col, nrows, ncols);
  }
  return out;
}

PositionPolynomial PositionPolynomial::columns(std::span<const Index> cols) const {
  PositionPolynomial out(rows_, static_cast<Index>(cols.size()), dx_, dy_);
  for (std::size_t k = 0; k < coeffs_.size(); ++k) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out.coeffs_[k].col(static_cast<Index>(j)) = coeffs_[k].col(cols[j]);
    }
  }
  return out;
}

PositionPolynomial PositionPolynomial::transpose() const {
  PositionPolynomial out(cols_, rows_, dx_, dy_);
  for (std::size_t k = 0; k < coeffs_.size(); ++k) out.coeffs_[k] = coeffs_[k].transpose();
  return out;
}

PositionPolynomial PositionPolynomial::widened(int dx, int dy) const {
  PositionPolynomial out(rows_, cols_, std::max(dx, dx_), std::max(dy, dy_));
  for (int v = 0; v <= dx_; ++v) {
    for (int w = 0; w <= dy_; ++w) out.coefficient(v, w) = coefficient(v, w);
  }
  return out;
}

PositionPolynomial PositionPolynomial::trimmed() const {
  int dx = 0;
  int dy = 0;
  for (int v = 0; v <= dx_; ++v) {
    for (int w = 0; w <= dy_; ++w) {
      if (!coefficient(v, w).isZero(0.0)) {
        dx = std::max(dx, v);
        dy = std::max(dy, w);
      }
    }
  }
  PositionPolynomial out(rows_, cols_, dx, dy);
  for (int v = 0; v <= dx; ++v) {
    for (int w = 0; w <= dy; ++w) out.coefficient(v, w) = coefficient(v, w);
  }
  return out;
}

bool PositionPolynomial::is_constant(double rel_tol) const {
  const double scale = std::max(coeffs_.empty() ? 0.0 : coeffs_[0].cwiseAbs().maxCoeff(), 1e-300);
  for (std::size_t k = 1; k < coeffs_.size(); ++k) {
    if (coeffs_[k].size() > 0 && coeffs_[k].cwiseAbs().maxCoeff() > rel_tol * scale) return false;
  }
  return true;
}

double PositionPolynomial::max_abs_coefficient() const {
  double m = 0.0;
  for (const auto& c : coeffs_) {
    if (c.size() > 0) m = std::max(m, c.cwiseAbs().maxCoeff());
  }
  return m;
}

bool PositionPolynomial::all_finite() const {
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](const MatrixXd& c) { return c.allFinite(); });
}

PositionPolynomial& PositionPolynomial::operator+=(const PositionPolynomial& rhs) {
  if (rows_ != rhs.rows_ || cols_ != rhs.cols_) {
    throw Error(ErrorCode::DimensionMismatch, "polynomial sum of different shapes");
  }
  if (rhs.dx_ > dx_ || rhs.dy_ > dy_) *this = widened(rhs.dx_, rhs.dy_);
  for (int v = 0; v <= rhs.dx_; ++v) {
    for (int w = 0; w <= rhs.dy_; ++w) coefficient(v, w) += rhs.coefficient(v, w);
  }
  return *this;
}

PositionPolynomial& PositionPolynomial::operator*=(double s) {
  for (auto& c : coeffs_) c *= s;
  return *this;
}

PositionPolynomial operator-(PositionPolynomial lhs, const PositionPolynomial& rhs) {
  lhs += -1.0 * rhs;
  return lhs;
}

PositionPolynomial operator*(const MatrixXd& lhs, const PositionPolynomial& rhs) {
  if (lhs.cols() != rhs.rows_) throw Error(ErrorCode::DimensionMismatch, "matrix * polynomial");
  PositionPolynomial out(lhs.rows(), rhs.cols_, rhs.dx_, rhs.dy_);
  for (std::size_t k = 0; k < rhs.coeffs_.size(); ++k) out.coeffs_[k] = lhs * rhs.coeffs_[k];
  return out;
}

PositionPolynomial operator*(const PositionPolynomial& lhs, const MatrixXd& rhs) {
  if (lhs.cols_ != rhs.rows()) throw Error(ErrorCode::DimensionMismatch, "polynomial * matrix");
  PositionPolynomial out(lhs.rows_, rhs.cols(), lhs.dx_, lhs.dy_);
  for (std::size_t k = 0; k < lhs.coeffs_.size(); ++k) out.coeffs_[k] = lhs.coeffs_[k] * rhs;
  return out;
}

PositionPolynomial operator*(const PositionPolynomial& lhs, const PositionPolynomial& rhs) {
  if (lhs.cols_ != rhs.rows_) throw Error(ErrorCode::DimensionMismatch, "polynomial * polynomial");
  PositionPolynomial out(lhs.rows_, rhs.cols_, lhs.dx_ + rhs.dx_, lhs.dy_ + rhs.dy_);
  for (int v1 = 0; v1 <= lhs.dx_; ++v1) {
    for (int w1 = 0; w1 <= lhs.dy_; ++w1) {
      const MatrixXd& a = lhs.coefficient(v1, w1);
      if (a.isZero(0.0)) continue;
      for (int v2 = 0; v2 <= rhs.dx_; ++v2) {
        for (int w2 = 0; w2 <= rhs.dy_; ++w2) {
          out.coefficient(v1 + v2, w1 + w2).noalias() += a * rhs.coefficient(v2, w2);
        }
      }
    }
  }
  return out;
}

namespace {

PositionPolynomial entry(const PositionPolynomial& m, Index r, Index c) { return m.block(r, c, 1, 1); }

PositionPolynomial minor_matrix(const PositionPolynomial& m, Index skip_row, Index skip_col) {
  const Index n = m.rows();
  PositionPolynomial out(n - 1, n - 1, m.degree_x(), m.degree_y());
  for (int v = 0; v <= m.degree_x(); ++v) {
    for (int w = 0; w <= m.degree_y(); ++w) {
      const MatrixXd& src = m.coefficient(v, w);
      MatrixXd& dst = out.coefficient(v, w);
      for (Index i = 0, ii = 0; i < n; ++i) {
        if (i == skip_row) continue;
        for (Index j = 0, jj = 0; j < n; ++j) {
          if (j == skip_col) continue;
          dst(ii, jj) = src(i, j);
          ++jj;
        }
        ++ii;
      }
    }
  }
  return out;
}

}  // namespace

PositionPolynomial determinant(const PositionPolynomial& m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "determinant of non-square polynomial matrix");
  const Index n = m.rows();
  if (n == 0) return PositionPolynomial::constant(MatrixXd::Ones(1, 1));
  if (n == 1) return m;
  if (n > 6) throw Error(ErrorCode::InvalidArgument, "polynomial determinant limited to 6x6");
  PositionPolynomial det(1, 1, 0, 0);
  for (Index j = 0; j < n; ++j) {
    PositionPolynomial term = entry(m, 0, j) * determinant(minor_matrix(m, 0, j));
    det += (j % 2 == 0 ? 1.0 : -1.0) * term;
  }
  return det.trimmed();
}

PositionPolynomial adjugate(const PositionPolynomial& m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::DimensionMismatch, "adjugate of non-square polynomial matrix");
  const Index n = m.rows();
  if (n == 1) return PositionPolynomial::constant(MatrixXd::Ones(1, 1));
  std::vector<PositionPolynomial> cof;
  int dx = 0;
  int dy = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      cof.push_back(determinant(minor_matrix(m, i, j)));
      dx = std::max(dx, cof.back().degree_x());
      dy = std::max(dy, cof.back().degree_y());
    }
  }
  PositionPolynomial adj(n, n, dx, dy);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      const PositionPolynomial& c = cof[static_cast<std::size_t>(i * n + j)];
      const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      for (int v = 0; v <= c.degree_x(); ++v) {
        for (int w = 0; w <= c.degree_y(); ++w) {
          adj.coefficient(v, w)(j, i) = sign * c.coefficient(v, w)(0, 0);
        }
      }
    }
  }
  return adj;
}

}  // namespace flexctl
