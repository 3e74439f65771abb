#pragma once

#include <vector>

#include "flexctl/linalg.hpp"

namespace flexctl {

// Planar scheduling coordinates of the moving body, in metres.
struct SchedulingPoint {
  double qx = 0.0;
  double qy = 0.0;

  friend bool operator==(const SchedulingPoint&, const SchedulingPoint&) = default;
};

struct Workspace {
  double x_lo = -0.15;
  double x_hi = 0.15;
  double y_lo = -0.15;
  double y_hi = 0.15;

  bool contains(const SchedulingPoint& p, double tol = 1e-12) const;
  SchedulingPoint center() const;
  // Tensor grid including the rectangle edges, x-major (x index outer).
  std::vector<SchedulingPoint> grid(int nx, int ny) const;
  void validate() const;
};

// Matrix-valued bivariate polynomial
//   P(q) = sum_{v=0}^{dx} sum_{w=0}^{dy} q_x^v q_y^w C_{vw}
// Evaluation is the exact finite double sum.
class PositionPolynomial {
 public:
  PositionPolynomial() = default;
  PositionPolynomial(Index rows, Index cols, int degree_x, int degree_y);

  static PositionPolynomial constant(const MatrixXd& value);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  int degree_x() const { return dx_; }
  int degree_y() const { return dy_; }

  MatrixXd& coefficient(int v, int w) { return coeffs_[index(v, w)]; }
  const MatrixXd& coefficient(int v, int w) const { return coeffs_[index(v, w)]; }

  MatrixXd evaluate(const SchedulingPoint& p) const;

  PositionPolynomial block(Index row, Index col, Index nrows, Index ncols) const;
  PositionPolynomial columns(std::span<const Index> cols) const;
  PositionPolynomial transpose() const;
  // Same polynomial with degrees raised to at least (dx, dy).
  PositionPolynomial widened(int dx, int dy) const;
  // Drops trailing degrees whose coefficients are exactly zero.
  PositionPolynomial trimmed() const;

  bool is_constant(double rel_tol = 0.0) const;
  double max_abs_coefficient() const;
  bool all_finite() const;

  PositionPolynomial& operator+=(const PositionPolynomial& rhs);
  PositionPolynomial& operator*=(double s);

  friend PositionPolynomial operator+(PositionPolynomial lhs, const PositionPolynomial& rhs) {
    lhs += rhs;
    return lhs;
  }
  friend PositionPolynomial operator-(PositionPolynomial lhs, const PositionPolynomial& rhs);
  friend PositionPolynomial operator*(const MatrixXd& lhs, const PositionPolynomial& rhs);
  friend PositionPolynomial operator*(const PositionPolynomial& lhs, const MatrixXd& rhs);
  friend PositionPolynomial operator*(double s, PositionPolynomial rhs) {
    rhs *= s;
    return rhs;
  }
  // Matrix product with polynomial convolution of the coefficients.
  friend PositionPolynomial operator*(const PositionPolynomial& lhs, const PositionPolynomial& rhs);

 private:
  std::size_t index(int v, int w) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(dy_ + 1) +
           static_cast<std::size_t>(w);
  }

  Index rows_ = 0;
  Index cols_ = 0;
  int dx_ = 0;
  int dy_ = 0;
  std::vector<MatrixXd> coeffs_;
};

// Determinant and adjugate of a square polynomial matrix by cofactor
// expansion; intended for the small rigid-body blocks (n <= 6).
PositionPolynomial determinant(const PositionPolynomial& m);
PositionPolynomial adjugate(const PositionPolynomial& m);

}  // namespace flexctl
