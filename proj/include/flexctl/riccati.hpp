#pragma once

#include "flexctl/linalg.hpp"

namespace flexctl {

struct DareOptions {
  double tolerance = 1e-12;  // relative increment of the doubling iterate
  int max_iterations = 200;
  int max_newton_steps = 20;
};

struct DareSolution {
  MatrixXd p;
  MatrixXd l;               // predictor gain A P C' (C P C' + R)^-1
  double residual = 0.0;    // Frobenius norm of the Riccati residual
  double closed_loop_radius = 0.0;
  int iterations = 0;
  int newton_steps = 0;
};

// Filter-form DARE
//   P = A P A' - A P C' (C P C' + R)^-1 C P A' + Q
// solved by structure-preserving doubling and, when the residual is not
// yet below 1e-8 (1 + ||P||), refined with Newton (Hewer) steps.
DareSolution solve_dare(const MatrixXd& a, const MatrixXd& c, const MatrixXd& q, const MatrixXd& r,
                        const DareOptions& opts = {});

double dare_residual(const MatrixXd& a, const MatrixXd& c, const MatrixXd& q, const MatrixXd& r,
                     const MatrixXd& p);

// X = A X A' + Q for Schur-stable A, by Smith doubling.
MatrixXd solve_stein(const MatrixXd& a, const MatrixXd& q);

}  // namespace flexctl
