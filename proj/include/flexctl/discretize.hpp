#pragma once

#include "flexctl/linalg.hpp"

namespace flexctl {

// Products ||A||_1 * Ts above this are rejected; scaling and squaring
// needs too many squarings beyond it.
inline constexpr double kMaxExponentNorm = 1e5;

MatrixXd expm(const MatrixXd& a);

struct ZohModel {
  MatrixXd a;
  MatrixXd b;
};

// exp([[A, B], [0, 0]] Ts) = [[Ad, Bd], [0, I]]; valid for singular A.
ZohModel zoh_discretize(const MatrixXd& a, const MatrixXd& b, double ts);

}  // namespace flexctl
