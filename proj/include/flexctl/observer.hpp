#pragma once

#include <vector>

#include "flexctl/linalg.hpp"
#include "flexctl/modal_model.hpp"
#include "flexctl/riccati.hpp"

namespace flexctl {

// Discrete observer model: A, B are position independent; C(p), D(p) are
// taken from the truncated plant when frozen.
struct DiscreteModel {
  MatrixXd a;
  MatrixXd b;
  double ts = 0.0;
  Index n_rb = 0;
  Index retained = 0;

  Index states() const { return a.rows(); }
};

DiscreteModel discretize_observer_model(const TruncatedPlant& plant, double ts);

struct NoiseDesign {
  MatrixXd qw;
  MatrixXd rv;

  // Qw = q_scale (B B' + q_floor I), Rv = r_scale I.
  static NoiseDesign defaults(const DiscreteModel& model, double q_scale = 1e-6, double q_floor = 1e-9,
                              double r_scale = 1e-12);
  void validate(Index states, Index outputs) const;
};

class LocalObserver {
 public:
  LocalObserver() = default;
  LocalObserver(SchedulingPoint p, const DiscreteModel& model, MatrixXd c, MatrixXd d, MatrixXd l);

  // q(k+1|k) = (A - L C) q(k|k-1) + (B - L D) u(k) + L y(k)
  const VectorXd& step(const VectorXd& u, const VectorXd& y);
  void reset();
  void set_state(const VectorXd& x);

  const VectorXd& state() const { return x_; }
  const SchedulingPoint& point() const { return p_; }
  const MatrixXd& gain() const { return l_; }
  const MatrixXd& c() const { return c_; }
  const MatrixXd& d() const { return d_; }
  const MatrixXd& a_cl() const { return a_cl_; }
  const MatrixXd& b_u() const { return b_u_; }
  double radius() const { return radius_; }

  double dare_residual = 0.0;
  double p_norm = 0.0;

 private:
  SchedulingPoint p_;
  MatrixXd c_;
  MatrixXd d_;
  MatrixXd l_;
  MatrixXd a_cl_;
  MatrixXd b_u_;
  VectorXd x_;
  VectorXd scratch_;
  double radius_ = 0.0;
};

struct ObserverBank {
  DiscreteModel model;
  std::vector<LocalObserver> observers;

  std::size_t size() const { return observers.size(); }
  std::vector<SchedulingPoint> points() const;
  void reset();
};

LocalObserver synthesize_local(const TruncatedPlant& plant, const DiscreteModel& model, const NoiseDesign& noise,
                               const SchedulingPoint& p);

ObserverBank synthesize_bank(const TruncatedPlant& plant, const std::vector<SchedulingPoint>& grid,
                             const NoiseDesign& noise, const DiscreteModel& model);

}  // namespace flexctl
