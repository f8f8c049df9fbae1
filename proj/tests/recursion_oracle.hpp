#pragma once

// Step-by-step evaluation of the daily linear model with sensitivities frozen at
// the reference points, used to check the stacked matrix form.

#include <Eigen/Dense>

#include "ddphase/lp_builder.hpp"

namespace ddphase::testing {

struct RecursionResult {
  Eigen::VectorXd r, omega, theta;  // km, rad/s, rad
};

inline RecursionResult recurse(const ConstellationState& c0, const ReferenceTrajectory& ref,
                               const Eigen::MatrixXd& u) {
  const Eigen::Index n = u.rows(), T = u.cols();
  const double dt = ref.dt;
  RecursionResult out{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    double r = c0.sats[static_cast<std::size_t>(i)].r;
    double w = c0.sats[static_cast<std::size_t>(i)].omega;
    double th = c0.sats[static_cast<std::size_t>(i)].theta;
    for (Eigen::Index k = 0; k < T; ++k) {
      th = th + dt * w + 0.5 * dt * dt * ref.s_omega(i, k) * u(i, k);
      r = r + dt * ref.s_r(i, k) * u(i, k);
      w = w + dt * ref.s_omega(i, k) * u(i, k);
    }
    out.r(i) = r;
    out.omega(i) = w;
    out.theta(i) = th;
  }
  return out;
}

// Row residuals (lhs - rhs) implied by the recursion, in LP units and in the
// documented block order, before row scaling.
inline Eigen::VectorXd recursion_row_residuals(const RecursionResult& rec, double t,
                                               const SpacingTarget& target, const Scenario& scn) {
  const Eigen::Index n = rec.r.size();
  const double eps_theta = scn.lp_eps_theta_rad();
  const double eps_omega = scn.eps_omega * kSecondsPerDay;
  Eigen::VectorXd spacing(n), domega(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = (i + 1) % n;
    spacing(i) = (rec.theta(i) - rec.theta(j)) - target.delta_des(i);
    domega(i) = (rec.omega(i) - rec.omega(j)) * kSecondsPerDay;
  }
  Eigen::VectorXd res(5 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    res(i) = -rec.r(i) - t;
    res(n + i) = spacing(i) - eps_theta;
    res(2 * n + i) = -spacing(i) - eps_theta;
    res(3 * n + i) = domega(i) - eps_omega;
    res(4 * n + i) = -domega(i) - eps_omega;
  }
  return res;
}

inline Eigen::VectorXd stack_decision(const Eigen::MatrixXd& u, double t) {
  const Eigen::Index n = u.rows(), T = u.cols();
  Eigen::VectorXd x(n * T + 1);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < T; ++k) x(i * T + k) = u(i, k);
  x(n * T) = t;
  return x;
}

}  // namespace ddphase::testing
