#pragma once

// Drag sensitivities of radius and angular rate for near-circular orbits
// (averaged variation-of-parameters rates), and the minimum-drag reference
// trajectories at which they are evaluated.

#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "ddphase/config.hpp"
#include "ddphase/dynamics.hpp"
#include "ddphase/errors.hpp"
#include "ddphase/parallel.hpp"

namespace ddphase {

namespace detail {

// (C_D/m) * rho(r) * |v_rel|^2 * (m^2 -> km^2), in 1/(m^2 s^2) * km.
inline double drag_intensity(double r, double omega, const SatelliteParams& p,
                             const Environment& env) {
  const double rho = env.atmosphere.density(altitude(r, env));
  const double v = relative_speed(r, omega, env);
  return p.ballistic_factor() * rho * v * v * kSquareMetersToSquareKm;
}

}  // namespace detail

// Rate of change of the orbit radius per unit drag area, km / (m^2 s). Always negative.
inline double s_radius(double r, double omega, const SatelliteParams& p, const Environment& env) {
  return -detail::drag_intensity(r, omega, p, env) * std::sqrt(r * r * r / env.mu_earth);
}

// Rate of change of the angular rate per unit drag area, rad/s / (m^2 s). Always positive.
inline double s_omega(double r, double omega, const SatelliteParams& p, const Environment& env) {
  return 1.5 * detail::drag_intensity(r, omega, p, env) / r;
}

// Reference states and sensitivities, one row per satellite and one column per
// day k in [0, T).
struct ReferenceTrajectory {
  Eigen::MatrixXd r_bar;      // km
  Eigen::MatrixXd omega_bar;  // rad/s
  Eigen::MatrixXd s_r;        // km / (m^2 s)
  Eigen::MatrixXd s_omega;    // rad/s / (m^2 s)
  double dt = kSecondsPerDay;  // s per step

  std::size_t n_sats() const { return static_cast<std::size_t>(r_bar.rows()); }
  std::size_t horizon() const { return static_cast<std::size_t>(r_bar.cols()); }
};

// Iterates the discrete-time model under area_min from each satellite's current
// (r, omega), caching the sensitivities at every reference point.
inline ReferenceTrajectory build_reference(const ConstellationState& c0, int horizon,
                                           const SatelliteParams& p, const Environment& env,
                                           double dt_command = kSecondsPerDay,
                                           unsigned workers = 0) {
  if (horizon < 1) throw DomainError("build_reference: horizon must be >= 1");
  const auto n = static_cast<Eigen::Index>(c0.size());
  const auto T = static_cast<Eigen::Index>(horizon);
  ReferenceTrajectory ref;
  ref.dt = dt_command;
  ref.r_bar.resize(n, T);
  ref.omega_bar.resize(n, T);
  ref.s_r.resize(n, T);
  ref.s_omega.resize(n, T);
  parallel_for(
      c0.size(),
      [&](std::size_t si) {
        const auto i = static_cast<Eigen::Index>(si);
        double r = c0.sats[si].r;
        double w = c0.sats[si].omega;
        for (Eigen::Index k = 0; k < T; ++k) {
          if (!env.atmosphere.in_range(altitude(r, env))) {
            throw DomainError("reference trajectory of satellite " + std::to_string(si) +
                              " leaves the atmosphere table at step " + std::to_string(k) +
                              " (altitude " + std::to_string(altitude(r, env)) + " km)");
          }
          const double sr = s_radius(r, w, p, env);
          const double sw = s_omega(r, w, p, env);
          ref.r_bar(i, k) = r;
          ref.omega_bar(i, k) = w;
          ref.s_r(i, k) = sr;
          ref.s_omega(i, k) = sw;
          r += dt_command * sr * p.area_min;
          w += dt_command * sw * p.area_min;
        }
      },
      workers);
  return ref;
}

}  // namespace ddphase
