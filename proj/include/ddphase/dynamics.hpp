#pragma once

// Planar polar "truth" model: two-body gravity plus the tangential component of
// atmospheric drag, integrated with fixed-step classical RK4.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ddphase/config.hpp"
#include "ddphase/errors.hpp"
#include "ddphase/parallel.hpp"

namespace ddphase {

struct SatState {
  double r = 0.0;      // km
  double r_dot = 0.0;  // km/s
  double theta = 0.0;  // rad, cumulative (never wrapped)
  double omega = 0.0;  // rad/s
};

// Time derivative of a SatState: (r_dot, r_ddot, omega, omega_dot).
struct SatStateRate {
  double r_dot = 0.0;
  double r_ddot = 0.0;
  double theta_dot = 0.0;
  double omega_dot = 0.0;
};

struct ConstellationState {
  double epoch = 0.0;  // s since start
  std::vector<SatState> sats;

  std::size_t size() const noexcept { return sats.size(); }
};

inline double altitude(double r_km, const Environment& env) { return r_km - env.r_earth; }

// Circular orbit at the given altitude, theta = 0.
inline SatState circular_state(double altitude_km, const Environment& env) {
  const double r = env.r_earth + altitude_km;
  return {r, 0.0, 0.0, std::sqrt(env.mu_earth / (r * r * r))};
}

inline ConstellationState initial_cluster(const Scenario& scn, const Environment& env) {
  ConstellationState c;
  c.sats.assign(static_cast<std::size_t>(scn.n_sats), circular_state(scn.altitude0, env));
  return c;
}

// Speed relative to an atmosphere co-rotating with the Earth, keeping only the
// Earth-rate component normal to the orbit plane. km/s.
inline double relative_speed(double r, double omega, const Environment& env) {
  return r * (omega - env.omega_earth_normal());
}

// Tangential drag acceleration, km/s^2. Negative for prograde-relative motion.
inline double drag_accel_tangential(const SatState& s, double area_m2, const SatelliteParams& p,
                                    const Environment& env) {
  const double rho = env.atmosphere.density(altitude(s.r, env));
  const double v = relative_speed(s.r, s.omega, env);
  return -0.5 * p.ballistic_factor() * rho * std::abs(v) * v * (area_m2 * kSquareMetersToSquareKm);
}

inline SatStateRate state_derivative(const SatState& s, double area_m2, const SatelliteParams& p,
                                     const Environment& env) {
  const double a_t = drag_accel_tangential(s, area_m2, p, env);
  return {s.r_dot, s.r * s.omega * s.omega - env.mu_earth / (s.r * s.r), s.omega,
          (-2.0 * s.r_dot * s.omega + a_t) / s.r};
}

namespace detail {

inline SatState advance(const SatState& s, const SatStateRate& d, double h) {
  return {s.r + h * d.r_dot, s.r_dot + h * d.r_ddot, s.theta + h * d.theta_dot,
          s.omega + h * d.omega_dot};
}

}  // namespace detail

inline SatState rk4_step(const SatState& s, double area_m2, double dt, const SatelliteParams& p,
                         const Environment& env) {
  if (!(dt > 0.0)) throw DomainError("rk4_step: dt must be positive");
  const SatStateRate k1 = state_derivative(s, area_m2, p, env);
  const SatStateRate k2 = state_derivative(detail::advance(s, k1, 0.5 * dt), area_m2, p, env);
  const SatStateRate k3 = state_derivative(detail::advance(s, k2, 0.5 * dt), area_m2, p, env);
  const SatStateRate k4 = state_derivative(detail::advance(s, k3, dt), area_m2, p, env);
  const double w = dt / 6.0;
  return {s.r + w * (k1.r_dot + 2.0 * k2.r_dot + 2.0 * k3.r_dot + k4.r_dot),
          s.r_dot + w * (k1.r_ddot + 2.0 * k2.r_ddot + 2.0 * k3.r_ddot + k4.r_ddot),
          s.theta + w * (k1.theta_dot + 2.0 * k2.theta_dot + 2.0 * k3.theta_dot + k4.theta_dot),
          s.omega + w * (k1.omega_dot + 2.0 * k2.omega_dot + 2.0 * k3.omega_dot + k4.omega_dot)};
}

// Number of fine steps in dt_total; throws unless dt_total is an integer multiple of dt_fine.
inline std::size_t fine_step_count(double dt_total, double dt_fine) {
  if (!(dt_fine > 0.0) || !(dt_total > 0.0))
    throw DomainError("propagation intervals must be positive");
  const double steps = dt_total / dt_fine;
  const double rounded = std::round(steps);
  if (std::abs(steps - rounded) > 1e-9 * steps)
    throw DomainError("dt_total " + std::to_string(dt_total) +
                      " s is not an integer multiple of dt_fine " + std::to_string(dt_fine) + " s");
  return static_cast<std::size_t>(rounded);
}

// Integrates one satellite with a fixed area. `index` only labels reentry errors.
inline SatState propagate_satellite(SatState s, double area_m2, double dt_total, double dt_fine,
                                    const SatelliteParams& p, const Environment& env,
                                    std::size_t index = 0) {
  const std::size_t steps = fine_step_count(dt_total, dt_fine);
  const double floor = env.atmosphere.floor_km();
  for (std::size_t k = 0; k < steps; ++k) {
    if (altitude(s.r, env) < floor) throw ReentryError(index, k, altitude(s.r, env));
    try {
      s = rk4_step(s, area_m2, dt_fine, p, env);
    } catch (const DomainError&) {
      if (altitude(s.r, env) <= floor + 1.0) throw ReentryError(index, k, altitude(s.r, env));
      throw;
    }
  }
  if (altitude(s.r, env) < floor) throw ReentryError(index, steps, altitude(s.r, env));
  return s;
}

// Advances every satellite by dt_total with its own fixed area. Satellites are
// uncoupled, so they are integrated independently and reassembled in index order.
inline ConstellationState propagate_interval(const ConstellationState& c,
                                             std::span<const double> areas, double dt_total,
                                             double dt_fine, const SatelliteParams& p,
                                             const Environment& env, unsigned workers = 0) {
  if (areas.size() != c.size())
    throw DomainError("propagate_interval: " + std::to_string(areas.size()) + " areas for " +
                      std::to_string(c.size()) + " satellites");
  for (std::size_t i = 0; i < areas.size(); ++i) {
    if (!(areas[i] >= p.area_min && areas[i] <= p.area_max))
      throw DomainError("propagate_interval: area " + std::to_string(areas[i]) +
                        " m^2 of satellite " + std::to_string(i) + " outside [area_min, area_max]");
  }
  (void)fine_step_count(dt_total, dt_fine);
  ConstellationState out;
  out.epoch = c.epoch + dt_total;
  out.sats.resize(c.size());
  parallel_for(
      c.size(),
      [&](std::size_t i) {
        out.sats[i] = propagate_satellite(c.sats[i], areas[i], dt_total, dt_fine, p, env, i);
      },
      workers);
  return out;
}

// Specific orbital energy and angular momentum of the planar model.
inline double specific_energy(const SatState& s, const Environment& env) {
  return 0.5 * (s.r_dot * s.r_dot + s.r * s.r * s.omega * s.omega) - env.mu_earth / s.r;
}

inline double specific_angular_momentum(const SatState& s) { return s.r * s.r * s.omega; }

// Semi-major axis and mean motion of the osculating orbit, as a circular state
// with the same theta.
inline SatState mean_state(const SatState& s, const Environment& env) {
  const double a = -env.mu_earth / (2.0 * specific_energy(s, env));
  return {a, 0.0, s.theta, std::sqrt(env.mu_earth / (a * a * a))};
}

// The state the controller plans from.
inline ConstellationState controller_view(const ConstellationState& c, const Environment& env,
                                          StateFeed feed) {
  if (feed == StateFeed::kOsculating) return c;
  ConstellationState out;
  out.epoch = c.epoch;
  out.sats.reserve(c.size());
  for (const auto& s : c.sats) out.sats.push_back(mean_state(s, env));
  return out;
}

}  // namespace ddphase
