#pragma once

// Physical constants and scenario parameters.
//
// Internal units: km, s and rad everywhere in the dynamics. Drag areas are
// given in m^2; the only m^2 -> km^2 conversion lives in kSquareMetersToSquareKm.
// The JSON schema is documented in docs/config.md.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ddphase/atmosphere.hpp"
#include "ddphase/errors.hpp"

#ifndef DDPHASE_DEFAULT_ATMOSPHERE
#define DDPHASE_DEFAULT_ATMOSPHERE "data/harris_priester.csv"
#endif

namespace ddphase {

inline constexpr double kSquareMetersToSquareKm = 1e-6;
inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;

struct SatelliteParams {
  double c_d = 2.2;
  double mass = 5.0;        // kg
  double area_min = 0.01;   // m^2
  double area_max = 0.03;   // m^2

  // C_D / m in 1/kg.
  double ballistic_factor() const { return c_d / mass; }
};

struct Environment {
  double mu_earth = 398600.4418;    // km^3/s^2
  double omega_earth = 7.2921159e-5;  // rad/s
  double r_earth = 6378.137;        // km
  double inclination = 97.2;        // deg
  std::string atmosphere_path = DDPHASE_DEFAULT_ATMOSPHERE;
  HarrisPriesterTable atmosphere;

  // Earth rotation component along the orbit normal, rad/s.
  double omega_earth_normal() const { return omega_earth * std::cos(inclination * kDegToRad); }
};

// Which (r, omega) the controller reads from a truth state: the osculating
// values, or the semi-major axis and mean motion from the orbital energy.
enum class StateFeed { kMean, kOsculating };

inline std::string to_string(StateFeed f) { return f == StateFeed::kMean ? "mean" : "osculating"; }

inline StateFeed parse_state_feed(const std::string& s) {
  if (s == "mean") return StateFeed::kMean;
  if (s == "osculating") return StateFeed::kOsculating;
  throw ValidationError("scenario.lp_state", "expected 'mean' or 'osculating', got '" + s + "'");
}

struct Scenario {
  int n_sats = 0;
  double altitude0 = 475.0;               // km
  double eps_theta = 0.1;                 // deg
  double eps_theta_margin = 0.001;        // deg kept free inside eps_theta by the LP
  double eps_omega = 1e-18;               // rad/s
  double dt_command = kSecondsPerDay;     // s
  double dt_fine = 10.0;                  // s
  int horizon_max = 365;                  // days
  double reentry_altitude = 200.0;        // km
  double maintenance_threshold = 0.1;     // deg
  StateFeed lp_state = StateFeed::kMean;

  double eps_theta_rad() const { return eps_theta * kDegToRad; }
  // Spacing half-width imposed on the LP.
  double lp_eps_theta_rad() const { return (eps_theta - eps_theta_margin) * kDegToRad; }
};

struct Config {
  SatelliteParams satellite;
  Environment environment;
  Scenario scenario;
};

inline void validate(const SatelliteParams& p) {
  if (!(p.c_d > 0.0)) throw ValidationError("satellite.c_d", "must be > 0");
  if (!(p.mass > 0.0)) throw ValidationError("satellite.mass", "must be > 0");
  if (!(p.area_min > 0.0)) throw ValidationError("satellite.area_min", "must be > 0");
  if (!(p.area_min < p.area_max))
    throw ValidationError("satellite.area_max", "must be greater than area_min");
}

inline void validate(const Environment& e) {
  if (!(e.mu_earth > 0.0)) throw ValidationError("environment.mu_earth", "must be > 0");
  if (!(e.omega_earth >= 0.0)) throw ValidationError("environment.omega_earth", "must be >= 0");
  if (!(e.r_earth > 0.0)) throw ValidationError("environment.r_earth", "must be > 0");
  if (!(e.inclination >= 0.0 && e.inclination <= 180.0))
    throw ValidationError("environment.inclination", "must lie in [0, 180] deg");
  if (e.atmosphere.empty()) throw ValidationError("environment.atmosphere", "table not loaded");
}

inline void validate(const Scenario& s, const Environment& e) {
  if (s.n_sats < 2) throw ValidationError("scenario.n_sats", "must be >= 2");
  if (!(s.eps_theta > 0.0)) throw ValidationError("scenario.eps_theta", "must be > 0");
  if (!(s.eps_theta_margin >= 0.0 && s.eps_theta_margin < s.eps_theta))
    throw ValidationError("scenario.eps_theta_margin", "must lie in [0, eps_theta)");
  if (!(s.eps_omega > 0.0)) throw ValidationError("scenario.eps_omega", "must be > 0");
  if (!(s.dt_fine > 0.0)) throw ValidationError("scenario.dt_fine", "must be > 0");
  if (!(s.dt_fine <= s.dt_command))
    throw ValidationError("scenario.dt_fine", "must not exceed dt_command");
  const double steps = s.dt_command / s.dt_fine;
  if (std::abs(steps - std::round(steps)) > 1e-9 * steps)
    throw ValidationError("scenario.dt_fine", "dt_command must be an integer multiple of dt_fine");
  if (s.horizon_max < 1) throw ValidationError("scenario.horizon_max", "must be >= 1");
  if (!(s.reentry_altitude < s.altitude0))
    throw ValidationError("scenario.reentry_altitude", "must be below altitude0");
  if (!(s.maintenance_threshold > 0.0))
    throw ValidationError("scenario.maintenance_threshold", "must be > 0");
  if (!e.atmosphere.empty()) {
    if (!e.atmosphere.in_range(s.altitude0))
      throw ValidationError("scenario.altitude0", "outside the atmosphere table");
    if (s.reentry_altitude < e.atmosphere.floor_km())
      throw ValidationError("scenario.reentry_altitude", "below the atmosphere table floor");
  }
}

inline void validate(const Config& c) {
  validate(c.satellite);
  validate(c.environment);
  validate(c.scenario, c.environment);
}

// Shipped defaults for everything except n_sats, with the atmosphere loaded
// from the given table (or the default table).
inline Config default_config(int n_sats, const std::string& atmosphere_path = DDPHASE_DEFAULT_ATMOSPHERE,
                             DensityColumn column = DensityColumn::kGeometricMean) {
  Config c;
  c.scenario.n_sats = n_sats;
  c.environment.atmosphere_path = atmosphere_path;
  c.environment.atmosphere = load_harris_priester_csv(atmosphere_path, column);
  validate(c);
  return c;
}

namespace detail {

using nlohmann::json;

inline const json* section(const json& root, const char* name) {
  if (!root.contains(name)) return nullptr;
  const json& s = root.at(name);
  if (!s.is_object()) throw ParseError(std::string("'") + name + "' must be an object");
  return &s;
}

inline void reject_unknown(const json& obj, const std::string& prefix,
                           std::initializer_list<const char*> known) {
  const std::set<std::string> allowed(known.begin(), known.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      throw ValidationError(prefix + it.key(), "unknown key");
  }
}

inline void read_number(const json* obj, const std::string& prefix, const char* key, double& out) {
  if (obj == nullptr || !obj->contains(key)) return;
  const json& v = obj->at(key);
  if (!v.is_number()) throw ValidationError(prefix + key, "must be a number");
  out = v.get<double>();
}

inline void read_int(const json* obj, const std::string& prefix, const char* key, int& out) {
  if (obj == nullptr || !obj->contains(key)) return;
  const json& v = obj->at(key);
  if (!v.is_number_integer()) throw ValidationError(prefix + key, "must be an integer");
  out = v.get<int>();
}

}  // namespace detail

inline Config parse_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
  using detail::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed config: ") + e.what());
  }
  if (!root.is_object()) throw ParseError("config root must be an object");
  detail::reject_unknown(root, "", {"satellite", "environment", "scenario"});

  Config c;
  const json* sat = detail::section(root, "satellite");
  if (sat) detail::reject_unknown(*sat, "satellite.", {"c_d", "mass", "area_min", "area_max"});
  detail::read_number(sat, "satellite.", "c_d", c.satellite.c_d);
  detail::read_number(sat, "satellite.", "mass", c.satellite.mass);
  detail::read_number(sat, "satellite.", "area_min", c.satellite.area_min);
  detail::read_number(sat, "satellite.", "area_max", c.satellite.area_max);

  const json* env = detail::section(root, "environment");
  if (env)
    detail::reject_unknown(*env, "environment.",
                           {"mu_earth", "omega_earth", "r_earth", "inclination", "atmosphere"});
  detail::read_number(env, "environment.", "mu_earth", c.environment.mu_earth);
  detail::read_number(env, "environment.", "omega_earth", c.environment.omega_earth);
  detail::read_number(env, "environment.", "r_earth", c.environment.r_earth);
  detail::read_number(env, "environment.", "inclination", c.environment.inclination);
  DensityColumn column = DensityColumn::kGeometricMean;
  if (env && env->contains("atmosphere")) {
    const json* atm = detail::section(*env, "atmosphere");
    detail::reject_unknown(*atm, "environment.atmosphere.", {"table", "column"});
    if (atm->contains("table")) {
      if (!atm->at("table").is_string())
        throw ValidationError("environment.atmosphere.table", "must be a string");
      std::filesystem::path p = atm->at("table").get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      // Stored absolute so a dumped config can be reloaded from anywhere.
      c.environment.atmosphere_path = std::filesystem::absolute(p).lexically_normal().string();
    }
    if (atm->contains("column")) {
      if (!atm->at("column").is_string())
        throw ValidationError("environment.atmosphere.column", "must be a string");
      column = parse_density_column(atm->at("column").get<std::string>());
    }
  }

  const json* scn = detail::section(root, "scenario");
  if (scn == nullptr || !scn->contains("n_sats"))
    throw ValidationError("scenario.n_sats", "required key missing");
  detail::reject_unknown(*scn, "scenario.",
                         {"n_sats", "altitude0", "eps_theta", "eps_theta_margin", "eps_omega", "dt_command", "dt_fine",
                          "horizon_max", "reentry_altitude", "maintenance_threshold", "lp_state"});
  detail::read_int(scn, "scenario.", "n_sats", c.scenario.n_sats);
  detail::read_number(scn, "scenario.", "altitude0", c.scenario.altitude0);
  detail::read_number(scn, "scenario.", "eps_theta", c.scenario.eps_theta);
  detail::read_number(scn, "scenario.", "eps_theta_margin", c.scenario.eps_theta_margin);
  detail::read_number(scn, "scenario.", "eps_omega", c.scenario.eps_omega);
  detail::read_number(scn, "scenario.", "dt_command", c.scenario.dt_command);
  detail::read_number(scn, "scenario.", "dt_fine", c.scenario.dt_fine);
  detail::read_int(scn, "scenario.", "horizon_max", c.scenario.horizon_max);
  detail::read_number(scn, "scenario.", "reentry_altitude", c.scenario.reentry_altitude);
  // The maintenance trigger follows eps_theta unless set explicitly.
  c.scenario.maintenance_threshold = c.scenario.eps_theta;
  detail::read_number(scn, "scenario.", "maintenance_threshold", c.scenario.maintenance_threshold);
  if (scn->contains("lp_state")) {
    if (!scn->at("lp_state").is_string())
      throw ValidationError("scenario.lp_state", "must be a string");
    c.scenario.lp_state = parse_state_feed(scn->at("lp_state").get<std::string>());
  }

  validate(c.satellite);
  c.environment.atmosphere = load_harris_priester_csv(c.environment.atmosphere_path, column);
  validate(c);
  return c;
}

inline Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

inline nlohmann::json to_json(const Config& c) {
  nlohmann::json j;
  j["satellite"] = {{"c_d", c.satellite.c_d},
                    {"mass", c.satellite.mass},
                    {"area_min", c.satellite.area_min},
                    {"area_max", c.satellite.area_max}};
  j["environment"] = {{"mu_earth", c.environment.mu_earth},
                      {"omega_earth", c.environment.omega_earth},
                      {"r_earth", c.environment.r_earth},
                      {"inclination", c.environment.inclination},
                      {"atmosphere",
                       {{"table", c.environment.atmosphere_path},
                        {"column", to_string(c.environment.atmosphere.column())}}}};
  j["scenario"] = {{"n_sats", c.scenario.n_sats},
                   {"altitude0", c.scenario.altitude0},
                   {"eps_theta", c.scenario.eps_theta},
                   {"eps_theta_margin", c.scenario.eps_theta_margin},
                   {"eps_omega", c.scenario.eps_omega},
                   {"dt_command", c.scenario.dt_command},
                   {"dt_fine", c.scenario.dt_fine},
                   {"horizon_max", c.scenario.horizon_max},
                   {"reentry_altitude", c.scenario.reentry_altitude},
                   {"maintenance_threshold", c.scenario.maintenance_threshold},
                   {"lp_state", to_string(c.scenario.lp_state)}};
  return j;
}

// Doubles are printed in shortest round-trip form, so parse_config(dump_config(c))
// reproduces every number bit-exactly.
inline std::string dump_config(const Config& c) { return to_json(c).dump(2) + "\n"; }

}  // namespace ddphase
