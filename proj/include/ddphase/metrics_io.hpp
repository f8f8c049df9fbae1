#pragma once

// Run logs, spacing metrics and CSV output.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ddphase/atmosphere.hpp"
#include "ddphase/dynamics.hpp"
#include "ddphase/errors.hpp"
#include "ddphase/lp_builder.hpp"

namespace ddphase {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// (D theta - delta_des) in degrees. Entry N-1 is the wrap-around pair.
inline Eigen::VectorXd spacing_errors(const Eigen::VectorXd& theta, const SpacingTarget& target) {
  if (theta.size() != target.delta_des.size())
    throw DomainError("spacing_errors: " + std::to_string(theta.size()) + " angles for a " +
                      std::to_string(target.delta_des.size()) + "-satellite target");
  return (adjacent_differences(theta) - target.delta_des) * kRadToDeg;
}

inline Eigen::VectorXd thetas(const ConstellationState& c) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) v(static_cast<Eigen::Index>(i)) = c.sats[i].theta;
  return v;
}

inline Eigen::VectorXd omegas(const ConstellationState& c) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(c.size()));
  for (std::size_t i = 0; i < c.size(); ++i) v(static_cast<Eigen::Index>(i)) = c.sats[i].omega;
  return v;
}

inline double min_altitude(const ConstellationState& c, const Environment& env) {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& s : c.sats) lo = std::min(lo, altitude(s.r, env));
  return lo;
}

// max_i (r_i(a) - r_i(b)), km.
inline double max_altitude_drop(const ConstellationState& a, const ConstellationState& b) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, a.sats[i].r - b.sats[i].r);
  return worst;
}

enum class Phase { kAcquisition, kDrift, kMaintenance };

inline std::string to_string(Phase p) {
  switch (p) {
    case Phase::kAcquisition: return "acquisition";
    case Phase::kDrift: return "drift";
    case Phase::kMaintenance: return "maintenance";
  }
  return "unknown";
}

// One LP solve inside a run.
struct DaySolve {
  int day = 0;
  int horizon = 0;
  std::string status;
  double objective = kNaN;
  long iterations = 0;
  double max_residual = kNaN;
  bool recovery = false;  // solved right after a mid-run horizon search
};

struct PhaseReport {
  Phase phase = Phase::kDrift;
  int start_day = 0;
  int end_day = 0;
  double start_epoch = 0.0;
  double end_epoch = 0.0;
  int horizon = 0;                      // initial horizon, 0 for uncontrolled phases
  double max_spacing_error = kNaN;      // deg, max |error| at end_day
  double max_altitude_drop = kNaN;      // km, truth states
  double predicted_max_drop = kNaN;     // km, first LP's -t relative to the start
  int recoveries = 0;
  Eigen::VectorXd final_spacing_error;  // deg
  Eigen::VectorXd final_domega;         // rad/s, truth D omega at end_day
  Eigen::VectorXd predicted_domega;     // rad/s, last LP's predicted D omega
  double domega_tolerance = kNaN;       // rad/s, eps_omega plus the scaled row tolerance
  std::vector<DaySolve> solves;
};

struct DayRecord {
  int day = 0;
  double epoch = 0.0;
  std::vector<SatState> sats;
  std::vector<double> area;  // applied over [day, day+1); NaN when nothing was applied
  Eigen::VectorXd spacing_error;  // deg
  double min_altitude = kNaN;     // km
  std::string phase;
  int horizon = 0;
  std::string lp_status;
  double lp_objective = kNaN;
  long lp_iterations = 0;
};

struct RunLog {
  std::vector<DayRecord> days;
  std::vector<PhaseReport> phases;

  bool empty() const { return days.empty(); }
  std::size_t n_sats() const { return days.empty() ? 0 : days.front().sats.size(); }
};

// Appends the state at `day` unless it is already the last record.
inline DayRecord& record_state(RunLog& log, int day, const ConstellationState& c, Phase phase,
                               const SpacingTarget& target, const Environment& env) {
  if (!log.days.empty() && log.days.back().day == day) return log.days.back();
  DayRecord rec;
  rec.day = day;
  rec.epoch = c.epoch;
  rec.sats = c.sats;
  rec.area.assign(c.size(), kNaN);
  rec.spacing_error = spacing_errors(thetas(c), target);
  rec.min_altitude = min_altitude(c, env);
  rec.phase = to_string(phase);
  log.days.push_back(std::move(rec));
  return log.days.back();
}

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  return out;
}

}  // namespace detail

inline void write_run_csv(const RunLog& log, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  using detail::fmt;

  auto states = detail::open_out(dir / "states.csv");
  states << "day,sat,r_km,omega_rad_s,theta_rad,area_m2\n";
  auto spacing = detail::open_out(dir / "spacing.csv");
  spacing << "day,pair,error_deg\n";
  auto days = detail::open_out(dir / "days.csv");
  days << "day,epoch_s,phase,min_altitude_km,horizon,lp_status,lp_objective,lp_iterations\n";
  for (const auto& d : log.days) {
    for (std::size_t i = 0; i < d.sats.size(); ++i) {
      states << d.day << ',' << i << ',' << fmt(d.sats[i].r) << ',' << fmt(d.sats[i].omega) << ','
             << fmt(d.sats[i].theta) << ',' << fmt(d.area[i]) << '\n';
    }
    for (Eigen::Index i = 0; i < d.spacing_error.size(); ++i)
      spacing << d.day << ',' << i << ',' << fmt(d.spacing_error(i)) << '\n';
    days << d.day << ',' << fmt(d.epoch) << ',' << d.phase << ',' << fmt(d.min_altitude) << ','
         << d.horizon << ',' << d.lp_status << ',' << fmt(d.lp_objective) << ','
         << d.lp_iterations << '\n';
  }

  auto summary = detail::open_out(dir / "summary.csv");
  summary << "phase,start_day,end_day,start_epoch_s,end_epoch_s,horizon_days,"
             "max_spacing_error_deg,max_altitude_drop_km,predicted_max_drop_km,lp_solves,"
             "lp_iterations,recoveries\n";
  for (const auto& p : log.phases) {
    long iters = 0;
    for (const auto& s : p.solves) iters += s.iterations;
    summary << to_string(p.phase) << ',' << p.start_day << ',' << p.end_day << ','
            << fmt(p.start_epoch) << ',' << fmt(p.end_epoch) << ',' << p.horizon << ','
            << fmt(p.max_spacing_error) << ',' << fmt(p.max_altitude_drop) << ','
            << fmt(p.predicted_max_drop) << ',' << p.solves.size() << ',' << iters << ','
            << p.recoveries << '\n';
  }
  for (auto* f : {&states, &spacing, &days, &summary}) {
    f->flush();
    if (!*f) throw IoError("write failed in " + dir.string());
  }
}

struct StateRow {
  int day = 0;
  std::size_t sat = 0;
  double r_km = 0.0;
  double omega_rad_s = 0.0;
  double theta_rad = 0.0;
  double area_m2 = 0.0;
};

inline std::vector<StateRow> read_states_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "day,sat,r_km,omega_rad_s,theta_rad,area_m2")
    throw ParseError(path.string() + ": unexpected header");
  std::vector<StateRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 6)
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected 6 fields");
    const auto where = path.string() + ":" + std::to_string(line_no);
    StateRow r;
    r.day = static_cast<int>(detail::parse_double(f[0], where));
    r.sat = static_cast<std::size_t>(detail::parse_double(f[1], where));
    r.r_km = detail::parse_double(f[2], where);
    r.omega_rad_s = detail::parse_double(f[3], where);
    r.theta_rad = detail::parse_double(f[4], where);
    r.area_m2 = detail::parse_double(f[5], where);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace ddphase
