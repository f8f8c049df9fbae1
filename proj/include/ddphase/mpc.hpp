#pragma once

// Experiment drivers: minimum-horizon search, open-loop rollout, shrinking-horizon
// MPC, drift/maintenance lifetime runs and constant-area baselines.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ddphase/config.hpp"
#include "ddphase/dynamics.hpp"
#include "ddphase/errors.hpp"
#include "ddphase/lp_builder.hpp"
#include "ddphase/lp_solver.hpp"
#include "ddphase/metrics_io.hpp"
#include "ddphase/parallel.hpp"
#include "ddphase/sensitivity.hpp"

namespace ddphase {

// Area commands, one row per satellite and one column per day.
struct CommandSchedule {
  int horizon = 0;
  Eigen::MatrixXd u;  // m^2
};

struct MpcOptions {
  SolverOptions solver;
  unsigned workers = 0;
  // Lifetime runs stop once this many days have been simulated (0: no cap).
  int max_days = 0;
  // Called with every assembled LP before it is solved.
  std::function<void(const LinearProgram&, int day)> lp_sink;
  // Progress and recovery messages.
  std::function<void(const std::string&)> notify;
};

namespace detail {

inline void say(const MpcOptions& opt, const std::string& msg) {
  if (opt.notify) opt.notify(msg);
}

inline CommandSchedule schedule_of(const LinearProgram& lp, const Eigen::VectorXd& x,
                                   const SatelliteParams& p) {
  CommandSchedule s;
  s.horizon = static_cast<int>(lp.horizon);
  s.u.resize(static_cast<Eigen::Index>(lp.n_sats), s.horizon);
  for (std::size_t i = 0; i < lp.n_sats; ++i)
    for (std::size_t k = 0; k < lp.horizon; ++k)
      s.u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          std::clamp(x(lp.area_index(i, k)), p.area_min, p.area_max);
  return s;
}

struct Plan {
  ConstellationState view;  // state the LP was built from
  ReferenceTrajectory ref;
  LinearProgram lp;
  LpSolution sol;
  CommandSchedule schedule;
};

inline Plan plan(const ConstellationState& truth, int horizon, const SpacingTarget& target,
                 const Config& cfg, const MpcOptions& opt, int day) {
  Plan pl;
  pl.view = controller_view(truth, cfg.environment, cfg.scenario.lp_state);
  const ConstellationState& c = pl.view;
  pl.ref = build_reference(c, horizon, cfg.satellite, cfg.environment, cfg.scenario.dt_command,
                           opt.workers);
  pl.lp = assemble(c, horizon, pl.ref, target, cfg.scenario, cfg.satellite);
  if (opt.lp_sink) opt.lp_sink(pl.lp, day);
  pl.sol = solve(pl.lp, opt.solver);
  if (pl.sol.status == LpStatus::kOptimal) pl.schedule = schedule_of(pl.lp, pl.sol.x, cfg.satellite);
  return pl;
}

inline DaySolve solve_record(const Plan& pl, int day, bool recovery) {
  DaySolve d;
  d.day = day;
  d.horizon = static_cast<int>(pl.lp.horizon);
  d.status = to_string(pl.sol.status);
  d.objective = pl.sol.objective;
  d.iterations = pl.sol.iterations;
  d.max_residual = pl.sol.max_primal_residual;
  d.recovery = recovery;
  return d;
}

inline double predicted_drop(const Plan& pl) {
  const ConstellationState& c = pl.view;
  const auto pred = predict_final(pl.view, pl.ref, pl.schedule.u);
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.size(); ++i)
    worst = std::max(worst, c.sats[i].r - pred.r(static_cast<Eigen::Index>(i)));
  return worst;
}

inline std::vector<double> column(const CommandSchedule& s, int k) {
  std::vector<double> a(static_cast<std::size_t>(s.u.rows()));
  for (Eigen::Index i = 0; i < s.u.rows(); ++i) a[static_cast<std::size_t>(i)] = s.u(i, k);
  return a;
}

inline PhaseReport open_report(Phase phase, int day, const ConstellationState& c, int horizon) {
  PhaseReport r;
  r.phase = phase;
  r.start_day = day;
  r.end_day = day;
  r.start_epoch = c.epoch;
  r.end_epoch = c.epoch;
  r.horizon = horizon;
  return r;
}

inline void close_report(PhaseReport& r, const ConstellationState& start,
                         const ConstellationState& end, int day, const SpacingTarget& target) {
  r.end_day = day;
  r.end_epoch = end.epoch;
  r.final_spacing_error = spacing_errors(thetas(end), target);
  r.max_spacing_error = r.final_spacing_error.cwiseAbs().maxCoeff();
  r.max_altitude_drop = max_altitude_drop(start, end);
  r.final_domega = adjacent_differences(omegas(end));
}

inline void advance_day(RunLog& log, ConstellationState& c, int& day,
                                      const std::vector<double>& areas, Phase phase,
                                      const SpacingTarget& target, const Config& cfg,
                                      const MpcOptions& opt) {
  DayRecord& rec = record_state(log, day, c, phase, target, cfg.environment);
  rec.area = areas;
  c = propagate_interval(c, areas, cfg.scenario.dt_command, cfg.scenario.dt_fine, cfg.satellite,
                         cfg.environment, opt.workers);
  ++day;
  record_state(log, day, c, phase, target, cfg.environment);
}

}  // namespace detail

// Smallest T in [1, horizon_max] whose LP is feasible, scanning upward.
inline int find_min_horizon(const ConstellationState& truth, const Config& cfg,
                            const MpcOptions& opt = {}) {
  const ConstellationState c0 = controller_view(truth, cfg.environment, cfg.scenario.lp_state);
  const auto target = make_spacing_target(c0.size());
  SolverOptions so = opt.solver;
  so.phase1_only = true;
  double best_gap = std::numeric_limits<double>::infinity();
  int best_t = 0;
  std::string stop_reason;
  int t = 1;
  for (; t <= cfg.scenario.horizon_max; ++t) {
    ReferenceTrajectory ref;
    try {
      ref = build_reference(c0, t, cfg.satellite, cfg.environment, cfg.scenario.dt_command,
                            opt.workers);
    } catch (const DomainError& e) {
      stop_reason = std::string("; scan stopped at T=") + std::to_string(t) + ": " + e.what();
      break;
    }
    const auto lp = assemble(c0, t, ref, target, cfg.scenario, cfg.satellite);
    const auto sol = solve(lp, so);
    if (sol.status == LpStatus::kOptimal) return t;
    if (sol.phase1_objective < best_gap) {
      best_gap = sol.phase1_objective;
      best_t = t;
    }
  }
  std::ostringstream msg;
  msg << "no feasible horizon in [1, " << cfg.scenario.horizon_max << "]; smallest phase-1 gap "
      << best_gap << " at T=" << best_t << stop_reason;
  throw InfeasibleError(msg.str(), best_gap);
}

// Solves once at the start and applies every command without feedback.
inline std::pair<RunLog, PhaseReport> run_open_loop(const ConstellationState& c0, int horizon,
                                                    const Config& cfg,
                                                    const MpcOptions& opt = {}) {
  if (horizon < 1) throw DomainError("run_open_loop: horizon must be >= 1");
  const auto target = make_spacing_target(c0.size());
  RunLog log;
  int day = 0;
  ConstellationState c = c0;
  PhaseReport rep = detail::open_report(Phase::kAcquisition, day, c, horizon);
  const auto pl = detail::plan(c, horizon, target, cfg, opt, day);
  rep.solves.push_back(detail::solve_record(pl, day, false));
  if (pl.sol.status != LpStatus::kOptimal)
    throw InfeasibleError("open-loop LP at T=" + std::to_string(horizon) + " is " +
                              to_string(pl.sol.status),
                          pl.sol.phase1_objective);
  rep.predicted_max_drop = detail::predicted_drop(pl);
  const auto pred = predict_final(pl.view, pl.ref, pl.schedule.u);
  rep.predicted_domega = adjacent_differences(pred.omega);
  DayRecord& first = record_state(log, day, c, Phase::kAcquisition, target, cfg.environment);
  first.horizon = horizon;
  first.lp_status = to_string(pl.sol.status);
  first.lp_objective = pl.sol.objective;
  first.lp_iterations = pl.sol.iterations;
  for (int k = 0; k < horizon; ++k)
    detail::advance_day(log, c, day, detail::column(pl.schedule, k), Phase::kAcquisition, target,
                        cfg, opt);
  detail::close_report(rep, c0, c, day, target);
  log.phases.push_back(rep);
  return {std::move(log), rep};
}

namespace detail {

// Shrinking-horizon loop shared by acquisition and maintenance. Appends to `log`
// and advances `c` and `day`. Stops early if the minimum altitude reaches
// `stop_altitude`.
inline PhaseReport controlled_phase(RunLog& log, ConstellationState& c, int& day, int horizon,
                                    Phase phase, const SpacingTarget& target, const Config& cfg,
                                    const MpcOptions& opt,
                                    double stop_altitude = -std::numeric_limits<double>::infinity()) {
  if (horizon < 1) throw DomainError("run_mpc: horizon must be >= 1");
  const ConstellationState start = c;
  PhaseReport rep = open_report(phase, day, c, horizon);
  const auto scale_tol = [&](const LinearProgram& lp) {
    const auto n = static_cast<Eigen::Index>(lp.n_sats);
    const double worst_scale = lp.row_scale.segment(3 * n, 2 * n).maxCoeff();
    return cfg.scenario.eps_omega + opt.solver.feas_tol * worst_scale / kSecondsPerDay;
  };
  int remaining = horizon;
  bool first = true;
  while (remaining > 0) {
    Plan pl = plan(c, remaining, target, cfg, opt, day);
    bool recovered = false;
    if (pl.sol.status != LpStatus::kOptimal) {
      rep.solves.push_back(solve_record(pl, day, false));
      if (first)
        throw InfeasibleError("LP at T=" + std::to_string(remaining) + " from day " +
                                  std::to_string(day) + " is " + to_string(pl.sol.status),
                              pl.sol.phase1_objective);
      say(opt, "day " + std::to_string(day) + ": LP with horizon " + std::to_string(remaining) +
                   " is " + to_string(pl.sol.status) + "; searching for a new horizon");
      remaining = find_min_horizon(c, cfg, opt);
      say(opt, "day " + std::to_string(day) + ": continuing with horizon " +
                   std::to_string(remaining));
      ++rep.recoveries;
      recovered = true;
      pl = plan(c, remaining, target, cfg, opt, day);
      if (pl.sol.status != LpStatus::kOptimal)
        throw InfeasibleError("recovery LP at T=" + std::to_string(remaining) + " from day " +
                                  std::to_string(day) + " is " + to_string(pl.sol.status),
                              pl.sol.phase1_objective);
    }
    rep.solves.push_back(solve_record(pl, day, recovered));
    if (first) rep.predicted_max_drop = predicted_drop(pl);
    first = false;
    const auto pred = predict_final(pl.view, pl.ref, pl.schedule.u);
    rep.predicted_domega = adjacent_differences(pred.omega);
    rep.domega_tolerance = scale_tol(pl.lp);

    DayRecord& rec = record_state(log, day, c, phase, target, cfg.environment);
    rec.horizon = remaining;
    rec.lp_status = to_string(pl.sol.status);
    rec.lp_objective = pl.sol.objective;
    rec.lp_iterations = pl.sol.iterations;
    advance_day(log, c, day, column(pl.schedule, 0), phase, target, cfg, opt);
    --remaining;
    if (min_altitude(c, cfg.environment) <= stop_altitude) break;
  }
  close_report(rep, start, c, day, target);
  return rep;
}

}  // namespace detail

// Re-plans every day with the remaining horizon and applies the first command.
inline std::pair<RunLog, PhaseReport> run_mpc(const ConstellationState& c0, int horizon,
                                              const Config& cfg, const MpcOptions& opt = {}) {
  const auto target = make_spacing_target(c0.size());
  RunLog log;
  ConstellationState c = c0;
  int day = 0;
  PhaseReport rep =
      detail::controlled_phase(log, c, day, horizon, Phase::kAcquisition, target, cfg, opt);
  log.phases.push_back(rep);
  return {std::move(log), rep};
}

struct SweepRow {
  int horizon = 0;
  bool ok = false;
  double max_altitude_drop = kNaN;  // km
  double max_spacing_error = kNaN;  // deg
  int recoveries = 0;
  std::string error;
};

// One MPC run per horizon, in parallel. Failures are recorded per row.
inline std::vector<SweepRow> run_horizon_sweep(const ConstellationState& c0,
                                               const std::vector<int>& horizons,
                                               const Config& cfg, const MpcOptions& opt = {}) {
  std::vector<SweepRow> rows(horizons.size());
  MpcOptions inner = opt;
  inner.workers = 1;
  inner.lp_sink = nullptr;
  parallel_for(
      horizons.size(),
      [&](std::size_t i) {
        rows[i].horizon = horizons[i];
        try {
          const auto [log, rep] = run_mpc(c0, horizons[i], cfg, inner);
          rows[i].ok = true;
          rows[i].max_altitude_drop = rep.max_altitude_drop;
          rows[i].max_spacing_error = rep.max_spacing_error;
          rows[i].recoveries = rep.recoveries;
        } catch (const Error& e) {
          rows[i].error = e.kind() + ": " + e.what();
        }
      },
      opt.workers);
  return rows;
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  auto out = detail::open_out(dir / "sweep.csv");
  out << "horizon_days,status,max_altitude_drop_km,max_spacing_error_deg,recoveries,error\n";
  for (const auto& r : rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << r.horizon << ',' << (r.ok ? "ok" : "failed") << ',' << detail::fmt(r.max_altitude_drop)
        << ',' << detail::fmt(r.max_spacing_error) << ',' << r.recoveries << ',' << err << '\n';
  }
  out.flush();
  if (!out) throw IoError("write failed in " + dir.string());
}

struct LifetimeResult {
  RunLog log;
  int days = 0;
  bool reentered = false;  // false when the day cap ended the run
};

inline ConstellationState state_at(const DayRecord& d) {
  ConstellationState c;
  c.epoch = d.epoch;
  c.sats = d.sats;
  return c;
}

namespace detail {

[[noreturn]] inline void maintenance_infeasible(const InfeasibleError& e, int day,
                                                const ConstellationState& c) {
  std::ostringstream msg;
  msg.precision(17);
  msg << "maintenance at day " << day << " infeasible: " << e.what() << "; state r_km=[";
  for (std::size_t i = 0; i < c.size(); ++i) msg << (i ? " " : "") << c.sats[i].r;
  msg << "] theta_rad=[";
  for (std::size_t i = 0; i < c.size(); ++i) msg << (i ? " " : "") << c.sats[i].theta;
  msg << "] omega_rad_s=[";
  for (std::size_t i = 0; i < c.size(); ++i) msg << (i ? " " : "") << c.sats[i].omega;
  msg << "]";
  throw InfeasibleError(msg.str(), e.gap());
}

// Drift at area_min with maintenance bursts whenever the largest spacing error
// exceeds the threshold. Runs until reentry or until `last_day` (if > 0).
inline void keep_station(RunLog& log, ConstellationState& c, int& day, int last_day,
                         const SpacingTarget& target, const Config& cfg, const MpcOptions& opt) {
  const auto& scn = cfg.scenario;
  const auto down = [&] { return min_altitude(c, cfg.environment) <= scn.reentry_altitude; };
  const auto capped = [&] { return last_day > 0 && day >= last_day; };
  const std::vector<double> drift_areas(c.size(), cfg.satellite.area_min);
  record_state(log, day, c, Phase::kDrift, target, cfg.environment);
  while (!down() && !capped()) {
    const ConstellationState start = c;
    PhaseReport drift = open_report(Phase::kDrift, day, c, 0);
    while (!down() && !capped() &&
           spacing_errors(thetas(c), target).cwiseAbs().maxCoeff() <= scn.maintenance_threshold)
      advance_day(log, c, day, drift_areas, Phase::kDrift, target, cfg, opt);
    if (day > drift.start_day) {
      close_report(drift, start, c, day, target);
      log.phases.push_back(drift);
    }
    if (down() || capped()) break;
    int t = 0;
    try {
      t = find_min_horizon(c, cfg, opt);
    } catch (const InfeasibleError& e) {
      maintenance_infeasible(e, day, c);
    }
    say(opt, "day " + std::to_string(day) + ": maintenance horizon " + std::to_string(t));
    log.phases.push_back(controlled_phase(log, c, day, t, Phase::kMaintenance, target, cfg, opt,
                                          scn.reentry_altitude));
  }
}

}  // namespace detail

// Drift and maintenance from an already acquired state for `days` days (or
// until reentry). Day numbers in the log start at `start_day`.
inline LifetimeResult run_station_keeping(const ConstellationState& c0, int days, const Config& cfg,
                                          const MpcOptions& opt = {}, int start_day = 0) {
  if (days < 1) throw DomainError("run_station_keeping: days must be >= 1");
  const auto target = make_spacing_target(c0.size());
  LifetimeResult res;
  ConstellationState c = c0;
  int day = start_day;
  detail::keep_station(res.log, c, day, start_day + days, target, cfg, opt);
  res.days = day - start_day;
  res.reentered = min_altitude(c, cfg.environment) <= cfg.scenario.reentry_altitude;
  return res;
}

// Acquisition, then alternating drift at area_min and maintenance bursts until
// the lowest satellite reaches the reentry altitude (or opt.max_days).
inline LifetimeResult run_lifetime(const ConstellationState& c0, const Config& cfg,
                                   const MpcOptions& opt = {}) {
  const auto target = make_spacing_target(c0.size());
  LifetimeResult res;
  ConstellationState c = c0;
  int day = 0;
  const int t_acq = find_min_horizon(c, cfg, opt);
  detail::say(opt, "acquisition horizon " + std::to_string(t_acq) + " days");
  res.log.phases.push_back(detail::controlled_phase(res.log, c, day, t_acq, Phase::kAcquisition,
                                                    target, cfg, opt,
                                                    cfg.scenario.reentry_altitude));
  detail::keep_station(res.log, c, day, opt.max_days, target, cfg, opt);
  res.days = day;
  res.reentered = min_altitude(c, cfg.environment) <= cfg.scenario.reentry_altitude;
  return res;
}

namespace detail {

// Propagates only the distinct initial states (constant, equal areas keep
// identical satellites identical) and scatters the results.
inline ConstellationState propagate_uniform(const ConstellationState& c, double area,
                                            const Config& cfg, const MpcOptions& opt) {
  const auto key = [](const SatState& s) {
    return std::array<double, 4>{s.r, s.r_dot, s.theta, s.omega};
  };
  std::map<std::array<double, 4>, std::size_t> index;
  ConstellationState uniq;
  uniq.epoch = c.epoch;
  std::vector<std::size_t> slot(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto [it, added] = index.emplace(key(c.sats[i]), uniq.sats.size());
    if (added) uniq.sats.push_back(c.sats[i]);
    slot[i] = it->second;
  }
  const std::vector<double> areas(uniq.size(), area);
  const auto next = propagate_interval(uniq, areas, cfg.scenario.dt_command, cfg.scenario.dt_fine,
                                       cfg.satellite, cfg.environment, opt.workers);
  ConstellationState out;
  out.epoch = next.epoch;
  out.sats.resize(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out.sats[i] = next.sats[slot[i]];
  return out;
}

}  // namespace detail

// Every satellite held at the same area for `days` days.
inline PhaseReport run_constant_area(const ConstellationState& c0, int days, double area,
                                     const Config& cfg, const MpcOptions& opt = {}) {
  if (days < 0) throw DomainError("run_constant_area: days must be >= 0");
  const auto target = make_spacing_target(c0.size());
  ConstellationState c = c0;
  PhaseReport rep = detail::open_report(Phase::kDrift, 0, c, 0);
  for (int k = 0; k < days; ++k) c = detail::propagate_uniform(c, area, cfg, opt);
  detail::close_report(rep, c0, c, days, target);
  return rep;
}

// Days until the lowest satellite reaches the reentry altitude at a constant
// area, or -1 if that does not happen within max_days.
inline int constant_area_lifetime(const ConstellationState& c0, double area, const Config& cfg,
                                  int max_days, const MpcOptions& opt = {}) {
  ConstellationState c = c0;
  for (int day = 0; day < max_days; ++day) {
    if (min_altitude(c, cfg.environment) <= cfg.scenario.reentry_altitude) return day;
    try {
      c = detail::propagate_uniform(c, area, cfg, opt);
    } catch (const ReentryError&) {
      return day + 1;  // fell through the reentry altitude and the table floor within one day
    }
  }
  return min_altitude(c, cfg.environment) <= cfg.scenario.reentry_altitude ? max_days : -1;
}

}  // namespace ddphase
