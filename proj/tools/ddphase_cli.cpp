// ddphase: command-line driver for the phasing experiments.
//
//   ddphase <verb> --config cfg.json --out dir [--dump-lp] [verb options]
//
// On success a one-line JSON summary goes to stdout and CSVs to --out. On
// failure a one-line JSON object {"error": kind, "message": text} goes to
// stderr and the exit status is nonzero.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ddphase/mpc.hpp"

namespace fs = std::filesystem;
using namespace ddphase;
using nlohmann::json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

void fail(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct Common {
  std::string config;
  std::string out;
  bool dump_lp = false;
  bool verbose = false;
};

class EventLog {
 public:
  EventLog(const fs::path& dir, bool echo) : echo_(echo) {
    fs::create_directories(dir);
    out_.open(dir / "events.log", std::ios::binary);
    if (!out_) throw IoError("cannot open " + (dir / "events.log").string());
  }

  void operator()(const std::string& msg) {
    out_ << msg << '\n';
    out_.flush();
    if (echo_) std::cerr << "note: " << msg << '\n';
  }

 private:
  bool echo_;
  std::ofstream out_;
};

MpcOptions options_for(const Common& c, EventLog& events) {
  MpcOptions opt;
  opt.notify = [&events](const std::string& m) { events(m); };
  if (c.dump_lp) {
    const fs::path dir = fs::path(c.out) / "lp";
    fs::create_directories(dir);
    opt.lp_sink = [dir](const LinearProgram& lp, int day) {
      char name[64];
      std::snprintf(name, sizeof name, "day_%04d_T%03zu.lp", day, lp.horizon);
      write_lp_file(lp, (dir / name).string());
    };
  }
  return opt;
}

json phase_json(const PhaseReport& p) {
  return {{"phase", to_string(p.phase)},
          {"start_day", p.start_day},
          {"end_day", p.end_day},
          {"horizon", p.horizon},
          {"max_spacing_error_deg", number(p.max_spacing_error)},
          {"max_altitude_drop_km", number(p.max_altitude_drop)},
          {"predicted_max_drop_km", number(p.predicted_max_drop)},
          {"recoveries", p.recoveries}};
}

std::vector<int> parse_horizons(const std::string& text) {
  std::vector<int> out;
  for (auto field : detail::split(text, ',')) {
    const double v = detail::parse_double(field, "--horizons");
    if (v < 1 || v != std::floor(v))
      throw ValidationError("--horizons", "entries must be positive integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differential-drag phasing of satellite clusters"};
  app.require_subcommand(1);
  Common common;
  int horizon = 0;
  int max_days = 0;
  std::string horizons;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON configuration file")->required();
    sub->add_option("--out", common.out, "output directory")->required();
    sub->add_flag("--dump-lp", common.dump_lp, "write every assembled LP to <out>/lp");
    sub->add_flag("-v,--verbose", common.verbose, "echo progress notes to stderr");
  };
  auto* min_h = app.add_subcommand("min-horizon", "smallest feasible horizon from the start state");
  auto* open = app.add_subcommand("open-loop", "solve once and apply every command");
  auto* mpc = app.add_subcommand("mpc", "shrinking-horizon feedback run");
  auto* sweep = app.add_subcommand("sweep", "MPC runs over several horizons");
  auto* life = app.add_subcommand("lifetime", "acquisition, drift and maintenance until reentry");
  auto* dump = app.add_subcommand("dump-config", "write the fully resolved configuration");
  for (auto* s : {min_h, open, mpc, sweep, life, dump}) add_common(s);
  open->add_option("--horizon", horizon, "horizon in days")->required();
  mpc->add_option("--horizon", horizon, "horizon in days")->required();
  sweep->add_option("--horizons", horizons, "comma-separated horizons in days")->required();
  life->add_option("--max-days", max_days, "stop after this many days (0: run to reentry)")
      ->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail("usage", e.what());
    return kExitUsage;
  }

  try {
    const Config cfg = load_config(common.config);
    const fs::path out = common.out;
    EventLog events(out, common.verbose);
    MpcOptions opt = options_for(common, events);
    const auto c0 = initial_cluster(cfg.scenario, cfg.environment);
    json summary;

    if (*dump) {
      std::ofstream f(out / "config.json", std::ios::binary);
      f << dump_config(cfg);
      if (!f) throw IoError("cannot write " + (out / "config.json").string());
      summary = {{"config", (out / "config.json").string()}};
    } else if (*min_h) {
      const int t = find_min_horizon(c0, cfg, opt);
      if (opt.lp_sink) {
        const auto ref = build_reference(c0, t, cfg.satellite, cfg.environment,
                                         cfg.scenario.dt_command);
        opt.lp_sink(assemble(c0, t, ref, make_spacing_target(c0.size()), cfg.scenario,
                             cfg.satellite),
                    0);
      }
      std::ofstream f(out / "min_horizon.csv", std::ios::binary);
      f << "horizon_days\n" << t << '\n';
      if (!f) throw IoError("cannot write " + (out / "min_horizon.csv").string());
      summary = {{"horizon", t}};
    } else if (*open || *mpc) {
      const auto [log, rep] = *open ? run_open_loop(c0, horizon, cfg, opt)
                                    : run_mpc(c0, horizon, cfg, opt);
      write_run_csv(log, out);
      summary = phase_json(rep);
    } else if (*sweep) {
      const auto rows = run_horizon_sweep(c0, parse_horizons(horizons), cfg, opt);
      write_sweep_csv(rows, out);
      json list = json::array();
      for (const auto& r : rows)
        list.push_back({{"horizon", r.horizon},
                        {"ok", r.ok},
                        {"max_altitude_drop_km", number(r.max_altitude_drop)}});
      summary = {{"sweep", list}};
    } else if (*life) {
      opt.max_days = max_days;
      const auto res = run_lifetime(c0, cfg, opt);
      write_run_csv(res.log, out);
      int bursts = 0;
      for (const auto& p : res.log.phases) bursts += p.phase == Phase::kMaintenance ? 1 : 0;
      summary = {{"days", res.days}, {"reentered", res.reentered}, {"maintenance_bursts", bursts}};
    }
    std::cout << summary.dump() << std::endl;
    return 0;
  } catch (const Error& e) {
    fail(e.kind(), e.what());
  } catch (const fs::filesystem_error& e) {
    fail("io", e.what());
  } catch (const std::exception& e) {
    fail("internal", e.what());
  }
  return kExitFailure;
}
