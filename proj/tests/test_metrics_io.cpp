#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "ddphase/metrics_io.hpp"
#include "ddphase/mpc.hpp"
#include "test_support.hpp"

using namespace ddphase;
using namespace ddphase::testing;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ddphase_metrics_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::filesystem::path& p) {
  const auto s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST(SpacingErrors, EquallySpacedIsZero) {
  for (std::size_t n : {2u, 5u, 12u}) {
    const auto target = make_spacing_target(n);
    Eigen::VectorXd theta(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      theta(static_cast<Eigen::Index>(i)) = 0.3 - 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
    EXPECT_LT(spacing_errors(theta, target).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SpacingErrors, HandExample) {
  const Eigen::Vector4d theta(0.0, -kPi / 2 + 0.001, -kPi, -3 * kPi / 2);
  const auto e = spacing_errors(theta, make_spacing_target(4));
  EXPECT_NEAR(e(0), -0.0572957795130823, 1e-12);
  EXPECT_NEAR(e(1), 0.0572957795130823, 1e-12);
  EXPECT_NEAR(e(2), 0.0, 1e-12);
  EXPECT_NEAR(e(3), 0.0, 1e-12);
}

TEST(SpacingErrors, ShiftInvariantAndSumsToZero) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ang(-10.0, 10.0);
  const auto target = make_spacing_target(7);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd theta(7);
    for (auto& v : theta) v = ang(rng);
    const auto e = spacing_errors(theta, target);
    EXPECT_NEAR(e.sum(), 0.0, 1e-9);
    const auto shifted = spacing_errors((theta.array() + 123.0).matrix(), target);
    EXPECT_LT((e - shifted).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(SpacingErrors, SizeMismatch) {
  EXPECT_THROW((void)spacing_errors(Eigen::VectorXd::Zero(3), make_spacing_target(4)), DomainError);
}

TEST(WriteRunCsv, EmptyLogGivesHeaders) {
  const auto dir = scratch("empty");
  write_run_csv(RunLog{}, dir);
  for (const char* f : {"states.csv", "spacing.csv", "days.csv", "summary.csv"})
    EXPECT_EQ(count_lines(dir / f), 1u) << f;
  EXPECT_EQ(slurp(dir / "states.csv"), "day,sat,r_km,omega_rad_s,theta_rad,area_m2\n");
  EXPECT_EQ(slurp(dir / "spacing.csv"), "day,pair,error_deg\n");
  EXPECT_TRUE(read_states_csv(dir / "states.csv").empty());
}

TEST(WriteRunCsv, OneDayPairCounts) {
  const Config cfg = config_with(2);
  auto c = initial_cluster(cfg.scenario, cfg.environment);
  c.sats[1].theta = -kPi;
  const auto target = make_spacing_target(2);
  RunLog log;
  DayRecord& d0 = record_state(log, 0, c, Phase::kDrift, target, cfg.environment);
  d0.area = {0.01, 0.02};
  c = propagate_interval(c, d0.area, cfg.scenario.dt_command, cfg.scenario.dt_fine, cfg.satellite,
                         cfg.environment);
  record_state(log, 1, c, Phase::kDrift, target, cfg.environment);
  const auto dir = scratch("oneday");
  write_run_csv(log, dir);
  EXPECT_EQ(count_lines(dir / "states.csv"), 5u);
  EXPECT_EQ(count_lines(dir / "spacing.csv"), 5u);
  EXPECT_EQ(count_lines(dir / "days.csv"), 3u);
}

TEST(WriteRunCsv, StatesRoundTripBitExactly) {
  const Config cfg = config_with(3);
  auto c = initial_cluster(cfg.scenario, cfg.environment);
  for (std::size_t i = 0; i < 3; ++i) c.sats[i].theta = -2.0 * kPi * static_cast<double>(i) / 3.0 - 0.004 * static_cast<double>(i);
  const int T = find_min_horizon(c, cfg);
  const auto [log, rep] = run_mpc(c, T, cfg);
  const auto dir = scratch("roundtrip");
  write_run_csv(log, dir);
  const auto rows = read_states_csv(dir / "states.csv");
  ASSERT_EQ(rows.size(), 3 * log.days.size());
  std::size_t k = 0;
  for (const auto& d : log.days) {
    for (std::size_t i = 0; i < 3; ++i, ++k) {
      EXPECT_EQ(rows[k].day, d.day);
      EXPECT_EQ(rows[k].sat, i);
      EXPECT_EQ(rows[k].r_km, d.sats[i].r);
      EXPECT_EQ(rows[k].omega_rad_s, d.sats[i].omega);
      EXPECT_EQ(rows[k].theta_rad, d.sats[i].theta);
      if (std::isnan(d.area[i]))
        EXPECT_TRUE(std::isnan(rows[k].area_m2));
      else
        EXPECT_EQ(rows[k].area_m2, d.area[i]);
    }
  }
}

TEST(WriteRunCsv, IdenticalRunsGiveIdenticalBytes) {
  const Config cfg = config_with(3);
  auto c = initial_cluster(cfg.scenario, cfg.environment);
  for (std::size_t i = 0; i < 3; ++i) c.sats[i].theta = -2.0 * kPi * static_cast<double>(i) / 3.0 - 0.003 * static_cast<double>(i);
  const int T = find_min_horizon(c, cfg);
  const auto a = scratch("det_a"), b = scratch("det_b");
  MpcOptions one_worker;
  one_worker.workers = 1;
  write_run_csv(run_mpc(c, T, cfg).first, a);
  write_run_csv(run_mpc(c, T, cfg, one_worker).first, b);
  for (const char* f : {"states.csv", "spacing.csv", "days.csv", "summary.csv"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
}

TEST(WriteRunCsv, UnwritableDirectory) {
  const auto file = scratch("blocker");
  std::ofstream(file) << "x";
  EXPECT_THROW(write_run_csv(RunLog{}, file / "sub"), IoError);
}

TEST(ReadStatesCsv, Errors) {
  const auto dir = scratch("bad");
  std::filesystem::create_directories(dir);
  EXPECT_THROW((void)read_states_csv(dir / "missing.csv"), IoError);
  std::ofstream(dir / "header.csv") << "a,b\n";
  EXPECT_THROW((void)read_states_csv(dir / "header.csv"), ParseError);
  std::ofstream(dir / "fields.csv") << "day,sat,r_km,omega_rad_s,theta_rad,area_m2\n1,2,3\n";
  EXPECT_THROW((void)read_states_csv(dir / "fields.csv"), ParseError);
}
