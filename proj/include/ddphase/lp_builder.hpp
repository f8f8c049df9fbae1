#pragma once

// Assembles the phasing linear program
//
//   minimize t  over x = [U, t]
//   subject to  -r(T) <= t                      (radius epigraph, N rows)
//               |D theta(T) - delta_des| <= eps_theta - margin   (2N rows)
//               |D omega(T)| <= eps_omega                (2N rows)
//               area_min <= U <= area_max
//
// where r(T), omega(T), theta(T) are affine in U through the reference
// sensitivities. U is satellite-major: column i*T + k is satellite i on day k.
//
// "LP units": km, rad, rad/day, m^2 and days. Each general row is divided by
// its largest absolute coefficient; row_scale keeps the divisor so residuals can
// be reported in LP units.

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ddphase/atmosphere.hpp"
#include "ddphase/config.hpp"
#include "ddphase/dynamics.hpp"
#include "ddphase/errors.hpp"
#include "ddphase/sensitivity.hpp"

namespace ddphase {

struct SpacingTarget {
  Eigen::MatrixXd d_matrix;   // N x N circulant first difference
  Eigen::VectorXd delta_des;  // rad
};

inline SpacingTarget make_spacing_target(std::size_t n_sats) {
  if (n_sats < 2) throw DomainError("spacing target needs at least two satellites");
  const auto n = static_cast<Eigen::Index>(n_sats);
  SpacingTarget t;
  t.d_matrix = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    t.d_matrix(i, i) = 1.0;
    t.d_matrix(i, (i + 1) % n) = -1.0;
  }
  t.delta_des = Eigen::VectorXd::Constant(n, 2.0 * kPi / static_cast<double>(n));
  t.delta_des(n - 1) = -2.0 * kPi * static_cast<double>(n - 1) / static_cast<double>(n);
  return t;
}

// D * v for the circulant difference operator: v_i - v_{i+1}, wrapping at the end.
inline Eigen::VectorXd adjacent_differences(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out(i) = v(i) - v((i + 1) % n);
  return out;
}

// Row-wise version of adjacent_differences, i.e. D * M.
inline Eigen::MatrixXd adjacent_row_differences(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  Eigen::MatrixXd out(n, m.cols());
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) = m.row(i) - m.row((i + 1) % n);
  return out;
}

// Block-diagonal sensitivity matrices, N x (N*T), in LP units.
struct SBar {
  Eigen::MatrixXd radius;  // km/day per m^2
  Eigen::MatrixXd omega;   // rad/day^2 per m^2
  Eigen::MatrixXd alpha;   // rad/day^2 per m^2, weighted by (T - k - 1/2)
};

inline SBar build_s_bar(const ReferenceTrajectory& ref) {
  const auto n = static_cast<Eigen::Index>(ref.n_sats());
  const auto T = static_cast<Eigen::Index>(ref.horizon());
  const double day = kSecondsPerDay;
  SBar s;
  s.radius = Eigen::MatrixXd::Zero(n, n * T);
  s.omega = Eigen::MatrixXd::Zero(n, n * T);
  s.alpha = Eigen::MatrixXd::Zero(n, n * T);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < T; ++k) {
      const Eigen::Index col = i * T + k;
      s.radius(i, col) = ref.s_r(i, k) * day;
      s.omega(i, col) = ref.s_omega(i, k) * day * day;
      s.alpha(i, col) = (static_cast<double>(T - k) - 0.5) * s.omega(i, col);
    }
  }
  return s;
}

enum class RowBlock { kRadius = 0, kThetaUpper = 1, kThetaLower = 2, kOmegaUpper = 3, kOmegaLower = 4 };

struct LinearProgram {
  Eigen::VectorXd cost;      // n
  Eigen::MatrixXd a_matrix;  // m x n
  Eigen::VectorXd b;         // m
  Eigen::VectorXd lower;     // n (t: -inf)
  Eigen::VectorXd upper;     // n (t: +inf)
  Eigen::VectorXd row_scale;  // m, divisor applied to each row
  std::size_t n_sats = 0;
  std::size_t horizon = 0;

  Eigen::Index rows() const { return a_matrix.rows(); }
  Eigen::Index cols() const { return a_matrix.cols(); }
  Eigen::Index epigraph_index() const { return cols() - 1; }
  Eigen::Index row_index(RowBlock block, std::size_t sat) const {
    return static_cast<Eigen::Index>(static_cast<std::size_t>(block) * n_sats + sat);
  }
  Eigen::Index area_index(std::size_t sat, std::size_t day) const {
    return static_cast<Eigen::Index>(sat * horizon + day);
  }
};

inline LinearProgram assemble(const ConstellationState& c0, int horizon,
                              const ReferenceTrajectory& ref, const SpacingTarget& target,
                              const Scenario& scn, const SatelliteParams& p) {
  if (horizon < 1) throw DomainError("assemble: horizon must be >= 1");
  const std::size_t nsat = c0.size();
  if (ref.n_sats() != nsat || ref.horizon() != static_cast<std::size_t>(horizon))
    throw DomainError("assemble: reference trajectory does not match state / horizon");
  if (static_cast<std::size_t>(target.delta_des.size()) != nsat)
    throw DomainError("assemble: spacing target does not match satellite count");

  const auto n = static_cast<Eigen::Index>(nsat);
  const auto T = static_cast<Eigen::Index>(horizon);
  const Eigen::Index cols = n * T + 1;
  const Eigen::Index rows = 5 * n;
  const double dt = scn.dt_command / kSecondsPerDay;  // days
  const double eps_theta = scn.lp_eps_theta_rad();
  const double eps_omega = scn.eps_omega * kSecondsPerDay;  // rad/day

  Eigen::VectorXd r0(n), w0(n), th0(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = c0.sats[static_cast<std::size_t>(i)];
    r0(i) = s.r;
    w0(i) = s.omega * kSecondsPerDay;
    th0(i) = s.theta;
  }
  // D*theta(0) and D*omega(0) are formed as differences before scaling by the
  // horizon, so the large common drift never enters the rhs.
  const Eigen::VectorXd d_theta0 = adjacent_differences(th0);
  const Eigen::VectorXd d_omega0 = adjacent_differences(w0);
  const Eigen::VectorXd drift = d_theta0 + dt * static_cast<double>(T) * d_omega0;

  const SBar sbar = build_s_bar(ref);
  const Eigen::MatrixXd d_alpha = adjacent_row_differences(sbar.alpha);
  const Eigen::MatrixXd d_omega = adjacent_row_differences(sbar.omega);

  LinearProgram lp;
  lp.n_sats = nsat;
  lp.horizon = static_cast<std::size_t>(horizon);
  lp.cost = Eigen::VectorXd::Zero(cols);
  lp.cost(cols - 1) = 1.0;
  lp.a_matrix = Eigen::MatrixXd::Zero(rows, cols);
  lp.b.resize(rows);

  lp.a_matrix.block(0, 0, n, cols - 1) = -dt * sbar.radius;
  lp.a_matrix.block(0, cols - 1, n, 1).setConstant(-1.0);
  lp.b.segment(0, n) = r0;

  lp.a_matrix.block(n, 0, n, cols - 1) = dt * dt * d_alpha;
  lp.b.segment(n, n) = Eigen::VectorXd::Constant(n, eps_theta) - drift + target.delta_des;
  lp.a_matrix.block(2 * n, 0, n, cols - 1) = -dt * dt * d_alpha;
  lp.b.segment(2 * n, n) = Eigen::VectorXd::Constant(n, eps_theta) + drift - target.delta_des;

  lp.a_matrix.block(3 * n, 0, n, cols - 1) = dt * d_omega;
  lp.b.segment(3 * n, n) = Eigen::VectorXd::Constant(n, eps_omega) - d_omega0;
  lp.a_matrix.block(4 * n, 0, n, cols - 1) = -dt * d_omega;
  lp.b.segment(4 * n, n) = Eigen::VectorXd::Constant(n, eps_omega) + d_omega0;

  lp.row_scale.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    double scale = lp.a_matrix.row(i).cwiseAbs().maxCoeff();
    if (!(scale > 0.0)) scale = 1.0;
    lp.row_scale(i) = scale;
    lp.a_matrix.row(i) /= scale;
    lp.b(i) /= scale;
  }

  const double inf = std::numeric_limits<double>::infinity();
  lp.lower = Eigen::VectorXd::Constant(cols, p.area_min);
  lp.upper = Eigen::VectorXd::Constant(cols, p.area_max);
  lp.lower(cols - 1) = -inf;
  lp.upper(cols - 1) = inf;
  return lp;
}

// Final states predicted by the affine model for a given N x T schedule.
struct LinearPrediction {
  Eigen::VectorXd r;      // km
  Eigen::VectorXd omega;  // rad/s
  Eigen::VectorXd theta;  // rad
};

inline LinearPrediction predict_final(const ConstellationState& c0, const ReferenceTrajectory& ref,
                                      const Eigen::MatrixXd& schedule) {
  const auto n = static_cast<Eigen::Index>(ref.n_sats());
  const auto T = static_cast<Eigen::Index>(ref.horizon());
  const double dt = ref.dt;
  LinearPrediction out{Eigen::VectorXd(n), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = c0.sats[static_cast<std::size_t>(i)];
    double dr = 0.0, dw = 0.0, dth = 0.0;
    for (Eigen::Index k = 0; k < T; ++k) {
      const double u = schedule(i, k);
      dr += ref.s_r(i, k) * u;
      dw += ref.s_omega(i, k) * u;
      dth += (static_cast<double>(T - k) - 0.5) * ref.s_omega(i, k) * u;
    }
    out.r(i) = s.r + dt * dr;
    out.omega(i) = s.omega + dt * dw;
    out.theta(i) = s.theta + dt * static_cast<double>(T) * s.omega + dt * dt * dth;
  }
  return out;
}

// Residuals A x - b in LP units (row_scale undone).
inline Eigen::VectorXd unscaled_residuals(const LinearProgram& lp, const Eigen::VectorXd& x) {
  return (lp.a_matrix * x - lp.b).cwiseProduct(lp.row_scale);
}

// Plain-text dump, documented in docs/lp_format.md.
inline void write_lp(const LinearProgram& lp, std::ostream& out) {
  char buf[40];
  auto num = [&](double v) -> const char* {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  };
  out << "# ddphase linear program: minimize cost.x subject to A x <= b, lower <= x <= upper\n";
  out << "dims " << lp.rows() << ' ' << lp.cols() << '\n';
  out << "cost";
  for (Eigen::Index j = 0; j < lp.cols(); ++j) out << ' ' << num(lp.cost(j));
  out << '\n';
  for (Eigen::Index i = 0; i < lp.rows(); ++i) {
    out << "row";
    for (Eigen::Index j = 0; j < lp.cols(); ++j) out << ' ' << num(lp.a_matrix(i, j));
    out << " <= " << num(lp.b(i)) << '\n';
  }
  out << "lower";
  for (Eigen::Index j = 0; j < lp.cols(); ++j) out << ' ' << num(lp.lower(j));
  out << "\nupper";
  for (Eigen::Index j = 0; j < lp.cols(); ++j) out << ' ' << num(lp.upper(j));
  out << '\n';
}

inline void write_lp_file(const LinearProgram& lp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write LP dump '" + path + "'");
  write_lp(lp, out);
  if (!out) throw IoError("failed writing LP dump '" + path + "'");
}

// Reads the dump format back. Row scales are not part of the format and come back as 1.
inline LinearProgram read_lp(std::istream& in) {
  std::string line;
  Eigen::Index rows = -1, cols = -1;
  LinearProgram lp;
  Eigen::Index row = 0;
  auto tokens_of = [](const std::string& l) {
    std::vector<std::string_view> toks;
    std::string_view s(l);
    std::size_t pos = 0;
    while (pos < s.size()) {
      while (pos < s.size() && s[pos] == ' ') ++pos;
      const std::size_t end = s.find(' ', pos);
      if (pos < s.size()) toks.push_back(s.substr(pos, end == std::string_view::npos ? end : end - pos));
      if (end == std::string_view::npos) break;
      pos = end;
    }
    return toks;
  };
  auto read_vector = [&](const std::vector<std::string_view>& toks, Eigen::VectorXd& v) {
    if (static_cast<Eigen::Index>(toks.size()) != cols + 1) throw ParseError("LP dump: wrong vector length");
    v.resize(cols);
    for (Eigen::Index j = 0; j < cols; ++j) v(j) = detail::parse_double(toks[j + 1], "LP dump");
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto toks = tokens_of(line);
    if (toks.empty()) continue;
    if (toks[0] == "dims") {
      if (toks.size() != 3) throw ParseError("LP dump: bad dims line");
      rows = static_cast<Eigen::Index>(detail::parse_double(toks[1], "LP dump"));
      cols = static_cast<Eigen::Index>(detail::parse_double(toks[2], "LP dump"));
      lp.a_matrix = Eigen::MatrixXd::Zero(rows, cols);
      lp.b = Eigen::VectorXd::Zero(rows);
      lp.row_scale = Eigen::VectorXd::Ones(rows);
    } else if (cols < 0) {
      throw ParseError("LP dump: missing dims line");
    } else if (toks[0] == "cost") {
      read_vector(toks, lp.cost);
    } else if (toks[0] == "lower") {
      read_vector(toks, lp.lower);
    } else if (toks[0] == "upper") {
      read_vector(toks, lp.upper);
    } else if (toks[0] == "row") {
      if (row >= rows) throw ParseError("LP dump: too many rows");
      if (static_cast<Eigen::Index>(toks.size()) != cols + 3 || toks[cols + 1] != "<=")
        throw ParseError("LP dump: malformed row " + std::to_string(row));
      for (Eigen::Index j = 0; j < cols; ++j)
        lp.a_matrix(row, j) = detail::parse_double(toks[j + 1], "LP dump");
      lp.b(row) = detail::parse_double(toks[cols + 2], "LP dump");
      ++row;
    } else {
      throw ParseError("LP dump: unknown line '" + std::string(toks[0]) + "'");
    }
  }
  if (row != rows || lp.cost.size() != cols || lp.lower.size() != cols || lp.upper.size() != cols)
    throw ParseError("LP dump: incomplete");
  return lp;
}

}  // namespace ddphase
