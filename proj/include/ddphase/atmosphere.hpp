#pragma once

// Diurnal-free Harris-Priester atmosphere.
//
// The table carries the minimum and maximum density columns at each altitude
// node. A single column is selected (min, max or their geometric mean) and the
// density between nodes follows an exponential profile whose scale height is
// fitted to the two bracketing nodes. Densities are in kg/km^3.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "ddphase/errors.hpp"

namespace ddphase {

enum class DensityColumn { kMin, kMax, kGeometricMean };

inline std::string to_string(DensityColumn c) {
  switch (c) {
    case DensityColumn::kMin: return "min";
    case DensityColumn::kMax: return "max";
    case DensityColumn::kGeometricMean: return "geometric-mean";
  }
  return "geometric-mean";
}

inline DensityColumn parse_density_column(std::string_view s) {
  if (s == "min") return DensityColumn::kMin;
  if (s == "max") return DensityColumn::kMax;
  if (s == "geometric-mean") return DensityColumn::kGeometricMean;
  throw ValidationError("atmosphere.column", "expected min | max | geometric-mean, got '" +
                                                  std::string(s) + "'");
}

struct AtmosphereNode {
  double altitude_km;
  double rho_min;  // kg/km^3
  double rho_max;  // kg/km^3
};

class HarrisPriesterTable {
 public:
  HarrisPriesterTable() = default;

  HarrisPriesterTable(std::vector<AtmosphereNode> nodes, DensityColumn column)
      : nodes_(std::move(nodes)), column_(column) {
    validate();
    log_rho_.reserve(nodes_.size());
    for (const auto& n : nodes_) log_rho_.push_back(std::log(node_density(n)));
    inv_scale_height_.reserve(nodes_.size() - 1);
    for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
      inv_scale_height_.push_back((log_rho_[i] - log_rho_[i + 1]) /
                                  (nodes_[i + 1].altitude_km - nodes_[i].altitude_km));
    }
  }

  const std::vector<AtmosphereNode>& nodes() const noexcept { return nodes_; }
  DensityColumn column() const noexcept { return column_; }
  bool empty() const noexcept { return nodes_.empty(); }
  double floor_km() const { return nodes_.front().altitude_km; }
  double ceiling_km() const { return nodes_.back().altitude_km; }

  bool in_range(double h_km) const noexcept {
    return !nodes_.empty() && h_km >= nodes_.front().altitude_km &&
           h_km <= nodes_.back().altitude_km;
  }

  // Combined (column-selected) density at a node.
  double node_density(const AtmosphereNode& n) const noexcept {
    switch (column_) {
      case DensityColumn::kMin: return n.rho_min;
      case DensityColumn::kMax: return n.rho_max;
      case DensityColumn::kGeometricMean: return std::sqrt(n.rho_min * n.rho_max);
    }
    return std::sqrt(n.rho_min * n.rho_max);
  }

  double density(double h_km) const {
    if (!in_range(h_km)) {
      throw DomainError("altitude " + std::to_string(h_km) + " km outside atmosphere table [" +
                        (nodes_.empty() ? std::string("empty")
                                        : std::to_string(floor_km()) + ", " +
                                              std::to_string(ceiling_km())) +
                        "] km");
    }
    // Last node with altitude <= h, clamped so the top node uses the final bracket.
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), h_km,
                               [](double h, const AtmosphereNode& n) { return h < n.altitude_km; });
    std::size_t i = static_cast<std::size_t>(it - nodes_.begin()) - 1;
    if (i + 1 >= nodes_.size()) i = nodes_.size() - 2;
    const double dh = h_km - nodes_[i].altitude_km;
    if (dh == 0.0) return node_density(nodes_[i]);
    return std::exp(log_rho_[i] - dh * inv_scale_height_[i]);
  }

 private:
  void validate() const {
    if (nodes_.size() < 2) throw ValidationError("atmosphere", "table needs at least two nodes");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& n = nodes_[i];
      const std::string where = "node " + std::to_string(i) + " (h=" +
                                std::to_string(n.altitude_km) + " km)";
      if (!(n.rho_min > 0.0) || !(n.rho_max > 0.0))
        throw ValidationError("atmosphere", where + ": densities must be positive");
      if (n.rho_min > n.rho_max)
        throw ValidationError("atmosphere", where + ": rho_min exceeds rho_max");
      if (i == 0) continue;
      const auto& p = nodes_[i - 1];
      if (!(n.altitude_km > p.altitude_km))
        throw ValidationError("atmosphere", where + ": altitudes must be strictly increasing");
      if (!(n.rho_min < p.rho_min) || !(n.rho_max < p.rho_max))
        throw ValidationError("atmosphere", where + ": densities must decrease with altitude");
    }
  }

  std::vector<AtmosphereNode> nodes_;
  DensityColumn column_ = DensityColumn::kGeometricMean;
  std::vector<double> log_rho_;
  std::vector<double> inv_scale_height_;  // 1/H per bracket, 1/km
};

inline double density(double h_km, const HarrisPriesterTable& table) {
  return table.density(h_km);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline double parse_double(std::string_view text, const std::string& context) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(context + ": cannot parse number '" + std::string(text) + "'");
  }
  return value;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

// CSV with header `h_km,rho_min_kg_per_km3,rho_max_kg_per_km3`.
inline HarrisPriesterTable load_harris_priester_csv(const std::string& path, DensityColumn column) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open atmosphere table '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": missing header row");
  const auto header = detail::split(detail::trim(line), ',');
  if (header.size() != 3 || detail::trim(header[0]) != "h_km" ||
      detail::trim(header[1]) != "rho_min_kg_per_km3" ||
      detail::trim(header[2]) != "rho_max_kg_per_km3") {
    throw ParseError(path + ": expected header h_km,rho_min_kg_per_km3,rho_max_kg_per_km3");
  }
  std::vector<AtmosphereNode> nodes;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, ',');
    const std::string ctx = path + ":" + std::to_string(line_no);
    if (cells.size() != 3) throw ParseError(ctx + ": expected 3 columns");
    nodes.push_back({detail::parse_double(cells[0], ctx), detail::parse_double(cells[1], ctx),
                     detail::parse_double(cells[2], ctx)});
  }
  return HarrisPriesterTable(std::move(nodes), column);
}

}  // namespace ddphase
