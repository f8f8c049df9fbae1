#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ddphase {

// Every error raised by the library derives from Error so callers (the CLI in
// particular) can map it to a short machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error("parse", what) {}
};

class ValidationError : public Error {
 public:
  ValidationError(std::string key, const std::string& what)
      : Error("validation", key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error("domain", what) {}
};

// A satellite fell below the atmosphere table floor during propagation.
class ReentryError : public Error {
 public:
  ReentryError(std::size_t satellite, std::size_t step, double altitude_km)
      : Error("reentry", "satellite " + std::to_string(satellite) +
                             " reentered at fine step " + std::to_string(step) +
                             " (altitude " + std::to_string(altitude_km) + " km)"),
        satellite_(satellite),
        step_(step),
        altitude_km_(altitude_km) {}

  std::size_t satellite() const noexcept { return satellite_; }
  std::size_t step() const noexcept { return step_; }
  double altitude_km() const noexcept { return altitude_km_; }

 private:
  std::size_t satellite_;
  std::size_t step_;
  double altitude_km_;
};

class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, double gap)
      : Error("infeasible", what), gap_(gap) {}

  // Smallest phase-1 infeasibility seen while searching.
  double gap() const noexcept { return gap_; }

 private:
  double gap_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io", what) {}
};

}  // namespace ddphase
