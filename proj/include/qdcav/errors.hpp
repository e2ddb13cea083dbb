#pragma once

#include <stdexcept>
#include <string>

namespace qdcav {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// operator/state shape mismatches, invalid truncation sizes
struct DimensionError : Error {
  using Error::Error;
};

// argument outside its physical or documented domain
struct DomainError : Error {
  using Error::Error;
};

// malformed or contradictory configuration / input data
struct ConfigError : Error {
  int line = 0;    // 1-based, 0 = not tied to a location
  int column = 0;  // 1-based
  explicit ConfigError(const std::string& msg, int line_ = 0, int column_ = 0)
      : Error(line_ > 0 ? msg + " (line " + std::to_string(line_) +
                              (column_ > 0 ? ", column " + std::to_string(column_) : std::string()) + ")"
                        : msg),
        line(line_),
        column(column_) {}
};

// adaptive stepper could not proceed (step size collapsed, step budget exhausted)
struct IntegrationError : Error {
  double time = 0.0;
  explicit IntegrationError(const std::string& msg, double t)
      : Error(msg + " at t = " + std::to_string(t) + " ns"), time(t) {}
};

// state stopped being a physical density matrix beyond the allowed tolerances
struct HealthError : Error {
  double time = 0.0;
  explicit HealthError(const std::string& msg, double t)
      : Error(msg + " at t = " + std::to_string(t) + " ns"), time(t) {}
};

// normal-equations matrix is structurally singular (a parameter does not
// influence the residuals at all)
struct RankDeficiencyError : Error {
  using Error::Error;
};

}  // namespace qdcav
