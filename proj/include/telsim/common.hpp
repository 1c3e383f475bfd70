#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace telsim {

using Complex = std::complex<double>;
using ModeVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

// Default tolerances: operator-algebra identities are checked tighter than
// protocol-level identities, which accumulate more kernel arithmetic.
inline constexpr double kOperatorTol = 1e-12;
inline constexpr double kProtocolTol = 1e-10;

// Denominators below this are treated as exactly zero (vanishing outcome
// probability, empty reductions).
inline constexpr double kProbabilityFloor = 1e-300;

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NullVectorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SupportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ImpossibleOutcome : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckResult {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct ValidationReport {
  std::vector<CheckResult> checks;

  void add(std::string name, double residual, double tolerance) {
    checks.push_back({std::move(name), residual, tolerance, residual <= tolerance});
  }

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }

  const CheckResult* first_failure() const {
    for (const auto& c : checks)
      if (!c.pass) return &c;
    return nullptr;
  }
};

inline void require(bool cond, const char* what) {
  if (!cond) throw DimensionMismatch(what);
}

}  // namespace telsim
