#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pwdpd {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using CRowVec = Eigen::RowVectorXcd;

/// Value returned by every dB quantity whose linear power is zero or underflows.
inline constexpr double kFloorDb = -300.0;

/// A finite block of complex baseband samples.
struct ComplexBlock {
  CVec samples;
  /// Samples per symbol period (normalized, dimensionless).
  double rate = 1.0;

  ComplexBlock() = default;
  explicit ComplexBlock(CVec s, double r = 1.0) : samples(std::move(s)), rate(r) {}

  [[nodiscard]] Eigen::Index size() const { return samples.size(); }
  [[nodiscard]] double mean_power() const;
};

// Error hierarchy. Every failure raised by the library derives from Error so
// callers that only care about "did it work" can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class IdentificationError : public Error {
 public:
  IdentificationError(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  [[nodiscard]] double condition() const { return condition_; }

 private:
  double condition_;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class SimulationError : public Error {
 public:
  SimulationError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  [[nodiscard]] double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, std::vector<double> trace)
      : Error(what), trace_(std::move(trace)) {}
  [[nodiscard]] const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace pwdpd
