#pragma once

#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace sase {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Error hierarchy. Configuration problems derive from ConfigError, anything
// that goes wrong inside the numerics derives from NumericalError; the CLI
// maps the two families onto distinct exit codes.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InvalidDimension : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class InvalidParameter : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class ShapeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class ContractViolation : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class EstimationFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IllConditioned : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularMatrix : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class UndefinedMetric : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

namespace detail {

inline std::string dims(Index rows, Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

template <typename E = ShapeError>
inline void require(bool ok, const std::string& what) {
  if (!ok) throw E(what);
}

}  // namespace detail

/// Linear SNR 1/sigma^2 from a dB figure.
inline double noise_variance_from_snr_db(double snr_db) {
  return std::pow(10.0, -snr_db / 10.0);
}

}  // namespace sase
