#pragma once

#include <stdexcept>
#include <string>

namespace thouless {

/// Base of every error the library raises. The exit code is what the CLI
/// returns when the error reaches the top level.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message, int exit_code)
      : std::runtime_error(message), kind_(std::move(kind)), exit_code_(exit_code) {}

  const std::string& kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return exit_code_; }

 private:
  std::string kind_;
  int exit_code_;
};

/// Malformed inputs: bad distributions, out-of-range indices, unknown config keys.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message) : Error("validation", message, 2) {}
};

/// A numerical result could not be certified at the working precision.
class CertificationError : public Error {
 public:
  explicit CertificationError(const std::string& message, std::string kind = "certification")
      : Error(std::move(kind), message, 3) {}
};

/// The mantissa width cannot resolve the dynamic range of a transfer product.
class PrecisionExhausted : public CertificationError {
 public:
  PrecisionExhausted(const std::string& message, int bits, int required_bits)
      : CertificationError(message, "precision_exhausted"), bits_(bits), required_bits_(required_bits) {}

  int bits() const noexcept { return bits_; }
  int required_bits() const noexcept { return required_bits_; }

 private:
  int bits_;
  int required_bits_;
};

/// Inverse iteration stopped above the residual tolerance.
class ConvergenceError : public CertificationError {
 public:
  ConvergenceError(const std::string& message, double residual)
      : CertificationError(message, "convergence"), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Dirichlet determinant of an arc fell below the near-singular floor.
class NearSingular : public CertificationError {
 public:
  NearSingular(const std::string& message, double log2_magnitude)
      : CertificationError(message, "near_singular"), log2_magnitude_(log2_magnitude) {}

  double log2_magnitude() const noexcept { return log2_magnitude_; }

 private:
  double log2_magnitude_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io", message, 4) {}
};

}  // namespace thouless
