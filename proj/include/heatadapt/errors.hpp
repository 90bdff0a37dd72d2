#pragma once

#include <stdexcept>
#include <string>

namespace heatadapt {

/// Bad input to a library call: a non-positive step, an out-of-range probe, a malformed file.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A configuration that cannot be run (empty split, unknown key, ...).
class InvalidConfig : public InvalidArgument {
 public:
  InvalidConfig(std::string key, const std::string& what)
      : InvalidArgument(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Any failure of the numerics themselves. The CLI maps these to exit status 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularSweep : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class UnstableClosure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateFit : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InvalidTape : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateRecord : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

}  // namespace heatadapt
