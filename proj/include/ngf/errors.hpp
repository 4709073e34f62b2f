#pragma once

#include <stdexcept>
#include <string>

namespace ngf {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class UnsupportedActivation : public Error {
 public:
  using Error::Error;
};

/// Loss evaluation produced NaN/Inf. `term()` names the offending loss term.
class NonFiniteLoss : public Error {
 public:
  NonFiniteLoss(std::string term, const std::string& what)
      : Error(what), term_(std::move(term)) {}
  const std::string& term() const noexcept { return term_; }

 private:
  std::string term_;
};

/// Wavenumber hits a Dirichlet eigenvalue; kernel or eigenvalue undefined.
class ResonanceError : public Error {
 public:
  using Error::Error;
};

class InvalidCoefficient : public Error {
 public:
  using Error::Error;
};

/// Lifted residual requested on a surface where it is undefined (r = 0 or s2 = 0).
class InterfacePointError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SingularSmoother : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ngf
