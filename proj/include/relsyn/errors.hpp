#pragma once

#include <stdexcept>
#include <string>

namespace relsyn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension mismatch or malformed input data.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Singular feedthrough loop in an interconnection.
class WellPosednessError : public Error {
 public:
  using Error::Error;
};

/// Input outside the domain of an operation (unstable system, non-relative map, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace relsyn
