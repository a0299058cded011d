#pragma once

#include <stdexcept>
#include <string>

namespace qpol {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class NotHermitian : public Error {
 public:
  using Error::Error;
};

class NotPsd : public Error {
 public:
  using Error::Error;
};

class BadDim : public Error {
 public:
  using Error::Error;
};

class DimMismatch : public Error {
 public:
  using Error::Error;
};

class ZeroVector : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class BadTarget : public Error {
 public:
  using Error::Error;
};

/// Malformed input document; message carries line/field diagnostics.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A count-record label that no measurement setting resolves.
class UnknownLabel : public Error {
 public:
  using Error::Error;
};

class RankDeficient : public Error {
 public:
  using Error::Error;
};

class BudgetTooSmall : public Error {
 public:
  using Error::Error;
};

/// A state that violates the physicality invariants where a physical
/// one is required.
class NotPhysical : public Error {
 public:
  using Error::Error;
};

/// A tangle-entropy point above the frontier of physically allowed states.
class FrontierViolation : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace qpol
