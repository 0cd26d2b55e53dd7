#pragma once

#include <stdexcept>
#include <string>

namespace spect {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched extents between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unreadable SPCT/SPCK content.
class FormatError : public Error {
 public:
  enum class Kind { kBadMagic, kTruncated, kVersion, kIo, kOverflow };

  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Data inconsistent with the imaging model (e.g. counts on an unreachable bin).
class ModelMismatchError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value detected during optimisation.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace spect
