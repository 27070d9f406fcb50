#pragma once

#include <stdexcept>
#include <string>

namespace sma {

/// Base of every error thrown by the library. `kind()` is a stable
/// machine-readable tag used by the CLI when reporting failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept = 0;
};

#define SMA_DEFINE_ERROR(Name, tag)                             \
  class Name : public Error {                                   \
   public:                                                      \
    using Error::Error;                                         \
    const char* kind() const noexcept override { return tag; }  \
  };

SMA_DEFINE_ERROR(FormatError, "format")
SMA_DEFINE_ERROR(CorruptionError, "corruption")
SMA_DEFINE_ERROR(ValidationError, "validation")
SMA_DEFINE_ERROR(LookupError, "lookup")
SMA_DEFINE_ERROR(ArgumentError, "argument")
SMA_DEFINE_ERROR(ShapeError, "shape")
SMA_DEFINE_ERROR(IoError, "io")
SMA_DEFINE_ERROR(InvariantError, "invariant")

#undef SMA_DEFINE_ERROR

}  // namespace sma
