#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gibbskit {

/// Base class for every error raised by the library. The C API maps the
/// concrete subclasses onto gk_status codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: unknown model names, bad indices, non-Hermitian terms.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A dense object would exceed the configured dimension cap.
class OverCap : public Error {
 public:
  using Error::Error;
};

/// Parameters outside the validity domain of an algorithm (e.g. beta past
/// the cluster-expansion radius).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed to reach its tolerance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Largest Hilbert-space dimension handled by dense routines. Defaults to
/// 2^14 and can be overridden through GIBBSKIT_DENSE_CAP.
std::uint64_t dense_cap();
void set_dense_cap(std::uint64_t cap);

/// Throws OverCap when `dim` exceeds the cap; `what` names the object.
void require_dense(std::uint64_t dim, const std::string& what);

const char* version_string();

}  // namespace gibbskit
