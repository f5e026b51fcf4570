#pragma once

#include <stdexcept>
#include <string>

namespace licvar {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A term value outside the domain allowed for its kind.
class ValueDomainError : public Error {
 public:
  using Error::Error;
};

// Malformed on-disk data (KB, package index, rule tables). The message names
// the file and field at fault.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class IncompatibleFingerprintError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Raised when a compatibility verdict is requested for a license that was not
// recognized. Callers record Unknown instead of guessing.
class UnknownLicenseError : public Error {
 public:
  using Error::Error;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

// The model service could not be reached or returned a transport-level
// failure. `attempts` is how many requests were made before giving up.
class TransportError : public BackendError {
 public:
  TransportError(const std::string& what, int attempts, int last_status)
      : BackendError(what), attempts_(attempts), last_status_(last_status) {}

  int attempts() const { return attempts_; }
  int last_status() const { return last_status_; }

 private:
  int attempts_;
  int last_status_;
};

// The model answered, but not in the required format or not within the
// value domain, even after re-asking.
class ProtocolError : public BackendError {
 public:
  using BackendError::BackendError;
};

}  // namespace licvar
