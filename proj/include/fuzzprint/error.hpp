#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace fuzzprint {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A field or option value lies outside its bit-width domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Text input (APD line, corpus, fingerprint, personality) is malformed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Cartesian product would exceed the configured line cap.
class CardinalityError : public Error {
 public:
  CardinalityError(std::uint64_t cardinality, std::uint64_t cap)
      : Error("cartesian product has " + std::to_string(cardinality) +
              " entries, cap is " + std::to_string(cap)),
        cardinality_(cardinality),
        cap_(cap) {}

  std::uint64_t cardinality() const noexcept { return cardinality_; }
  std::uint64_t cap() const noexcept { return cap_; }

 private:
  std::uint64_t cardinality_;
  std::uint64_t cap_;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

/// No open port was available, or the target could not be reached before
/// the first probe.
class ScanPrerequisiteError : public TransportError {
 public:
  using TransportError::TransportError;
};

/// The FTP server refused the anonymous login; fingerprinting must stop.
class LoginRefusedError : public TransportError {
 public:
  using TransportError::TransportError;
};

/// The peer closed the control connection.
class ConnectionClosedError : public TransportError {
 public:
  using TransportError::TransportError;
};

class ConflictError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// Two artifacts were produced from different corpora (or kinds).
class IncompatibleCorpusError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fuzzprint
