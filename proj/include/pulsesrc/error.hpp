#pragma once

#include <stdexcept>
#include <string>

namespace pulsesrc {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file or text; the message names the row/column when known.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A documented precondition was violated by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Window energy at or below the dead-window floor.
class ZeroEnergyWindow : public Error {
 public:
  using Error::Error;
};

class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

// Stored artifact failed its integrity check (bad digest, truncation).
class ChecksumError : public Error {
 public:
  using Error::Error;
};

class VersionMismatch : public Error {
 public:
  using Error::Error;
};

class FamilyMismatch : public Error {
 public:
  using Error::Error;
};

// A required file (dictionary, corpus manifest) does not exist.
class MissingArtifact : public Error {
 public:
  using Error::Error;
};

}  // namespace pulsesrc
