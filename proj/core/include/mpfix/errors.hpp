#pragma once

#include <stdexcept>
#include <string>

namespace mpfix {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A real value does not fit the signed fixed-point range of the ring.
class EncodingOverflow : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

// Parties disagree on the protocol step (step id, payload size or shape).
class ProtocolDesync : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class PrecompExhausted : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace mpfix
