#pragma once

#include <stdexcept>
#include <string>

namespace cubegraph {

// Base class for every error raised by the library. Messages carry enough
// context (path, operation, epoch) to be printed as a one-line diagnostic.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace cubegraph
