#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace latentmath {

// Error categories shared across the library; the C API maps these onto
// stable status codes, the CLI onto exit codes.
enum class ErrorCode {
  config = 2,
  io = 3,
  collapse = 4,
  shape = 5,
  parse = 6,
  domain = 7,
  not_integrable = 8,
  invalid_argument = 9,
  internal = 10,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t offset)
      : Error(ErrorCode::parse, msg + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& msg) : Error(ErrorCode::domain, msg) {}
};

class MissingSymbol : public Error {
 public:
  explicit MissingSymbol(const std::string& name)
      : Error(ErrorCode::domain, "no value bound for symbol '" + name + "'") {}
};

class NotIntegrable : public Error {
 public:
  explicit NotIntegrable(const std::string& msg) : Error(ErrorCode::not_integrable, msg) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(ErrorCode::shape, msg) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(ErrorCode::config, msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(ErrorCode::io, msg) {}
};

class CollapseDetected : public Error {
 public:
  explicit CollapseDetected(const std::string& msg) : Error(ErrorCode::collapse, msg) {}
};

}  // namespace latentmath
