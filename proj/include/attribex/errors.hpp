#pragma once

#include <stdexcept>
#include <string>

namespace attribex {

enum class ErrorKind { Validation, Numerics, Io };

// Base of every error the library raises. The kind decides the C status code
// and the CLI exit code (validation -> 1, numerics -> 2).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InputShapeError : public Error {
 public:
  explicit InputShapeError(const std::string& what) : Error(ErrorKind::Validation, "input shape: " + what) {}
};

class ModelFormatError : public Error {
 public:
  ModelFormatError(long layer, const std::string& field, const std::string& what)
      : Error(ErrorKind::Validation, format(layer, field, what)), layer_(layer), field_(field) {}
  long layer() const noexcept { return layer_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string format(long layer, const std::string& field, const std::string& what) {
    std::string s = "model format: ";
    if (layer >= 0) s += "layer " + std::to_string(layer) + ": ";
    if (!field.empty()) s += "field '" + field + "': ";
    return s + what;
  }
  long layer_;
  std::string field_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Validation, "config: " + what) {}
};

class SizeError : public Error {
 public:
  explicit SizeError(const std::string& what) : Error(ErrorKind::Validation, "size: " + what) {}
};

class NumericsError : public Error {
 public:
  explicit NumericsError(const std::string& what) : Error(ErrorKind::Numerics, "numerics: " + what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, "io: " + what) {}
};

}  // namespace attribex
