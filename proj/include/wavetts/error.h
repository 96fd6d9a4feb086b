#pragma once

#include <stdexcept>
#include <string>

namespace wavetts {

// Error taxonomy shared by the library and the CLI exit-code mapping.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad shapes, rank mismatches, incompatible broadcasts.
class DimensionError : public Error {
  public:
    explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Invalid argument values (log of nonpositive input, class out of range, ...).
class DomainError : public Error {
  public:
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

// NaN/Inf produced by a forward op, or a NaN loss during training.
class NumericError : public Error {
  public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

// Bad run configuration (missing stats, missing checkpoint, invalid strides).
class ConfigError : public Error {
  public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// File format / filesystem problems.
class IoError : public Error {
  public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Double-backward requested through an op without a second-order rule.
class UnsupportedOpError : public Error {
  public:
    explicit UnsupportedOpError(const std::string& msg) : Error(msg) {}
};

}  // namespace wavetts
