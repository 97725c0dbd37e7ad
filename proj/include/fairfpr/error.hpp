#pragma once

#include <stdexcept>
#include <string>

namespace fairfpr {

// Bad config file, bad CLI input, malformed dataset/checkpoint text.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// File-format violation; message names the offending line/field.
class ParseError : public ConfigError {
public:
  explicit ParseError(const std::string& msg) : ConfigError(msg) {}
};

// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
public:
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Inputs that do not fit together (checkpoint vs dataset dims, single-group
// dataset where a bias degree is requested, ...).
class IncompatibleError : public std::runtime_error {
public:
  explicit IncompatibleError(const std::string& msg) : std::runtime_error(msg) {}
};

// Sweep finished but one or more child runs failed.
class SweepPartialError : public std::runtime_error {
public:
  explicit SweepPartialError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fairfpr
