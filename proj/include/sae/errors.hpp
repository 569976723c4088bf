#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sae {

// Bad argument values or shapes.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Operation called on an object in the wrong state (stale cache, missing rounds, ...).
class InvalidState : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

class InsufficientData : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Train-mode batch normalization needs at least two rows.
class BatchTooSmall : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DegenerateLabels : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

// Pool / checkpoint validation failure. Carries the file name and the byte
// offset of the offending value (0 when the problem is not positional).
class LoadError : public std::runtime_error {
public:
  LoadError(std::string file, std::uint64_t offset, const std::string& what)
      : std::runtime_error(file + " @" + std::to_string(offset) + ": " + what),
        file_(std::move(file)), offset_(offset) {}
  const std::string& file() const noexcept { return file_; }
  std::uint64_t offset() const noexcept { return offset_; }

private:
  std::string file_;
  std::uint64_t offset_;
};

// Configuration problems detected before any work is started.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace sae
