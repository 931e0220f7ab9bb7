#pragma once

#include <stdexcept>
#include <string>

namespace sptrim {

// Shape or index inconsistency between tensors / partitions / layers.
struct DimError : std::invalid_argument {
  explicit DimError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Invalid configuration value (hyperparameter, method choice, dataset spec).
struct ConfigError : std::invalid_argument {
  explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Base for file-format failures.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct BadMagicError : IoError {
  explicit BadMagicError(const std::string& msg) : IoError(msg) {}
};

struct VersionError : IoError {
  explicit VersionError(const std::string& msg) : IoError(msg) {}
};

struct TruncatedError : IoError {
  explicit TruncatedError(const std::string& msg) : IoError(msg) {}
};

struct TensorCountError : IoError {
  explicit TensorCountError(const std::string& msg) : IoError(msg) {}
};

struct LabelRangeError : IoError {
  explicit LabelRangeError(const std::string& msg) : IoError(msg) {}
};

}  // namespace sptrim
