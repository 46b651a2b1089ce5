// Copyright 2026 The slowvae Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace svae {

/// Input that violates an operation's precondition (shape, range, count).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Configuration that cannot produce a valid run.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// API used out of order, e.g. backward without a matching forward.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A non-finite loss or gradient showed up during optimization.
class TrainingDivergence : public std::runtime_error {
 public:
  static constexpr std::size_t kUnknown = static_cast<std::size_t>(-1);

  explicit TrainingDivergence(const std::string& what, std::size_t layer = kUnknown,
                              std::size_t epoch = kUnknown, std::size_t batch = kUnknown)
      : std::runtime_error(what), layer_(layer), epoch_(epoch), batch_(batch) {}

  std::size_t layer() const { return layer_; }
  std::size_t epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

 private:
  std::size_t layer_;
  std::size_t epoch_;
  std::size_t batch_;
};

/// Malformed or truncated file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File written by a format version this build does not understand.
class UnsupportedVersion : public FormatError {
 public:
  UnsupportedVersion(const std::string& what, unsigned found)
      : FormatError(what), found_(found) {}
  unsigned found() const { return found_; }

 private:
  unsigned found_;
};

}  // namespace svae
