// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mgbound {

/// Argument outside the mathematical domain of an operation (negative x where
/// x >= 0 is required, non-finite input, epsilon outside (0, 1/2], ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed configuration: zero paths, zero chunk size, bad model fields.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation not available for the given martingale family.
class UnsupportedModel : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// File or stream level failure (CSV ingestion, JSON parsing).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mgbound
