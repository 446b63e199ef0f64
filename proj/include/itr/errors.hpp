#pragma once

#include <stdexcept>
#include <string>

namespace itr {

// Shape mismatch between operands.
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Index outside of a table or sequence.
class LookupError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration values or combinations.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Answer text could not be placed inside its passage.
class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss or parameters during training.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API used outside its contract (non-scalar backward root, second backward, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace itr
