#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mtl {

// Base of every error raised by the library. The CLI maps subclasses onto
// exit codes: input/config problems are 2, everything else 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual bool is_input_error() const { return false; }
};

class InputError : public Error {
 public:
  using Error::Error;
  bool is_input_error() const override { return true; }
};

// numerics
class DimensionError : public Error { using Error::Error; };
class RankError : public Error { using Error::Error; };
class StateError : public Error { using Error::Error; };
class DeterminismError : public Error { using Error::Error; };

class LabelError : public InputError {
 public:
  LabelError(const std::string& what, std::size_t row) : InputError(what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

// configuration and data
class ConfigError : public InputError { using InputError::InputError; };
class DataError : public InputError { using InputError::InputError; };
class SchemaError : public InputError { using InputError::InputError; };
class SplitError : public InputError { using InputError::InputError; };
class VocabError : public InputError { using InputError::InputError; };

class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t line) : InputError(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class CheckpointError : public InputError {
 public:
  enum class Kind { NotACheckpoint, VersionMismatch, Truncated, ShapeMismatch, Corrupt };
  CheckpointError(Kind kind, const std::string& what) : InputError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// training and evaluation
class TrainingError : public Error { using Error::Error; };
class EvaluationError : public InputError { using InputError::InputError; };
class CompatibilityError : public InputError { using InputError::InputError; };
class AlignmentError : public InputError { using InputError::InputError; };
class LayoutError : public InputError { using InputError::InputError; };

}  // namespace mtl
