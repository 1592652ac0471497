#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace srl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad parameters or invalid option combinations. The CLI maps these to exit
// code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Anything wrong with input data. The CLI maps these to exit code 3.
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public ParseError {
 public:
  using ParseError::ParseError;
};

class DuplicateKeyError : public DataError {
 public:
  using DataError::DataError;
};

class EmptyContentError : public ParseError {
 public:
  using ParseError::ParseError;
};

class EmptyDocumentError : public DataError {
 public:
  explicit EmptyDocumentError(std::string user_id)
      : DataError("document '" + user_id + "' is empty after cleaning"),
        user_id_(std::move(user_id)) {}
  const std::string& user_id() const { return user_id_; }

 private:
  std::string user_id_;
};

class OutOfVocabularyError : public DataError {
 public:
  using DataError::DataError;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class UnsupportedVersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class EmptySelectionError : public DataError {
 public:
  using DataError::DataError;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace srl
