#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace surromap {

/// Base class of every domain failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable input: missing files, malformed text documents.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed row in a delimited map file. Row and column are 1-based.
class ParseError : public IoError {
 public:
  ParseError(std::size_t row, std::size_t column, const std::string& what)
      : IoError("row " + std::to_string(row) + ", column " + std::to_string(column) + ": " + what),
        row_(row),
        column_(column) {}

  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

/// Training produced a non-finite loss or parameter.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(std::size_t epoch, const std::string& detail)
      : Error("training diverged at epoch " + std::to_string(epoch) + ": " + detail), epoch_(epoch) {}

  std::size_t epoch() const { return epoch_; }

 private:
  std::size_t epoch_;
};

}  // namespace surromap
