#pragma once

#include <stdexcept>
#include <string>

namespace dcqp {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
  ParseError(const std::string& what, int line, int column)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line), column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

private:
  int line_;
  int column_;
};

class DimensionError : public Error {
public:
  using Error::Error;
};

class UnboundedRegionError : public Error {
public:
  using Error::Error;
};

class InfeasibleRegionError : public Error {
public:
  using Error::Error;
};

class NumericalError : public Error {
public:
  using Error::Error;
};

}  // namespace dcqp
