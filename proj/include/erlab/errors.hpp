#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace erlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `offset` is the byte offset of the offending token.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset), message_(what) {}
  std::size_t offset() const { return offset_; }
  const std::string& message() const { return message_; }

 private:
  std::size_t offset_;
  std::string message_;
};

/// Evaluation left the domain of definition (log of non-positive, division by zero, ...).
class DomainError : public Error {
 public:
  DomainError(std::string op, std::string subexpr, std::string point)
      : Error(op + " domain violation in " + subexpr + (point.empty() ? "" : " at " + point)),
        op_(std::move(op)),
        subexpr_(std::move(subexpr)) {}
  const std::string& op() const { return op_; }
  const std::string& subexpression() const { return subexpr_; }

 private:
  std::string op_;
  std::string subexpr_;
};

/// An operation was called on an input that violates its precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure (Newton, quadrature, sampling) did not reach its target.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace erlab
