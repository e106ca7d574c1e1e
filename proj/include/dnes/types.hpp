#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace dnes {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vectord = Vector<double>;
using Matrixd = Matrix<double>;

// Exit status of the CLI follows the error kind.
enum class ErrorKind { parse = 2, precondition = 3, instability = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ErrorKind::parse, what) {}
};

class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what) : Error(ErrorKind::precondition, what) {}
};

class InstabilityError : public Error {
 public:
  explicit InstabilityError(const std::string& what) : Error(ErrorKind::instability, what) {}
};

}  // namespace dnes
