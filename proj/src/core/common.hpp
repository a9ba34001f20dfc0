#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgarch {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class ErrorKind {
  invalid_argument,  // caller supplied something outside the contract
  io,                // file missing or unreadable
  data,              // input data violates a domain invariant
  numerical,         // singular matrix, non-finite value, empty window
  not_converged,     // optimizer gave up
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

/// Shortest series the estimators accept.
inline constexpr std::size_t kMinEstimationLength = 50;

struct ReturnSeries {
  std::vector<double> values;
  std::string label;

  std::size_t size() const noexcept { return values.size(); }
};

}  // namespace sgarch
