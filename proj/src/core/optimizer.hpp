#pragma once

#include "core/common.hpp"

#include <functional>

namespace sgarch {

/// Returns f(x) and, when `gradient` is non-null, writes the gradient.
/// Infeasible points are signalled by returning +inf.
using Objective = std::function<double(const Vector& x, Vector* gradient)>;

struct BfgsOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-7;  // on the max-norm of the gradient
  double step_tolerance = 1e-12;
  double max_step = 2.0;
};

struct BfgsResult {
  Vector x;
  double value = 0.0;
  Vector gradient;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;  // accepted objective values, one per iterate
};

/// Quasi-Newton minimization with an inverse-Hessian BFGS update and
/// Armijo backtracking. Accepted iterates never increase the objective.
BfgsResult minimize_bfgs(const Objective& f, Vector x0, const BfgsOptions& options = {});

}  // namespace sgarch
