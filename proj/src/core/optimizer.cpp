#include "core/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sgarch {

BfgsResult minimize_bfgs(const Objective& f, Vector x0, const BfgsOptions& options) {
  const Eigen::Index n = x0.size();
  BfgsResult res;
  res.x = std::move(x0);
  res.gradient = Vector::Zero(n);
  res.value = f(res.x, &res.gradient);
  if (!std::isfinite(res.value) || !res.gradient.allFinite())
    fail(ErrorKind::numerical, "objective is not finite at the starting point");
  res.history.push_back(res.value);

  Matrix h_inv = Matrix::Identity(n, n);
  bool fresh = true;  // h_inv has not been updated since the last reset
  Vector trial_grad(n);

  for (int it = 0; it < options.max_iterations; ++it) {
    if (res.gradient.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
      res.converged = true;
      return res;
    }
    Vector dir = -h_inv * res.gradient;
    double slope = res.gradient.dot(dir);
    if (!(slope < 0.0)) {
      h_inv.setIdentity();
      fresh = true;
      dir = -res.gradient;
      slope = res.gradient.dot(dir);
    }
    const double dir_norm = dir.norm();
    if (dir_norm > options.max_step) {
      dir *= options.max_step / dir_norm;
      slope *= options.max_step / dir_norm;
    }

    double step = 1.0;
    double trial_value = std::numeric_limits<double>::infinity();
    Vector trial;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      trial = res.x + step * dir;
      trial_value = f(trial, &trial_grad);
      if (std::isfinite(trial_value) && trial_grad.allFinite() &&
          trial_value <= res.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      if (std::isfinite(trial_value) && trial_value > res.value) {
        // Safeguarded quadratic interpolation of the step.
        const double denom = 2.0 * (trial_value - res.value - step * slope);
        const double interp = denom > 0.0 ? -slope * step * step / denom : 0.5 * step;
        step = std::clamp(interp, 0.1 * step, 0.5 * step);
      } else {
        step *= 0.5;
      }
    }
    if (!accepted) {
      if (!fresh) {
        h_inv.setIdentity();
        fresh = true;
        continue;
      }
      res.converged = res.gradient.lpNorm<Eigen::Infinity>() <= 100.0 * options.gradient_tolerance;
      return res;
    }

    const Vector s = trial - res.x;
    const Vector y = trial_grad - res.gradient;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) h_inv *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Vector hy = h_inv * y;
      h_inv += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) -
               rho * (hy * s.transpose() + s * hy.transpose());
      fresh = false;
    }

    const double previous = res.value;
    res.x = trial;
    res.value = trial_value;
    res.gradient = trial_grad;
    res.history.push_back(res.value);
    res.iterations = it + 1;

    const bool tiny_step = s.norm() <= options.step_tolerance * (1.0 + res.x.norm());
    const bool flat = std::abs(previous - res.value) <= 1e-15 * (1.0 + std::abs(res.value));
    if (tiny_step && flat) {
      res.converged = res.gradient.lpNorm<Eigen::Infinity>() <= 100.0 * options.gradient_tolerance;
      return res;
    }
  }
  res.converged = res.gradient.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance;
  return res;
}

}  // namespace sgarch
