#pragma once

#include "core/common.hpp"
#include "core/kernel.hpp"

#include <optional>
#include <span>

namespace sgarch {

/// GARCH(p, q): q ARCH lags (alpha), p GARCH lags (beta).
struct GarchOrder {
  int p = 1;
  int q = 1;

  int num_params() const noexcept { return p + q; }
  void validate() const;
  friend bool operator==(const GarchOrder&, const GarchOrder&) = default;
};

/// Smallest coefficient the interior parameter map produces.
inline constexpr double kThetaLowerBound = 1e-6;
/// Smallest admissible intercept 1 - sum(alpha) - sum(beta).
inline constexpr double kOmegaLowerBound = 1e-6;

/// theta = (alpha_1..alpha_q, beta_1..beta_p) with the intercept fixed at
/// omega = 1 - sum(theta) so that E u_t^2 = 1.
class GarchParams {
 public:
  GarchParams() = default;
  /// Throws unless every coefficient is finite and non-negative and
  /// omega >= kOmegaLowerBound.
  GarchParams(GarchOrder order, Vector theta);

  const GarchOrder& order() const noexcept { return order_; }
  const Vector& theta() const noexcept { return theta_; }
  double omega() const noexcept { return 1.0 - theta_.sum(); }
  double alpha(int i) const { return theta_(i); }
  double beta(int j) const { return theta_(order_.q + j); }
  double persistence() const noexcept { return theta_.sum(); }

 private:
  GarchOrder order_;
  Vector theta_;
};

/// Conditional variance path and its exact derivative (row t holds
/// d g_t / d theta).
struct GarchPath {
  std::vector<double> g;
  Matrix dg;
};

/// Runs the unit-variance GARCH recursion over u_sq with pre-sample u^2 and g
/// set to 1 and pre-sample derivatives set to 0.
GarchPath garch_filter(std::span<const double> u_sq, const GarchParams& params,
                       bool with_derivatives = true);

/// Sum over t of u_t^2 / g_t + log g_t.
double neg_loglik(std::span<const double> u_sq, const GarchParams& params);

/// Objective value together with its analytic gradient in theta.
double neg_loglik(std::span<const double> u_sq, const GarchParams& params, Vector& gradient);

/// Same objective on data devolatilized by the long-run fit.
double neg_loglik(const ReturnSeries& series, const LongRunFit& longrun, const GarchParams& params);

/// u_t^2 = y_t^2 / tau_t; throws on non-positive tau.
std::vector<double> devolatilized_squares(std::span<const double> y, std::span<const double> tau);

struct FilteredSeries {
  std::vector<double> u_hat;
  std::vector<double> g_hat;
  std::vector<double> eta_hat;
  Matrix psi_hat;  // T x (p+q), row t = (d g_t / d theta) / g_t

  std::size_t size() const noexcept { return g_hat.size(); }
};

FilteredSeries filter_series(std::span<const double> y, std::span<const double> tau,
                             const GarchParams& params);

struct FitOptions {
  std::optional<Vector> init;
  bool multi_start = true;
  int max_iterations = 500;
  double gradient_tolerance = 1e-7;  // multiplied by T
};

struct FitResult {
  GarchParams params;
  FilteredSeries filtered;
  double loglik = 0.0;  // value of the minimized objective sum(u^2/g + log g)
  LongRunFit longrun;
  bool converged = false;
  int iterations = 0;
  std::vector<double> history;  // objective per accepted iterate of the winning start
};

/// Default interior starting point for a given order.
Vector default_start(GarchOrder order);

FitResult fit_qmle(const ReturnSeries& series, const LongRunFit& longrun, GarchOrder order,
                   const FitOptions& options = {});

/// H0: R theta = r with R of full row rank d.
class LinearConstraint {
 public:
  LinearConstraint() = default;
  /// Throws when R is rank deficient (singular values below 1e-10 of the
  /// largest) or the shapes disagree.
  LinearConstraint(Matrix R, Vector r);

  const Matrix& R() const noexcept { return R_; }
  const Vector& r() const noexcept { return r_; }
  int rank() const noexcept { return static_cast<int>(R_.rows()); }

  /// Selects coefficient `index` of a `num_params` vector and pins it to `value`.
  static LinearConstraint pin(int num_params, int index, double value = 0.0);

 private:
  Matrix R_;
  Vector r_;
};

/// Minimizes the objective over { theta : R theta = r } intersected with the
/// closed parameter region. Coefficients fixed by the constraint may sit on
/// the boundary (e.g. pinned to zero).
FitResult fit_qmle_constrained(const ReturnSeries& series, const LongRunFit& longrun,
                               GarchOrder order, const LinearConstraint& constraint,
                               const FitOptions& options = {});

/// Free-intercept ARCH(q): h_t = c + sum a_i y_{t-i}^2. Used for trailing
/// window forecasts, where the unit-variance identification does not apply.
struct ArchFit {
  double intercept = 0.0;
  Vector alpha;
  double objective = 0.0;
  bool converged = false;
};

ArchFit fit_free_arch(std::span<const double> y, int q, const ArchFit* warm_start = nullptr);

}  // namespace sgarch
