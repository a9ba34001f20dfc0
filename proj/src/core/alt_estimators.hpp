#pragma once

#include "core/asymptotics.hpp"
#include "core/qmle.hpp"

namespace sgarch {

struct VTResult {
  double tau_bar = 0.0;
  FitResult fit;  // QMLE on y / sqrt(tau_bar); fit.params is theta_bar
  AsymptoticCov cov;
};

/// Variance targeting: tau is replaced by the sample mean of y^2. Only
/// meaningful when the long-run variance is constant.
VTResult fit_vt(const ReturnSeries& series, GarchOrder order, const FitOptions& options = {});

/// d l_t / d tau and d^2 l_t / d tau^2 of l_t(tau) = log g + log tau + y^2 / (tau g).
double dl_dtau(double tau, double y_sq, double g);
double d2l_dtau2(double tau, double y_sq, double g);

struct ThreeStepResult {
  std::vector<double> tau_check;
  std::size_t tau_fallbacks = 0;  // points where the Newton step was rejected
  GarchOrder order;
  Vector theta_check;  // one Newton step from theta_hat; not projected onto the parameter region
  Vector score;        // centered score at theta_hat on the updated data
  Matrix hessian;
  FilteredSeries filtered;  // recursion on y^2 / tau_check evaluated at theta_hat
};

/// One Newton update of tau at every t followed by one Newton step on theta.
ThreeStepResult three_step_update(const FitResult& fit, const ReturnSeries& series,
                                  const KernelSpec& spec);

/// (kappa - 1) J1*^-1 (J1* + J2*) J1*^-1 with J1* the centered second moment of
/// psi and J2* = (omega^2 / gamma^2) v v', v = mean(1/g) mean(psi) - mean(psi / g).
/// omega and gamma are taken from theta_check.
struct SigmaStar {
  Matrix J1_star;
  Matrix J2_star;
  Matrix sigma;
  double kappa_hat = 0.0;
};

SigmaStar sigma_star_plugin(const ThreeStepResult& three, const FilteredSeries& filtered);

}  // namespace sgarch
