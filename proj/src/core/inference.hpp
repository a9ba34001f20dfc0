#pragma once

#include "core/asymptotics.hpp"
#include "core/qmle.hpp"

#include <map>
#include <span>

namespace sgarch {

struct TestReport {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  std::map<double, bool> reject_at;  // nominal level -> rejected
};

/// Chi-square report with decisions at the 1%, 5% and 10% levels.
TestReport make_chi2_report(double statistic, int df);

/// (1/T) s' J1^-1 R' (R Sigma R')^-1 R J1^-1 s.
double lm_statistic(const Vector& score, const Matrix& J1, const Matrix& sigma, const Matrix& R,
                    double n_obs);

struct LmResult {
  TestReport report;
  FitResult constrained_fit;
  AsymptoticCov cov;  // evaluated at the constrained estimate
  Vector score;
};

/// LM test of R theta = r, computed entirely at the constrained QMLE.
LmResult lm_test(const ReturnSeries& series, const LongRunFit& longrun, GarchOrder order,
                 const LinearConstraint& constraint, const FitOptions& options = {});

/// Sample autocorrelations of eta^2 at lags 1..ell.
Vector squared_residual_acf(std::span<const double> eta, int ell);

struct PortmanteauInternals {
  Vector rho_hat;
  Matrix D_hat;        // ell x (p+q)
  Vector H_hat;        // ell
  Vector F_hat;        // ell
  Matrix SigmaP1_hat;  // ell x (ell + 1 + p + q)
  Matrix SigmaP2_hat;  // (ell + 1 + p + q) square, symmetric
  Matrix SigmaP_hat;   // ell x ell
};

/// Q(ell) = T rho' SigmaP^-1 rho with the sandwich covariance that accounts
/// for estimating theta.
std::pair<TestReport, PortmanteauInternals> portmanteau_test(const FitResult& fit, int ell);

/// Assembles the sandwich pieces from a filtered series; exposed so the
/// statistic can be computed for any residual set.
std::pair<TestReport, PortmanteauInternals> portmanteau_from_filtered(const FilteredSeries& filtered,
                                                                      int ell);

inline constexpr int kDefaultPortmanteauLags[] = {6, 9, 12};

}  // namespace sgarch
