#include "core/inference.hpp"

#include "core/stats.hpp"

#include <cmath>

namespace sgarch {

TestReport make_chi2_report(double statistic, int df) {
  TestReport report;
  report.statistic = statistic;
  report.df = df;
  report.p_value = chi2_sf(statistic, df);
  for (double level : {0.01, 0.05, 0.10}) report.reject_at[level] = report.p_value < level;
  return report;
}

double lm_statistic(const Vector& score, const Matrix& J1, const Matrix& sigma, const Matrix& R,
                    double n_obs) {
  const Matrix j1_inv = guarded_symmetric_inverse(J1, "J1");
  const Vector projected = R * (j1_inv * score);
  const Matrix middle = R * sigma * R.transpose();
  const Matrix middle_inv = guarded_symmetric_inverse(middle, "R Sigma R'");
  const double value = projected.dot(middle_inv * projected) / n_obs;
  return std::max(value, 0.0);
}

LmResult lm_test(const ReturnSeries& series, const LongRunFit& longrun, GarchOrder order,
                 const LinearConstraint& constraint, const FitOptions& options) {
  LmResult out;
  out.constrained_fit = fit_qmle_constrained(series, longrun, order, constraint, options);
  if (!out.constrained_fit.converged)
    fail(ErrorKind::not_converged, "constrained QMLE did not converge");
  const auto& filtered = out.constrained_fit.filtered;
  out.cov = estimate_covariance(filtered);
  out.score = score(filtered);
  const double stat = lm_statistic(out.score, out.cov.J1_hat, out.cov.sigma_hat, constraint.R(),
                                   static_cast<double>(filtered.size()));
  out.report = make_chi2_report(stat, constraint.rank());
  return out;
}

Vector squared_residual_acf(std::span<const double> eta, int ell) {
  const std::size_t n = eta.size();
  if (ell < 1 || 2 * static_cast<std::size_t>(ell) >= n)
    fail(ErrorKind::invalid_argument, "lag must satisfy 1 <= ell < T/2");
  std::vector<double> e2(n);
  double mean = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    e2[t] = eta[t] * eta[t];
    mean += e2[t];
  }
  mean /= static_cast<double>(n);
  double denom = 0.0;
  for (double v : e2) denom += (v - mean) * (v - mean);
  if (!(denom > 0.0))
    fail(ErrorKind::numerical, "squared residuals are constant; autocorrelation undefined");
  Vector rho(ell);
  for (int k = 1; k <= ell; ++k) {
    double acc = 0.0;
    for (std::size_t t = k; t < n; ++t) acc += (e2[t] - mean) * (e2[t - k] - mean);
    rho(k - 1) = acc / denom;
  }
  return rho;
}

std::pair<TestReport, PortmanteauInternals> portmanteau_from_filtered(const FilteredSeries& filtered,
                                                                      int ell) {
  const std::size_t n_obs = filtered.size();
  const double T = static_cast<double>(n_obs);
  const Matrix& psi = filtered.psi_hat;
  const auto n = psi.cols();

  PortmanteauInternals in;
  in.rho_hat = squared_residual_acf(filtered.eta_hat, ell);
  const auto cov = estimate_covariance(filtered);
  const Matrix j1_inv = guarded_symmetric_inverse(cov.J1_hat, "J1");

  std::vector<double> e2m1(n_obs);
  double g2 = 0.0;
  Vector psi_over_g = Vector::Zero(n);
  for (std::size_t t = 0; t < n_obs; ++t) {
    e2m1[t] = filtered.eta_hat[t] * filtered.eta_hat[t] - 1.0;
    const double g = filtered.g_hat[t];
    g2 += g * g;
    psi_over_g += psi.row(static_cast<Eigen::Index>(t)).transpose() / g;
  }
  g2 /= T;
  psi_over_g /= T;

  in.D_hat = Matrix::Zero(ell, n);
  in.H_hat = Vector::Zero(ell);
  in.F_hat = Vector::Zero(ell);
  for (int k = 1; k <= ell; ++k) {
    for (std::size_t t = k; t < n_obs; ++t) {
      const double lagged = e2m1[t - k];
      const double g = filtered.g_hat[t];
      in.D_hat.row(k - 1) += lagged * psi.row(static_cast<Eigen::Index>(t));
      in.H_hat(k - 1) += lagged / g;
      in.F_hat(k - 1) += lagged * g;
    }
  }
  in.D_hat /= T;
  in.H_hat /= T;
  in.F_hat /= T;

  const auto m = static_cast<Eigen::Index>(ell);
  const Eigen::Index dim = m + 1 + n;
  in.SigmaP1_hat = Matrix::Zero(m, dim);
  in.SigmaP1_hat.leftCols(m).setIdentity();
  in.SigmaP1_hat.col(m) = -in.H_hat;
  in.SigmaP1_hat.rightCols(n) = -in.D_hat * j1_inv;

  Matrix p2 = Matrix::Zero(dim, dim);
  p2.topLeftCorner(m, m) = (cov.kappa_hat - 1.0) * Matrix::Identity(m, m);
  p2.block(0, m, m, 1) = in.F_hat;
  p2.block(0, m + 1, m, n) = in.D_hat - in.F_hat * psi_over_g.transpose();
  p2(m, m) = g2;
  p2.block(m, m + 1, 1, n) = -g2 * psi_over_g.transpose();
  p2.bottomRightCorner(n, n) = cov.J1_hat + cov.J2_hat;
  p2.triangularView<Eigen::StrictlyLower>() = p2.transpose().triangularView<Eigen::StrictlyLower>();
  in.SigmaP2_hat = p2;

  if (!(cov.kappa_hat > 1.0))
    fail(ErrorKind::numerical, "fourth-moment estimate is not above 1; SigmaP undefined");
  const Matrix sp = in.SigmaP1_hat * in.SigmaP2_hat * in.SigmaP1_hat.transpose() / (cov.kappa_hat - 1.0);
  in.SigmaP_hat = 0.5 * (sp + sp.transpose());

  Eigen::SelfAdjointEigenSolver<Matrix> eig(in.SigmaP_hat);
  if (!(eig.eigenvalues().minCoeff() > 0.0))
    fail(ErrorKind::numerical, "portmanteau covariance is not positive definite");
  const Matrix sp_inv = guarded_symmetric_inverse(in.SigmaP_hat, "SigmaP");
  const double q = T * in.rho_hat.dot(sp_inv * in.rho_hat);
  return {make_chi2_report(std::max(q, 0.0), ell), std::move(in)};
}

std::pair<TestReport, PortmanteauInternals> portmanteau_test(const FitResult& fit, int ell) {
  if (ell < 1) fail(ErrorKind::invalid_argument, "portmanteau lag must be at least 1");
  if (!fit.converged) fail(ErrorKind::not_converged, "portmanteau test needs a converged fit");
  return portmanteau_from_filtered(fit.filtered, ell);
}

}  // namespace sgarch
