#include "core/alt_estimators.hpp"

#include "core/data_io.hpp"

#include <cmath>

namespace sgarch {

VTResult fit_vt(const ReturnSeries& series, GarchOrder order, const FitOptions& options) {
  require_estimable(series);
  double acc = 0.0;
  for (double v : series.values) acc += v * v;
  VTResult out;
  out.tau_bar = acc / static_cast<double>(series.size());
  if (!(out.tau_bar > 0.0)) fail(ErrorKind::data, "series is identically zero");

  LongRunFit longrun;
  longrun.tau_hat.assign(series.size(), out.tau_bar);
  longrun.h_used = 0.0;
  out.fit = fit_qmle(series, longrun, order, options);
  out.cov = estimate_covariance(out.fit.filtered);
  return out;
}

double dl_dtau(double tau, double y_sq, double g) { return 1.0 / tau - y_sq / (tau * tau * g); }

double d2l_dtau2(double tau, double y_sq, double g) {
  return -1.0 / (tau * tau) + 2.0 * y_sq / (tau * tau * tau * g);
}

ThreeStepResult three_step_update(const FitResult& fit, const ReturnSeries& series,
                                  const KernelSpec& spec) {
  if (!fit.converged) fail(ErrorKind::not_converged, "three-step update needs a converged fit");
  const std::size_t n = series.size();
  const auto& tau = fit.longrun.tau_hat;
  const auto& g = fit.filtered.g_hat;
  if (tau.size() != n || g.size() != n)
    fail(ErrorKind::invalid_argument, "fit does not belong to this series");

  // Both kernel averages are linear in (1, y^2 / g), so two smooths suffice.
  std::vector<double> ones(n, 1.0);
  std::vector<double> ratio(n);
  for (std::size_t t = 0; t < n; ++t) ratio[t] = series.values[t] * series.values[t] / g[t];
  const auto mass = kernel_smooth(ones, spec, fit.longrun.boundary);
  const auto ratio_smooth = kernel_smooth(ratio, spec, fit.longrun.boundary);

  ThreeStepResult out;
  out.order = fit.params.order();
  out.tau_check.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double tv = tau[t];
    const double first = mass[t] / tv - ratio_smooth[t] / (tv * tv);
    const double second = -mass[t] / (tv * tv) + 2.0 * ratio_smooth[t] / (tv * tv * tv);
    const double updated = tv - first / second;
    if (std::isfinite(updated) && updated > 0.0) {
      out.tau_check[t] = updated;
    } else {
      out.tau_check[t] = tv;
      ++out.tau_fallbacks;
    }
  }

  out.filtered = filter_series(series.values, out.tau_check, fit.params);
  const auto& f = out.filtered;
  const Eigen::Index k = fit.params.theta().size();
  const double T = static_cast<double>(n);
  Vector G = Vector::Zero(k);
  for (std::size_t t = 0; t < n; ++t) G += f.psi_hat.row(static_cast<Eigen::Index>(t)).transpose();
  G /= T;

  out.score = Vector::Zero(k);
  out.hessian = Matrix::Zero(k, k);
  for (std::size_t t = 0; t < n; ++t) {
    const Vector psi = f.psi_hat.row(static_cast<Eigen::Index>(t)).transpose();
    out.score += (psi - G) * (1.0 - f.eta_hat[t] * f.eta_hat[t]);
    out.hessian += psi * psi.transpose();
  }
  out.hessian -= T * G * G.transpose();
  const Matrix h_inv = guarded_symmetric_inverse(out.hessian, "three-step Hessian");
  out.theta_check = fit.params.theta() - h_inv * out.score;
  return out;
}

SigmaStar sigma_star_plugin(const ThreeStepResult& three, const FilteredSeries& filtered) {
  const std::size_t n = filtered.size();
  const Eigen::Index k = filtered.psi_hat.cols();
  if (n == 0 || k != three.theta_check.size())
    fail(ErrorKind::invalid_argument, "filtered series does not match the three-step result");
  const double T = static_cast<double>(n);

  Vector psi_mean = Vector::Zero(k);
  Vector psi_over_g = Vector::Zero(k);
  double inv_g = 0.0;
  double kappa = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const auto row = filtered.psi_hat.row(static_cast<Eigen::Index>(t)).transpose();
    psi_mean += row;
    psi_over_g += row / filtered.g_hat[t];
    inv_g += 1.0 / filtered.g_hat[t];
    const double e2 = filtered.eta_hat[t] * filtered.eta_hat[t];
    kappa += e2 * e2;
  }
  psi_mean /= T;
  psi_over_g /= T;
  inv_g /= T;

  SigmaStar out;
  out.kappa_hat = kappa / T;
  out.J1_star = Matrix::Zero(k, k);
  for (std::size_t t = 0; t < n; ++t) {
    const Vector c = filtered.psi_hat.row(static_cast<Eigen::Index>(t)).transpose() - psi_mean;
    out.J1_star += c * c.transpose();
  }
  out.J1_star /= T;

  const double omega = 1.0 - three.theta_check.sum();
  const double gamma = 1.0 - three.theta_check.tail(three.order.p).sum();
  if (!(std::abs(gamma) > 0.0)) fail(ErrorKind::numerical, "gamma is zero in the three-step estimate");
  const Vector v = inv_g * psi_mean - psi_over_g;
  out.J2_star = (omega * omega / (gamma * gamma)) * v * v.transpose();

  const Matrix j1_inv = guarded_symmetric_inverse(out.J1_star, "J1*");
  const Matrix s = (out.kappa_hat - 1.0) * j1_inv * (out.J1_star + out.J2_star) * j1_inv;
  out.sigma = 0.5 * (s + s.transpose());
  return out;
}

}  // namespace sgarch
