#include "core/asymptotics.hpp"

#include "core/log.hpp"

#include <cmath>
#include <sstream>

namespace sgarch {

Matrix guarded_symmetric_inverse(const Matrix& m, const char* what, double* condition) {
  if (m.rows() != m.cols() || m.rows() == 0)
    fail(ErrorKind::invalid_argument, std::string(what) + " must be a non-empty square matrix");
  if (!m.allFinite()) fail(ErrorKind::numerical, std::string(what) + " has non-finite entries");
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const Vector& ev = eig.eigenvalues();
  const double largest = ev.cwiseAbs().maxCoeff();
  const double smallest = ev.cwiseAbs().minCoeff();
  const double cond = smallest > 0.0 ? largest / smallest : std::numeric_limits<double>::infinity();
  if (condition) *condition = cond;
  if (!(cond <= 1e14)) {
    std::ostringstream os;
    os << what << " is singular (condition number " << cond << ")";
    fail(ErrorKind::numerical, os.str());
  }
  if (cond > 1e10) {
    std::ostringstream os;
    os << what << " is ill-conditioned (condition number " << cond << ")";
    log_warn(os.str());
  }
  return eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

AsymptoticCov estimate_covariance(const FilteredSeries& filtered) {
  const auto n_obs = static_cast<Eigen::Index>(filtered.size());
  if (n_obs == 0) fail(ErrorKind::invalid_argument, "empty filtered series");
  const double T = static_cast<double>(n_obs);
  const Matrix& psi = filtered.psi_hat;
  const auto n = psi.cols();

  AsymptoticCov cov;
  double kappa = 0.0;
  double g2 = 0.0;
  Vector psi_over_g = Vector::Zero(n);
  for (Eigen::Index t = 0; t < n_obs; ++t) {
    const double e2 = filtered.eta_hat[t] * filtered.eta_hat[t];
    kappa += e2 * e2;
    const double g = filtered.g_hat[t];
    g2 += g * g;
    psi_over_g += psi.row(t).transpose() / g;
  }
  cov.kappa_hat = kappa / T;
  psi_over_g /= T;
  g2 /= T;
  cov.J1_hat = psi.transpose() * psi / T;
  cov.J2_hat = g2 * (psi_over_g * psi_over_g.transpose());

  const Matrix j1_inv = guarded_symmetric_inverse(cov.J1_hat, "J1", &cov.j1_condition);
  Matrix sigma = (cov.kappa_hat - 1.0) * j1_inv * (cov.J1_hat + cov.J2_hat) * j1_inv;
  cov.sigma_hat = 0.5 * (sigma + sigma.transpose());
  cov.se.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) cov.se(i) = std::sqrt(std::max(cov.sigma_hat(i, i), 0.0) / T);
  return cov;
}

Vector score(const FilteredSeries& filtered) {
  const auto n_obs = static_cast<Eigen::Index>(filtered.size());
  Vector weights(n_obs);
  for (Eigen::Index t = 0; t < n_obs; ++t)
    weights(t) = 1.0 - filtered.eta_hat[t] * filtered.eta_hat[t];
  return filtered.psi_hat.transpose() * weights;
}

}  // namespace sgarch
