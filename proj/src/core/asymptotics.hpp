#pragma once

#include "core/qmle.hpp"

namespace sgarch {

struct AsymptoticCov {
  double kappa_hat = 0.0;
  Matrix J1_hat;
  Matrix J2_hat;
  Matrix sigma_hat;
  Vector se;
  double j1_condition = 0.0;
};

/// Inverse of a symmetric matrix through its eigen-decomposition. Warns when
/// the condition number exceeds 1e10 and throws above 1e14.
Matrix guarded_symmetric_inverse(const Matrix& m, const char* what, double* condition = nullptr);

/// kappa = mean eta^4, J1 = mean psi psi', J2 = mean(g^2) m m' with
/// m = mean(psi / g); Sigma = (kappa - 1) J1^-1 (J1 + J2) J1^-1 and
/// se_i = sqrt(Sigma_ii / T).
AsymptoticCov estimate_covariance(const FilteredSeries& filtered);

/// Score of the objective sum (1 - eta_t^2) psi_t.
Vector score(const FilteredSeries& filtered);

}  // namespace sgarch
