#include "core/alt_estimators.hpp"
#include "core/simulation.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace sgarch;

namespace {

FitResult fitted(const ReturnSeries& s, double h, GarchOrder order = {1, 1}) {
  const auto lr = estimate_tau(s.values, KernelSpec{KernelKind::epanechnikov, h}, Boundary::reflection);
  return fit_qmle(s, lr, order);
}

ReturnSeries dgp_series(Dgp dgp, int T, std::uint64_t seed, TauShape shape = TauShape::constant) {
  SimSpec spec;
  spec.dgp = dgp;
  spec.tau = shape;
  spec.T = T;
  spec.seed = seed;
  return simulate(spec, 0);
}

}  // namespace

TEST_SUITE("alt_estimators") {

TEST_CASE("tau derivatives match finite differences") {
  const double y2 = 2.7, g = 1.3;
  for (double tau : {0.4, 1.0, 2.2}) {
    auto l = [&](double t) { return std::log(g) + std::log(t) + y2 / (t * g); };
    const double e = 1e-5 * tau;
    const double fd1 = (l(tau + e) - l(tau - e)) / (2 * e);
    CHECK(dl_dtau(tau, y2, g) == doctest::Approx(fd1).epsilon(1e-6));
    const double fd2 = (dl_dtau(tau + e, y2, g) - dl_dtau(tau - e, y2, g)) / (2 * e);
    CHECK(d2l_dtau2(tau, y2, g) == doctest::Approx(fd2).epsilon(1e-6));
  }
}

TEST_CASE("variance-targeting level") {
  ReturnSeries s;
  for (int i = 0; i < 13; ++i)
    for (double v : {1.0, -1.0, 2.0, -2.0}) s.values.push_back(v);
  const auto vt = fit_vt(s, {1, 1});
  CHECK(vt.tau_bar == 2.5);
  ReturnSeries zero;
  zero.values.assign(60, 0.0);
  CHECK_THROWS_AS(fit_vt(zero, {1, 1}), Error);
}

TEST_CASE("variance targeting is scale invariant") {
  const auto s = dgp_series(Dgp::dgp2_sgarch11, 1500, 3);
  const auto a = fit_vt(s, {1, 1});
  for (double c : {0.01, 3.0, 250.0}) {
    ReturnSeries z = s;
    for (auto& v : z.values) v *= c;
    const auto b = fit_vt(z, {1, 1});
    CHECK(b.tau_bar == doctest::Approx(c * c * a.tau_bar).epsilon(1e-14));
    CHECK((b.fit.params.theta() - a.fit.params.theta()).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("three-step update formulas") {
  const auto s = dgp_series(Dgp::dgp1_sarch2, 2000, 4, TauShape::linear);
  const double h = 0.1;
  const auto fit = fitted(s, h, {0, 2});
  REQUIRE(fit.converged);
  const KernelSpec spec{KernelKind::epanechnikov, h};
  const auto three = three_step_update(fit, s, spec);
  CHECK(three.tau_check.size() == s.size());
  CHECK(three.theta_check.size() == 2);
  for (double v : three.tau_check) CHECK(v > 0.0);

  // tau step at one interior point by a direct window sum
  const std::size_t t = 1000;
  const auto m = window_half_width(s.size(), h);
  const double Th = static_cast<double>(s.size()) * h;
  double first = 0.0, second = 0.0;
  const double tv = fit.longrun.tau_hat[t];
  for (std::size_t r = t - m; r <= t + m; ++r) {
    const double u = (static_cast<double>(t) - static_cast<double>(r)) / Th;
    const double w = 0.75 * (1.0 - u * u) / Th;
    const double y2 = s.values[r] * s.values[r];
    first += w * dl_dtau(tv, y2, fit.filtered.g_hat[r]);
    second += w * d2l_dtau2(tv, y2, fit.filtered.g_hat[r]);
  }
  CHECK(three.tau_check[t] == doctest::Approx(tv - first / second).epsilon(1e-10));

  // theta step reproduces the stored score and Hessian
  const Vector step = three.hessian.ldlt().solve(three.score);
  CHECK((three.theta_check - (fit.params.theta() - step)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("a zero Newton step leaves both parts unchanged") {
  const auto s = dgp_series(Dgp::dgp2_sgarch11, 2000, 5);
  auto fit = fitted(s, 0.1);
  REQUIRE(fit.converged);
  const KernelSpec spec{KernelKind::epanechnikov, 0.1};
  // choose tau so the kernel-averaged tau score vanishes: tau = B / A
  const std::size_t n = s.size();
  std::vector<double> ones(n, 1.0), ratio(n);
  for (std::size_t t = 0; t < n; ++t) ratio[t] = s.values[t] * s.values[t] / fit.filtered.g_hat[t];
  const auto A = kernel_smooth(ones, spec, Boundary::reflection);
  const auto B = kernel_smooth(ratio, spec, Boundary::reflection);
  for (std::size_t t = 0; t < n; ++t) fit.longrun.tau_hat[t] = B[t] / A[t];
  // iterate the theta step to the root of the centered score
  for (int i = 0; i < 30; ++i) {
    const auto three = three_step_update(fit, s, spec);
    fit.params = GarchParams(fit.params.order(), three.theta_check);
  }
  const auto three = three_step_update(fit, s, spec);
  for (std::size_t t = 0; t < n; ++t)
    CHECK(three.tau_check[t] == doctest::Approx(fit.longrun.tau_hat[t]).epsilon(1e-12));
  CHECK(three.score.cwiseAbs().maxCoeff() <= 1e-8 * static_cast<double>(n));
  CHECK((three.theta_check - fit.params.theta()).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(three.tau_fallbacks == 0);
}

TEST_CASE("three-step needs a converged fit") {
  const auto s = dgp_series(Dgp::dgp2_sgarch11, 500, 6);
  auto fit = fitted(s, 0.1);
  fit.converged = false;
  CHECK_THROWS_AS(three_step_update(fit, s, KernelSpec{}), Error);
}

TEST_CASE("Sigma* structure") {
  const auto s = dgp_series(Dgp::dgp2_sgarch11, 2000, 7);
  const auto fit = fitted(s, 0.1);
  REQUIRE(fit.converged);
  const auto three = three_step_update(fit, s, KernelSpec{KernelKind::epanechnikov, 0.1});
  const auto star = sigma_star_plugin(three, fit.filtered);
  Eigen::JacobiSVD<Matrix> svd(star.J2_star);
  CHECK(svd.singularValues()(1) <= 1e-12 * std::max(svd.singularValues()(0), 1e-300));
  CHECK((star.sigma - star.sigma.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < 2; ++i) CHECK(star.sigma(i, i) >= 0.0);
  CHECK(star.kappa_hat > 1.0);

  FilteredSeries flat = fit.filtered;
  for (Eigen::Index t = 0; t < flat.psi_hat.rows(); ++t) flat.psi_hat.row(t) = Vector{{0.4, 1.2}}.transpose();
  CHECK_THROWS_AS(sigma_star_plugin(three, flat), Error);
}

}
