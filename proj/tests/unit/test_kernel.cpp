#include "core/kernel.hpp"
#include "core/simulation.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

using namespace sgarch;
using sgarch::testing::normal_draws;

namespace {

// Direct evaluation on an explicit mirrored pseudo-data array.
std::vector<double> pseudo_data_oracle(const std::vector<double>& y, double h, bool reflect) {
  const auto n = static_cast<std::ptrdiff_t>(y.size());
  const double Th = static_cast<double>(n) * h;
  const auto m = static_cast<std::ptrdiff_t>(std::floor(Th));
  std::vector<double> ext(static_cast<std::size_t>(n + 2 * m), 0.0);
  for (std::ptrdiff_t i = -m; i < n + m; ++i) {
    double v = 0.0;
    if (i >= 0 && i < n) v = y[static_cast<std::size_t>(i)];
    else if (reflect && i < 0) v = y[static_cast<std::size_t>(-i)];
    else if (reflect) v = y[static_cast<std::size_t>(2 * (n - 1) - i)];
    ext[static_cast<std::size_t>(i + m)] = v * v;
  }
  std::vector<double> out(y.size());
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    double acc = 0.0;
    for (std::ptrdiff_t s = t - m; s <= t + m; ++s) {
      const double u = static_cast<double>(t - s) / Th;
      const double k = std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
      acc += k * ext[static_cast<std::size_t>(s + m)];
    }
    out[static_cast<std::size_t>(t)] = acc / Th;
  }
  return out;
}

double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace

TEST_SUITE("kernel") {

TEST_CASE("Epanechnikov values") {
  const KernelSpec spec{KernelKind::epanechnikov, 0.1};
  CHECK(kernel_eval(spec, 0.0) == 0.75);
  CHECK(kernel_eval(spec, 1.0) == 0.0);
  CHECK(kernel_eval(spec, -1.0) == 0.0);
  CHECK(kernel_eval(spec, 0.5) == doctest::Approx(0.5625).epsilon(1e-15));
  CHECK(kernel_eval(spec, 1.5) == 0.0);
  CHECK(kernel_eval(spec, -0.3) == kernel_eval(spec, 0.3));
}

TEST_CASE("kernel moments by quadrature") {
  const auto k = [](double x) { return kernel_eval(KernelKind::epanechnikov, x); };
  CHECK(simpson(k, -1.0, 1.0, 2000) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(simpson([&](double x) { return x * k(x); }, -1.0, 1.0, 2000)) < 1e-6);
  CHECK(simpson([&](double x) { return x * x * k(x); }, -1.0, 1.0, 2000) == doctest::Approx(0.2).epsilon(1e-6));
  CHECK(simpson([&](double x) { return k(x) * k(x); }, -1.0, 1.0, 2000) ==
        doctest::Approx(kernel_roughness(KernelKind::epanechnikov)).epsilon(1e-6));
  CHECK(kernel_roughness(KernelKind::epanechnikov) == doctest::Approx(0.6));
}

TEST_CASE("bandwidth validation") {
  CHECK_THROWS_AS((KernelSpec{KernelKind::epanechnikov, 0.0}.validate()), Error);
  CHECK_THROWS_AS((KernelSpec{KernelKind::epanechnikov, 0.5}.validate()), Error);
  CHECK_NOTHROW((KernelSpec{KernelKind::epanechnikov, 0.49}.validate()));
  const auto y = normal_draws(100, 1);
  CHECK_THROWS_AS(estimate_tau(y, KernelSpec{KernelKind::epanechnikov, 0.005}, Boundary::reflection), Error);
}

TEST_CASE("estimate matches the pseudo-data oracle") {
  for (double h : {0.03, 0.1, 0.25, 0.45}) {
    const auto y = normal_draws(301, 17);
    const auto fit = estimate_tau(y, KernelSpec{KernelKind::epanechnikov, h}, Boundary::reflection);
    const auto oracle = pseudo_data_oracle(y, h, true);
    const auto inner = estimate_tau(y, KernelSpec{KernelKind::epanechnikov, h}, Boundary::interior_only);
    const auto inner_oracle = pseudo_data_oracle(y, h, false);
    for (std::size_t t = 0; t < y.size(); ++t) {
      CHECK(fit.tau_hat[t] == doctest::Approx(oracle[t]).epsilon(1e-12));
      CHECK(inner.tau_hat[t] == doctest::Approx(inner_oracle[t]).epsilon(1e-12));
    }
    CHECK(fit.h_used == h);
  }
}

TEST_CASE("constant squares give tau close to the constant in the interior") {
  const std::size_t n = 2000;
  const double c = 2.5;
  std::vector<double> y(n, std::sqrt(c));
  const double h = 0.06;  // T h = 120
  const auto fit = estimate_tau(y, KernelSpec{KernelKind::epanechnikov, h}, Boundary::reflection);
  const auto m = window_half_width(n, h);
  for (std::size_t t = m + 1; t + m < n; ++t) CHECK(std::abs(fit.tau_hat[t] - c) <= 0.05 * c);
  // reflection keeps the edges on target too
  CHECK(std::abs(fit.tau_hat.front() - c) <= 0.05 * c);
  CHECK(std::abs(fit.tau_hat.back() - c) <= 0.05 * c);
}

TEST_CASE("reflection and interior-only agree exactly away from the edges") {
  for (double h : {0.05, 0.2}) {
    const auto y = normal_draws(997, 3);
    const KernelSpec spec{KernelKind::epanechnikov, h};
    const auto a = estimate_tau(y, spec, Boundary::reflection).tau_hat;
    const auto b = estimate_tau(y, spec, Boundary::interior_only).tau_hat;
    const auto m = window_half_width(y.size(), h);
    // 1-based [Th] < t <= T - [Th]
    for (std::size_t t1 = m + 1; t1 <= y.size() - m; ++t1) CHECK(a[t1 - 1] == b[t1 - 1]);
  }
}

TEST_CASE("reversal symmetry is exact") {
  for (double h : {0.02, 0.1, 0.3}) {
    const auto y = normal_draws(523, 8);
    auto rev = y;
    std::reverse(rev.begin(), rev.end());
    const KernelSpec spec{KernelKind::epanechnikov, h};
    const auto a = estimate_tau(y, spec, Boundary::reflection).tau_hat;
    auto b = estimate_tau(rev, spec, Boundary::reflection).tau_hat;
    std::reverse(b.begin(), b.end());
    for (std::size_t t = 0; t < y.size(); ++t) CHECK(a[t] == b[t]);
  }
}

TEST_CASE("scaling equivariance") {
  const auto y = normal_draws(800, 21);
  const KernelSpec spec{KernelKind::epanechnikov, 0.12};
  const auto base = estimate_tau(y, spec, Boundary::reflection).tau_hat;
  for (double c : {0.001, 0.7, 3.0, 1234.5}) {
    auto z = y;
    for (auto& v : z) v *= c;
    const auto scaled = estimate_tau(z, spec, Boundary::reflection).tau_hat;
    for (std::size_t t = 0; t < y.size(); ++t)
      CHECK(std::abs(scaled[t] - c * c * base[t]) <= 1e-12 * c * c * base[t]);
  }
}

TEST_CASE("leave-one-out never uses the left-out observation") {
  const auto y = normal_draws(240, 4);
  for (double h : {0.05, 0.2, 0.45}) {
    const KernelSpec spec{KernelKind::epanechnikov, h};
    const auto base = leave_one_out_tau(y, spec);
    for (std::size_t t : {std::size_t{0}, std::size_t{1}, std::size_t{7}, std::size_t{119}, std::size_t{120},
                          std::size_t{238}, std::size_t{239}}) {
      auto z = y;
      z[t] += 37.0;
      const auto perturbed = leave_one_out_tau(z, spec);
      CHECK(perturbed[t] == doctest::Approx(base[t]).epsilon(1e-12));
    }
  }
}

TEST_CASE("leave-one-out matches zeroing every copy in the pseudo data") {
  const auto y = normal_draws(150, 9);
  const double h = 0.3;
  const auto loo = leave_one_out_tau(y, KernelSpec{KernelKind::epanechnikov, h});
  for (std::size_t t = 0; t < y.size(); t += 7) {
    auto z = y;
    z[t] = 0.0;
    const auto oracle = pseudo_data_oracle(z, h, true);
    CHECK(loo[t] == doctest::Approx(oracle[t]).epsilon(1e-12));
  }
}

TEST_CASE("Monte-Carlo mean of the estimate at x = 0.5 for i.i.d. data") {
  const int reps = 200;
  const std::size_t n = 2000;
  const KernelSpec spec{KernelKind::epanechnikov, 0.1};
  std::vector<double> est;
  for (int r = 0; r < reps; ++r) est.push_back(estimate_tau_at(normal_draws(n, 1000 + r), spec, 0.5));
  double mean = 0.0;
  for (double v : est) mean += v;
  mean /= reps;
  double var = 0.0;
  for (double v : est) var += (v - mean) * (v - mean);
  const double se = std::sqrt(var / (reps - 1) / reps);
  CHECK(std::abs(mean - 1.0) <= 3.0 * se);
}

TEST_CASE("pointwise interval") {
  const auto y = normal_draws(4000, 77);
  const KernelSpec spec{KernelKind::epanechnikov, 0.1};
  const auto fit = estimate_tau(y, spec, Boundary::reflection);
  const auto ci = tau_pointwise_ci(fit, y, 0.5, 0.95);
  CHECK(ci.lower < ci.estimate);
  CHECK(ci.estimate < ci.upper);
  CHECK(ci.lower < ci.upper);

  // i.i.d. data: Omega_z is essentially Var(z) = kappa - 1
  double zbar = 0.0;
  std::vector<double> z(y.size());
  for (std::size_t t = 0; t < y.size(); ++t) zbar += (z[t] = y[t] * y[t] / fit.tau_hat[t] - 1.0);
  zbar /= static_cast<double>(z.size());
  double gamma0 = 0.0;
  for (double v : z) gamma0 += (v - zbar) * (v - zbar);
  gamma0 /= static_cast<double>(z.size());
  CHECK(ci.variance == doctest::Approx(ci.estimate * ci.estimate * 0.6 * gamma0).epsilon(0.15));

  CHECK_THROWS_AS(tau_pointwise_ci(fit, y, 0.05, 0.95), Error);
  CHECK_THROWS_AS(tau_pointwise_ci(fit, y, 0.95, 0.95), Error);
}

TEST_CASE("Bartlett long-run variance oracle") {
  const std::vector<double> z{1.0, -2.0, 0.5, 3.0, -1.0, 0.0, 2.0};
  const double mean = 0.5;
  auto gamma = [&](std::size_t k) {
    double acc = 0.0;
    for (std::size_t t = k; t < z.size(); ++t) acc += (z[t] - mean) * (z[t - k] - mean);
    return acc / 7.0;
  };
  const double expected = gamma(0) + 2.0 * (2.0 / 3.0) * gamma(1) + 2.0 * (1.0 / 3.0) * gamma(2);
  CHECK(bartlett_long_run_variance(z, 2) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("interval coverage at x = 0.5 under the linear shape") {
  const int reps = 500;
  const std::size_t n = 4000;
  const KernelSpec spec{KernelKind::epanechnikov, 0.1};
  const double truth = tau_function(TauShape::linear, 0.5);
  int covered = 0;
  for (int r = 0; r < reps; ++r) {
    auto y = normal_draws(n, 50000 + r);
    for (std::size_t t = 0; t < n; ++t)
      y[t] *= std::sqrt(tau_function(TauShape::linear, static_cast<double>(t + 1) / n));
    const auto fit = estimate_tau(y, spec, Boundary::reflection);
    const auto ci = tau_pointwise_ci(fit, y, 0.5, 0.95);
    if (ci.lower <= truth && truth <= ci.upper) ++covered;
  }
  const double rate = static_cast<double>(covered) / reps;
  MESSAGE("coverage " << rate);
  CHECK(rate >= 0.90);
  CHECK(rate <= 0.98);
}

}
