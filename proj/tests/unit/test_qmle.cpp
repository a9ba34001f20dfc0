#include "core/qmle.hpp"
#include "core/simulation.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace sgarch;
using sgarch::testing::normal_draws;

namespace {

LongRunFit unit_tau(std::size_t n) {
  LongRunFit fit;
  fit.tau_hat.assign(n, 1.0);
  fit.h_used = 0.1;
  return fit;
}

std::vector<double> random_squares(std::size_t n, std::uint64_t seed) {
  auto z = normal_draws(n, seed);
  for (auto& v : z) v = v * v;
  return z;
}

// g_t written out as a sum over the whole history for GARCH(1,1):
// omega sum_k beta^k + alpha sum_k beta^k u2_{t-1-k} + beta^t g_pre.
std::vector<double> garch11_expansion(const std::vector<double>& u2, double a, double b) {
  const double omega = 1.0 - a - b;
  std::vector<double> g(u2.size());
  for (std::size_t t = 0; t < u2.size(); ++t) {
    double acc = 0.0;
    for (std::size_t k = 0; k < t; ++k) acc += std::pow(b, static_cast<double>(k)) * (omega + a * u2[t - 1 - k]);
    // pre-sample term: u2_{-1} = 1 and g_{-1} = 1
    acc += std::pow(b, static_cast<double>(t)) * (omega + a * 1.0 + b * 1.0);
    g[t] = acc;
  }
  return g;
}

// Naive evaluation of the recursion through explicit pre-sample padding.
double naive_g(const std::vector<double>& u2, const Vector& theta, int p, int q, std::ptrdiff_t t) {
  if (t < 0) return 1.0;
  double g = 1.0 - theta.sum();
  for (int i = 1; i <= q; ++i) g += theta(i - 1) * (t - i >= 0 ? u2[static_cast<std::size_t>(t - i)] : 1.0);
  for (int j = 1; j <= p; ++j) g += theta(q + j - 1) * naive_g(u2, theta, p, q, t - j);
  return g;
}

Vector random_interior(GarchOrder order, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  Vector w(order.num_params());
  for (auto& v : w) v = u(rng);
  const double total = std::uniform_real_distribution<double>(0.2, 0.95)(rng);
  return w * (total / w.sum());
}

}  // namespace

TEST_SUITE("qmle") {

TEST_CASE("filter examples") {
  const GarchParams p11({1, 1}, Vector{{0.1, 0.8}});
  SUBCASE("fixed point at one") {
    const auto path = garch_filter(std::vector<double>(30, 1.0), p11);
    for (double g : path.g) CHECK(g == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("hand recursion") {
    // g at index 2 is the first value that sees the 4
    const auto path = garch_filter(std::vector<double>{1.0, 4.0, 1.0}, p11);
    CHECK(path.g[0] == doctest::Approx(1.0));
    CHECK(path.g[1] == doctest::Approx(1.0));
    CHECK(path.g[2] == doctest::Approx(0.1 + 0.1 * 4.0 + 0.8 * 1.0).epsilon(1e-15));
    CHECK(path.g[2] == doctest::Approx(1.3));
  }
  SUBCASE("ARCH(2) has no recursion on g") {
    const GarchParams arch({0, 2}, Vector{{0.3, 0.3}});
    const auto u2 = random_squares(40, 3);
    const auto path = garch_filter(u2, arch);
    for (std::size_t t = 2; t < u2.size(); ++t)
      CHECK(path.g[t] == doctest::Approx(0.4 + 0.3 * u2[t - 1] + 0.3 * u2[t - 2]).epsilon(1e-14));
  }
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(GarchParams({1, 1}, Vector{{0.5, 0.6}}), Error);
  CHECK_THROWS_AS(GarchParams({1, 1}, Vector{{-0.1, 0.6}}), Error);
  CHECK_THROWS_AS(GarchParams({1, 1}, Vector{{0.1}}), Error);
  CHECK_THROWS_AS(GarchParams({1, 0}, Vector{{0.1}}), Error);
  CHECK_NOTHROW(GarchParams({1, 1}, Vector{{0.0, 0.0}}));
}

TEST_CASE("filter equals the full-history expansion") {
  const auto u2 = random_squares(50, 7);
  const auto path = garch_filter(u2, GarchParams({1, 1}, Vector{{0.12, 0.83}}));
  const auto expanded = garch11_expansion(u2, 0.12, 0.83);
  for (std::size_t t = 0; t < u2.size(); ++t) CHECK(std::abs(path.g[t] - expanded[t]) <= 1e-12);

  std::mt19937_64 rng(11);
  for (GarchOrder order : {GarchOrder{1, 2}, GarchOrder{2, 1}, GarchOrder{2, 2}, GarchOrder{0, 3}}) {
    const auto v = random_squares(22, 9);
    const Vector theta = random_interior(order, rng);
    const auto g = garch_filter(v, GarchParams(order, theta)).g;
    for (std::size_t t = 0; t < v.size(); ++t)
      CHECK(std::abs(g[t] - naive_g(v, theta, order.p, order.q, static_cast<std::ptrdiff_t>(t))) <= 1e-12);
  }
}

TEST_CASE("filter derivatives match finite differences") {
  std::mt19937_64 rng(5);
  const auto u2 = random_squares(200, 13);
  for (GarchOrder order : {GarchOrder{1, 1}, GarchOrder{1, 2}, GarchOrder{2, 1}}) {
    const Vector theta = random_interior(order, rng);
    const auto path = garch_filter(u2, GarchParams(order, theta));
    for (int i = 0; i < order.num_params(); ++i) {
      const double step = 1e-6;
      Vector up = theta, dn = theta;
      up(i) += step;
      dn(i) -= step;
      const auto gu = garch_filter(u2, GarchParams(order, up), false).g;
      const auto gd = garch_filter(u2, GarchParams(order, dn), false).g;
      for (std::size_t t = 0; t < u2.size(); t += 17) {
        const double fd = (gu[t] - gd[t]) / (2 * step);
        CHECK(path.dg(static_cast<Eigen::Index>(t), i) == doctest::Approx(fd).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("likelihood examples") {
  const GarchParams p11({1, 1}, Vector{{0.1, 0.8}});
  CHECK(neg_loglik(std::vector<double>(25, 1.0), p11) == doctest::Approx(25.0).epsilon(1e-14));
  const std::vector<double> zeros(30, 0.0);
  const auto g = garch_filter(zeros, p11, false).g;
  double logs = 0.0;
  for (double v : g) logs += std::log(v);
  CHECK(neg_loglik(zeros, p11) == doctest::Approx(logs).epsilon(1e-14));
}

TEST_CASE("likelihood equals a straight-loop evaluation") {
  const std::vector<double> y{0.3, -1.2, 2.1, 0.05, -0.7, 1.9, -0.4, 0.8, -2.5, 1.1};
  std::vector<double> tau{0.9, 1.0, 1.2, 1.1, 0.95, 1.3, 1.05, 0.85, 1.4, 1.0};
  LongRunFit lr;
  lr.tau_hat = tau;
  ReturnSeries s;
  s.values = y;
  const double a = 0.15, b = 0.7;
  double g_prev = 1.0, u2_prev = 1.0, expected = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    const double g = (1.0 - a - b) + a * u2_prev + b * g_prev;
    const double u2 = y[t] * y[t] / tau[t];
    expected += u2 / g + std::log(g);
    g_prev = g;
    u2_prev = u2;
  }
  CHECK(std::abs(neg_loglik(s, lr, GarchParams({1, 1}, Vector{{a, b}})) - expected) <= 1e-12);
  lr.tau_hat[3] = 0.0;
  CHECK_THROWS_AS(neg_loglik(s, lr, GarchParams({1, 1}, Vector{{a, b}})), Error);
}

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937_64 rng(99);
  SimSpec spec;
  spec.T = 500;
  spec.seed = 4;
  const auto path = simulate_path(spec, 0);
  std::vector<double> u2(path.series.size());
  for (std::size_t t = 0; t < u2.size(); ++t) u2[t] = path.series.values[t] * path.series.values[t] / path.tau[t];
  int points = 0;
  for (GarchOrder order : {GarchOrder{1, 1}, GarchOrder{1, 2}, GarchOrder{2, 1}, GarchOrder{0, 2}}) {
    for (int rep = 0; rep < 5; ++rep, ++points) {
      const Vector theta = random_interior(order, rng);
      Vector grad;
      neg_loglik(u2, GarchParams(order, theta), grad);
      for (int i = 0; i < order.num_params(); ++i) {
        const double step = 1e-6 * (1.0 + std::abs(theta(i)));
        Vector up = theta, dn = theta;
        up(i) += step;
        dn(i) -= step;
        const double fd =
            (neg_loglik(u2, GarchParams(order, up)) - neg_loglik(u2, GarchParams(order, dn))) / (2 * step);
        CHECK(std::abs(grad(i) - fd) <= 1e-5 * std::max(std::abs(fd), 1.0));
      }
    }
  }
  CHECK(points == 20);
}

TEST_CASE("ARCH(1) fit agrees with a grid search") {
  auto eta = normal_draws(200, 77);
  std::vector<double> y(200);
  double prev = 1.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    const double g = 0.6 + 0.4 * prev;
    y[t] = std::sqrt(g) * eta[t];
    prev = y[t] * y[t];
  }
  ReturnSeries s;
  s.values = y;
  const auto lr = unit_tau(y.size());
  const auto fit = fit_qmle(s, lr, {0, 1});
  REQUIRE(fit.converged);
  const int grid = 200;
  const double step = (1.0 - 1e-6) / grid;
  double best = 0.0, best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= grid; ++i) {
    const double a = std::min(i * step, 1.0 - 1e-6);
    const double v = neg_loglik(s, lr, GarchParams({0, 1}, Vector{{a}}));
    if (v < best_val) {
      best_val = v;
      best = a;
    }
  }
  CHECK(std::abs(fit.params.theta()(0) - best) <= step);
  CHECK(fit.loglik <= best_val + 1e-9);
}

TEST_CASE("fit on i.i.d. data stays feasible and descends") {
  ReturnSeries s;
  s.values = normal_draws(800, 31);
  const auto lr = unit_tau(s.size());
  const GarchOrder order{1, 1};
  const auto fit = fit_qmle(s, lr, order);
  const auto& th = fit.params.theta();
  CHECK(th.minCoeff() >= 0.0);
  CHECK(th.sum() <= 1.0 - kOmegaLowerBound + 1e-15);
  CHECK(fit.loglik <= neg_loglik(s, lr, GarchParams(order, default_start(order))) + 1e-12);
  REQUIRE(!fit.history.empty());
  for (std::size_t i = 1; i < fit.history.size(); ++i) CHECK(fit.history[i] <= fit.history[i - 1]);
  CHECK(std::isfinite(fit.loglik));
  CHECK(fit.filtered.size() == s.size());
  for (double g : fit.filtered.g_hat) CHECK(g >= fit.params.omega());
}

TEST_CASE("recovers DGP 2 parameters on a long sample") {
  SimSpec spec;
  spec.T = 4000;
  spec.seed = 8;
  const auto path = simulate_path(spec, 0);
  LongRunFit lr;
  lr.tau_hat = path.tau;
  const auto fit = fit_qmle(path.series, lr, {1, 1});
  CHECK(fit.converged);
  CHECK(fit.params.alpha(0) == doctest::Approx(0.1).epsilon(0.5));
  CHECK(fit.params.beta(0) == doctest::Approx(0.8).epsilon(0.15));
}

TEST_CASE("fully pinned constraint returns the pinned point") {
  ReturnSeries s;
  s.values = normal_draws(300, 2);
  const auto lr = unit_tau(s.size());
  const Vector target{{0.07, 0.82}};
  const LinearConstraint c(Matrix::Identity(2, 2), target);
  const auto fit = fit_qmle_constrained(s, lr, {1, 1}, c);
  CHECK((fit.params.theta() - target).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(fit.converged);
}

TEST_CASE("pinning alpha_2 to zero nests GARCH(1,1)") {
  SimSpec spec;
  spec.T = 2000;
  spec.seed = 14;
  const auto path = simulate_path(spec, 0);
  LongRunFit lr;
  lr.tau_hat = path.tau;
  const auto nested = fit_qmle_constrained(path.series, lr, {1, 2}, LinearConstraint::pin(3, 1, 0.0));
  const auto small = fit_qmle(path.series, lr, {1, 1});
  REQUIRE(nested.converged);
  REQUIRE(small.converged);
  CHECK(nested.params.theta()(1) == 0.0);
  CHECK(nested.params.theta()(0) == doctest::Approx(small.params.theta()(0)).epsilon(1e-3));
  CHECK(nested.params.theta()(2) == doctest::Approx(small.params.theta()(1)).epsilon(1e-3));
  CHECK(nested.loglik == doctest::Approx(small.loglik).epsilon(1e-9));
}

TEST_CASE("constraint validation") {
  ReturnSeries s;
  s.values = normal_draws(300, 2);
  const auto lr = unit_tau(s.size());
  CHECK_THROWS_AS(fit_qmle_constrained(s, lr, {1, 1}, LinearConstraint::pin(2, 0, -0.1)), Error);
  CHECK_THROWS_AS(LinearConstraint(Matrix{{1.0, 1.0}, {2.0, 2.0}}, Vector::Zero(2)), Error);
  CHECK_THROWS_AS(fit_qmle_constrained(s, lr, {1, 1}, LinearConstraint::pin(3, 0, 0.0)), Error);
}

TEST_CASE("free-intercept ARCH fit") {
  auto eta = normal_draws(3000, 41);
  std::vector<double> y(eta.size());
  double prev = 2.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    y[t] = std::sqrt(1.5 + 0.25 * prev) * eta[t];
    prev = y[t] * y[t];
  }
  const auto fit = fit_free_arch(y, 1);
  CHECK(fit.converged);
  CHECK(fit.intercept == doctest::Approx(1.5).epsilon(0.2));
  CHECK(fit.alpha(0) == doctest::Approx(0.25).epsilon(0.4));
  const auto warm = fit_free_arch(y, 1, &fit);
  CHECK(warm.objective <= fit.objective + 1e-8 * std::abs(fit.objective));
  CHECK_THROWS_AS(fit_free_arch(std::span<const double>(y.data(), 2), 1), Error);
}

}
