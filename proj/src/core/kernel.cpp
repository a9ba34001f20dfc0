#include "core/kernel.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>

namespace sgarch {

void KernelSpec::validate() const {
  if (!(bandwidth > 0.0 && bandwidth < 0.5))
    fail(ErrorKind::invalid_argument,
         "bandwidth must lie in (0, 0.5), got " + std::to_string(bandwidth));
}

double kernel_eval(KernelKind kind, double x) {
  switch (kind) {
    case KernelKind::epanechnikov:
      return std::abs(x) <= 1.0 ? 0.75 * (1.0 - x * x) : 0.0;
  }
  return 0.0;
}

double kernel_roughness(KernelKind kind) {
  switch (kind) {
    case KernelKind::epanechnikov:
      return 0.6;
  }
  return 0.0;
}

std::size_t window_half_width(std::size_t n, double h) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * h));
}

std::vector<double> kernel_weights(const KernelSpec& spec, std::size_t n) {
  spec.validate();
  const std::size_t m = window_half_width(n, spec.bandwidth);
  if (m < 1)
    fail(ErrorKind::numerical, "bandwidth " + std::to_string(spec.bandwidth) +
                                   " leaves an empty smoothing window for T=" + std::to_string(n));
  const double th = static_cast<double>(n) * spec.bandwidth;
  std::vector<double> w(m + 1);
  for (std::size_t d = 0; d <= m; ++d) w[d] = kernel_eval(spec.kind, static_cast<double>(d) / th) / th;
  return w;
}

std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
  if (i < 0) return static_cast<std::size_t>(-i);
  if (i > last) return static_cast<std::size_t>(2 * last - i);
  return static_cast<std::size_t>(i);
}

std::vector<double> kernel_smooth(std::span<const double> values, const KernelSpec& spec,
                                  Boundary boundary) {
  const std::size_t n = values.size();
  const auto w = kernel_weights(spec, n);
  const std::size_t m = w.size() - 1;
  if (m >= n)
    fail(ErrorKind::invalid_argument, "smoothing window wider than the series");

  std::vector<double> out(n);
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
  for (std::size_t t = 0; t < n; ++t) {
    const auto ti = static_cast<std::ptrdiff_t>(t);
    double acc = w[0] * values[t];
    for (std::size_t d = 1; d <= m; ++d) {
      const auto di = static_cast<std::ptrdiff_t>(d);
      double left = 0.0;
      double right = 0.0;
      if (boundary == Boundary::reflection) {
        left = values[reflect_index(ti - di, n)];
        right = values[reflect_index(ti + di, n)];
      } else {
        if (ti - di >= 0) left = values[t - d];
        if (ti + di <= last) right = values[t + d];
      }
      // Pairing the two sides keeps the sum symmetric under time reversal.
      acc += w[d] * (left + right);
    }
    out[t] = acc;
  }
  return out;
}

LongRunFit estimate_tau(std::span<const double> y, const KernelSpec& spec, Boundary boundary) {
  std::vector<double> y_sq(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) y_sq[i] = y[i] * y[i];
  LongRunFit fit;
  fit.tau_hat = kernel_smooth(y_sq, spec, boundary);
  fit.h_used = spec.bandwidth;
  fit.boundary = boundary;
  fit.kernel = spec.kind;
  return fit;
}

std::vector<double> leave_one_out_tau(std::span<const double> y, const KernelSpec& spec) {
  const std::size_t n = y.size();
  const auto w = kernel_weights(spec, n);
  const std::size_t m = w.size() - 1;
  auto tau = estimate_tau(y, spec, Boundary::reflection).tau_hat;
  for (std::size_t t = 0; t < n; ++t) {
    double own = w[0];
    // Mirrored copies of y_t sit at distance 2t (left edge) and
    // 2(T-1-t) (right edge) from t.
    const std::size_t d_left = 2 * t;
    const std::size_t d_right = 2 * (n - 1 - t);
    if (d_left >= 1 && d_left <= m) own += w[d_left];
    if (d_right >= 1 && d_right <= m) own += w[d_right];
    tau[t] -= own * y[t] * y[t];
  }
  return tau;
}

double estimate_tau_at(std::span<const double> y, const KernelSpec& spec, double x) {
  spec.validate();
  const auto n = static_cast<double>(y.size());
  const double h = spec.bandwidth;
  double acc = 0.0;
  for (std::size_t s = 0; s < y.size(); ++s) {
    const double u = (x - static_cast<double>(s + 1) / n) / h;
    if (std::abs(u) > 1.0) continue;
    acc += kernel_eval(spec.kind, u) * y[s] * y[s];
  }
  return acc / (n * h);
}

double bartlett_long_run_variance(std::span<const double> z, std::size_t max_lag) {
  const std::size_t n = z.size();
  if (n < 2) fail(ErrorKind::invalid_argument, "long-run variance needs at least 2 values");
  double mean = 0.0;
  for (double v : z) mean += v;
  mean /= static_cast<double>(n);
  auto autocov = [&](std::size_t k) {
    double acc = 0.0;
    for (std::size_t t = k; t < n; ++t) acc += (z[t] - mean) * (z[t - k] - mean);
    return acc / static_cast<double>(n);
  };
  double lrv = autocov(0);
  for (std::size_t k = 1; k <= max_lag && k < n; ++k)
    lrv += 2.0 * (1.0 - static_cast<double>(k) / static_cast<double>(max_lag + 1)) * autocov(k);
  return lrv;
}

TauInterval tau_pointwise_ci(const LongRunFit& fit, std::span<const double> y, double x,
                             double level) {
  const std::size_t n = y.size();
  if (fit.tau_hat.size() != n)
    fail(ErrorKind::invalid_argument, "long-run fit and series lengths differ");
  const double h = fit.h_used;
  if (!(x >= h && x <= 1.0 - h))
    fail(ErrorKind::invalid_argument, "x=" + std::to_string(x) +
                                          " is within one bandwidth of the sample boundary");
  if (!(level > 0.0 && level < 1.0))
    fail(ErrorKind::invalid_argument, "confidence level must lie in (0, 1)");

  const KernelSpec spec{fit.kernel, h};
  std::vector<double> z(n);
  for (std::size_t t = 0; t < n; ++t) {
    if (!(fit.tau_hat[t] > 0.0)) fail(ErrorKind::numerical, "non-positive tau_hat");
    z[t] = y[t] * y[t] / fit.tau_hat[t] - 1.0;
  }
  const auto lag = static_cast<std::size_t>(std::floor(std::cbrt(static_cast<double>(n))));

  TauInterval out;
  out.estimate = estimate_tau_at(y, spec, x);
  out.omega_z = bartlett_long_run_variance(z, lag);
  out.variance = out.estimate * out.estimate * kernel_roughness(fit.kernel) * out.omega_z;
  const double zq =
      boost::math::quantile(boost::math::normal(), 1.0 - 0.5 * (1.0 - level));
  const double half = zq * std::sqrt(std::max(out.variance, 0.0) / (static_cast<double>(n) * h));
  out.lower = out.estimate - half;
  out.upper = out.estimate + half;
  return out;
}

}  // namespace sgarch
