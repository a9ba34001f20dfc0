#include "core/bandwidth.hpp"

#include "core/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sgarch {

void CVConfig::validate() const {
  if (!(lambda0 > 0.25 && lambda0 < 0.5))
    fail(ErrorKind::invalid_argument, "lambda0 must lie in (1/4, 1/2)");
  if (!(c_min_factor > 0.0 && c_min_factor < c_max_factor))
    fail(ErrorKind::invalid_argument, "need 0 < c_min_factor < c_max_factor");
  if (grid_size < 1) fail(ErrorKind::invalid_argument, "grid_size must be positive");
  pilot_order.validate();
}

std::vector<double> bandwidth_grid(std::size_t n, double variance, const CVConfig& config) {
  config.validate();
  if (!(variance > 0.0)) fail(ErrorKind::data, "series has zero variance");
  const double base = std::pow(static_cast<double>(n), -config.lambda0);
  const double scale = std::pow(variance, config.lambda0);
  const double h_floor = 2.0 / static_cast<double>(n);
  const double h_ceiling = std::nextafter(0.5, 0.0);
  const double lo = std::clamp(config.c_min_factor * scale * base, h_floor, h_ceiling);
  const double hi = std::clamp(config.c_max_factor * scale * base, h_floor, h_ceiling);

  std::vector<double> grid;
  if (config.grid_size == 1 || !(hi > lo)) {
    grid.push_back(lo);
    return grid;
  }
  const double step = std::log(hi / lo) / (config.grid_size - 1);
  for (int i = 0; i < config.grid_size; ++i)
    grid.push_back(i == config.grid_size - 1 ? hi : lo * std::exp(step * i));
  return grid;
}

double cv_criterion(std::span<const double> y, std::span<const double> g_pilot, double h) {
  if (y.size() != g_pilot.size())
    fail(ErrorKind::invalid_argument, "pilot variance path length mismatch");
  const auto loo = leave_one_out_tau(y, KernelSpec{KernelKind::epanechnikov, h});
  double cv = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (!(loo[t] > 0.0)) return std::numeric_limits<double>::infinity();
    const double e = y[t] * y[t] / (loo[t] * g_pilot[t]) - 1.0;
    cv += e * e;
  }
  return cv;
}

BandwidthSelection select_bandwidth_cv(const ReturnSeries& series, const CVConfig& config) {
  config.validate();
  require_estimable(series);
  const std::size_t n = series.size();
  const double variance = sample_variance(series.values);
  const auto grid = bandwidth_grid(n, variance, config);

  BandwidthSelection out;
  out.h_pilot = std::min(std::pow(static_cast<double>(n), -config.lambda0), std::nextafter(0.5, 0.0));
  const auto pilot_tau =
      estimate_tau(series.values, KernelSpec{KernelKind::epanechnikov, out.h_pilot}, Boundary::reflection);
  const auto pilot = fit_qmle(series, pilot_tau, config.pilot_order);
  out.pilot_params = pilot.params;
  out.pilot_converged = pilot.converged;
  const auto& g0 = pilot.filtered.g_hat;

  double best = std::numeric_limits<double>::infinity();
  out.h_cv = grid.front();
  for (double h : grid) {
    const double cv = cv_criterion(series.values, g0, h);
    out.curve.push_back({h, cv});
    if (cv < best) {
      best = cv;
      out.h_cv = h;
    }
  }
  if (!std::isfinite(best))
    fail(ErrorKind::numerical, "cross-validation criterion is infinite on the whole grid");
  return out;
}

}  // namespace sgarch
