#pragma once

#include "core/kernel.hpp"
#include "core/qmle.hpp"

namespace sgarch {

struct CVConfig {
  double lambda0 = 2.0 / 7.0;
  double c_min_factor = 0.5;
  double c_max_factor = 3.0;
  int grid_size = 25;
  GarchOrder pilot_order{1, 1};

  void validate() const;
};

struct CVPoint {
  double h = 0.0;
  double cv = 0.0;
};

struct BandwidthSelection {
  double h_cv = 0.0;
  std::vector<CVPoint> curve;
  double h_pilot = 0.0;
  GarchParams pilot_params;
  bool pilot_converged = false;
};

/// Log-spaced grid on [c_min T^-lambda0, c_max T^-lambda0] where
/// c = factor * variance^lambda0, clipped to the admissible bandwidth range.
std::vector<double> bandwidth_grid(std::size_t n, double variance, const CVConfig& config);

/// CV(h) = sum_t (y_t^2 / (tau_{-t}(h) g_t) - 1)^2 with the leave-one-out
/// reflection estimator. +inf if any leave-one-out estimate is non-positive.
double cv_criterion(std::span<const double> y, std::span<const double> g_pilot, double h);

/// Two-step selection: pilot bandwidth T^-lambda0, pilot QMLE for g, then
/// the CV argmin over the grid (ties go to the smaller h).
BandwidthSelection select_bandwidth_cv(const ReturnSeries& series, const CVConfig& config = {});

}  // namespace sgarch
