#pragma once

#include "core/common.hpp"

#include <span>

namespace sgarch {

enum class KernelKind { epanechnikov };

struct KernelSpec {
  KernelKind kind = KernelKind::epanechnikov;
  double bandwidth = 0.1;

  /// Throws unless 0 < h < 0.5.
  void validate() const;
};

enum class Boundary { reflection, interior_only };

struct LongRunFit {
  std::vector<double> tau_hat;
  double h_used = 0.0;
  Boundary boundary = Boundary::reflection;
  KernelKind kernel = KernelKind::epanechnikov;
};

double kernel_eval(KernelKind kind, double x);
inline double kernel_eval(const KernelSpec& spec, double x) { return kernel_eval(spec.kind, x); }

/// Integral of K^2 over the support (3/5 for Epanechnikov).
double kernel_roughness(KernelKind kind);

/// Half-width [T h] of the smoothing window in index units.
std::size_t window_half_width(std::size_t n, double h);

/// Weights w_d = K(d / (T h)) / (T h) for d = 0..[T h]; the window is
/// symmetric so only the non-negative half is returned.
std::vector<double> kernel_weights(const KernelSpec& spec, std::size_t n);

/// Maps a possibly out-of-range 0-based index onto the sample by mirroring
/// about the first and last observations.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n);

/// sum_d w_d v_{t-d} for every t. Under reflection the window runs over
/// mirrored pseudo-data; interior_only truncates it at the sample edges.
std::vector<double> kernel_smooth(std::span<const double> values, const KernelSpec& spec,
                                  Boundary boundary);

/// tau_hat_t = (1/T) sum_s K_h((t - s)/T) y_s^2 (unnormalized kernel sum).
LongRunFit estimate_tau(std::span<const double> y, const KernelSpec& spec, Boundary boundary);

/// Reflection estimator at every t with observation t (and its mirrored
/// copies) removed from its own window.
std::vector<double> leave_one_out_tau(std::span<const double> y, const KernelSpec& spec);

/// Kernel estimate at an arbitrary point x in (0, 1) using the interior sum.
double estimate_tau_at(std::span<const double> y, const KernelSpec& spec, double x);

/// Bartlett-weighted long-run variance with lags 1..max_lag.
double bartlett_long_run_variance(std::span<const double> z, std::size_t max_lag);

struct TauInterval {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double variance = 0.0;    // V(x) plug-in
  double omega_z = 0.0;     // long-run variance of u^2 - 1
};

/// Pointwise normal interval for tau(x); x must be at least h away from both
/// ends. The O(h^2) bias term is not corrected.
TauInterval tau_pointwise_ci(const LongRunFit& fit, std::span<const double> y, double x,
                             double level);

}  // namespace sgarch
