#pragma once

#include "core/qmle.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace sgarch {

enum class ForecastModel { sgarch, sarch, garch_vt, ls_arch };

std::string_view to_string(ForecastModel model);
ForecastModel parse_forecast_model(std::string_view text);

struct ForecastConfig {
  std::vector<int> horizons{1, 5, 10, 22};
  int origin_start = 1500;  // first T0: number of in-sample observations
  std::vector<ForecastModel> models{ForecastModel::sgarch, ForecastModel::sarch,
                                    ForecastModel::garch_vt, ForecastModel::ls_arch};
  GarchOrder garch_order{1, 1};  // S-GARCH and GARCH(VT)
  int q_arch = 1;                // S-ARCH and LS-ARCH
  std::vector<int> window_grid{50, 100, 150, 200, 250, 300, 350, 400, 450, 500};
  int lookback = 50;
  int bandwidth_refresh = 250;
  std::optional<double> bandwidth;  // fixed h instead of periodic CV selection
  int origin_stride = 1;

  void validate(std::size_t n) const;
};

/// g forecasts for steps 1..max_h after the last in-sample point, given the
/// in-sample u^2 and g paths. Future u^2 are replaced by their g forecasts.
std::vector<double> forecast_g(const GarchParams& params, std::span<const double> u_sq,
                               std::span<const double> g, int max_h);

struct SgarchForecast {
  double tau_last = 0.0;   // frozen tau_hat at the origin
  std::vector<double> g;   // steps 1..max_h
  std::vector<double> y_sq;
  FitResult fit;
};

/// Fits S-GARCH on y (the in-sample data only) with bandwidth h and forecasts
/// y^2 for steps 1..max_h as tau_hat_T0 * g_{T0+j|T0}.
SgarchForecast forecast_sgarch(std::span<const double> y, GarchOrder order, double h, int max_h,
                               const FitOptions& options = {});

/// Same recursion with tau replaced by the in-sample mean of y^2.
SgarchForecast forecast_garch_vt(std::span<const double> y, GarchOrder order, int max_h,
                                 const FitOptions& options = {});

/// y^2 forecasts of a free-intercept ARCH fit for steps 1..max_h; `y` ends at the origin.
std::vector<double> forecast_arch(const ArchFit& fit, std::span<const double> y, int max_h);

/// Rolling-window ARCH forecaster with the trailing window chosen by recent
/// one-step QLIKE. Fits are cached by (window end, window length).
class LsArchForecaster {
 public:
  LsArchForecaster(int q, std::vector<int> window_grid, int lookback);

  struct Result {
    int window = 0;
    std::vector<double> y_sq;
    std::vector<double> window_qlike;  // aligned with the grid
  };

  /// `y` holds y_1..y_T0; nothing beyond the origin is read.
  Result forecast(std::span<const double> y, int max_h);

  std::size_t cache_size() const noexcept { return cache_.size(); }

 private:
  const ArchFit& fit_window(std::span<const double> y, std::size_t end, int window);

  int q_;
  std::vector<int> grid_;
  int lookback_;
  std::map<std::pair<std::size_t, int>, ArchFit> cache_;
};

/// log f + y^2 / f.
double qlike_loss(double forecast_y_sq, double y);

struct DmResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// Diebold-Mariano test on d_t = loss_a - loss_b with a rectangular HAC
/// variance of lag horizon - 1. Positive statistics favour model b.
DmResult dm_test(std::span<const double> loss_a, std::span<const double> loss_b, int horizon);

struct ModelColumn {
  ForecastModel model;
  std::string name;
  std::vector<std::vector<double>> forecasts;  // [horizon][origin], NaN where unavailable
  std::vector<std::vector<double>> losses;
  std::vector<double> qlike;        // per horizon
  std::vector<int> failures;        // per horizon
  std::vector<int> attempts;        // per horizon
  std::vector<bool> valid;          // failures <= 10% of attempts
};

struct QlikeReport {
  ForecastConfig config;
  std::vector<int> origins;           // T0 values
  std::vector<double> bandwidths;     // h used at each origin (S-GARCH family)
  std::vector<int> ls_windows;        // selected window at each origin (0 if not run)
  std::vector<ModelColumn> columns;
  std::vector<int> best;              // per horizon: column index with the smallest QLIKE, -1 if none
  std::vector<std::vector<std::optional<DmResult>>> dm;  // [column][horizon] against the best
};

QlikeReport qlike_report(const ReturnSeries& series, const ForecastConfig& config);

/// All model forecasts at a single origin T0 (no warm starts, no refresh
/// schedule). Entries are [model][horizon], NaN on failure.
std::vector<std::vector<double>> forecast_at_origin(const ReturnSeries& series, int origin,
                                                    const ForecastConfig& config);

}  // namespace sgarch
