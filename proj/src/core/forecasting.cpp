#include "core/forecasting.hpp"

#include "core/bandwidth.hpp"
#include "core/data_io.hpp"
#include "core/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sgarch {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct OriginState {
  std::optional<Vector> sgarch_theta;
  std::optional<Vector> sarch_theta;
  std::optional<Vector> vt_theta;
};

FitOptions warm_options(const std::optional<Vector>& previous) {
  FitOptions options;
  if (previous) {
    options.init = previous;
    options.multi_start = false;
  }
  return options;
}

template <typename F>
SgarchForecast fit_with_retry(F&& run, std::optional<Vector>* previous) {
  SgarchForecast f = run(warm_options(previous ? *previous : std::nullopt));
  if (!f.fit.converged && previous && *previous) f = run(FitOptions{});
  if (!f.fit.converged) fail(ErrorKind::not_converged, "forecast fit did not converge");
  if (previous) *previous = f.fit.params.theta();
  return f;
}

// y^2 forecasts of every model at one origin; rows are models, columns steps 1..max_h.
std::vector<std::vector<double>> forecast_models(std::span<const double> y, const ForecastConfig& cfg,
                                                 std::optional<double> h, int max_h,
                                                 OriginState* state, LsArchForecaster* ls,
                                                 int* ls_window) {
  std::vector<std::vector<double>> out;
  for (ForecastModel model : cfg.models) {
    std::vector<double> row(static_cast<std::size_t>(max_h), kNaN);
    try {
      switch (model) {
        case ForecastModel::sgarch:
        case ForecastModel::sarch: {
          if (!h) fail(ErrorKind::numerical, "no bandwidth available");
          const bool is_sgarch = model == ForecastModel::sgarch;
          const GarchOrder order = is_sgarch ? cfg.garch_order : GarchOrder{0, cfg.q_arch};
          auto* prev = state ? (is_sgarch ? &state->sgarch_theta : &state->sarch_theta) : nullptr;
          row = fit_with_retry(
                    [&](const FitOptions& o) { return forecast_sgarch(y, order, *h, max_h, o); }, prev)
                    .y_sq;
          break;
        }
        case ForecastModel::garch_vt: {
          auto* prev = state ? &state->vt_theta : nullptr;
          row = fit_with_retry(
                    [&](const FitOptions& o) {
                      return forecast_garch_vt(y, cfg.garch_order, max_h, o);
                    },
                    prev)
                    .y_sq;
          break;
        }
        case ForecastModel::ls_arch: {
          LsArchForecaster local(cfg.q_arch, cfg.window_grid, cfg.lookback);
          auto result = (ls ? *ls : local).forecast(y, max_h);
          if (ls_window) *ls_window = result.window;
          row = std::move(result.y_sq);
          break;
        }
      }
    } catch (const Error&) {
      std::fill(row.begin(), row.end(), kNaN);
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::optional<double> select_h(std::span<const double> y, const ForecastConfig& cfg) {
  if (cfg.bandwidth) return cfg.bandwidth;
  try {
    ReturnSeries prefix{{y.begin(), y.end()}, ""};
    CVConfig cv;
    cv.pilot_order = cfg.garch_order;
    return select_bandwidth_cv(prefix, cv).h_cv;
  } catch (const Error&) {
    return std::nullopt;
  }
}

bool needs_kernel(const ForecastConfig& cfg) {
  return std::any_of(cfg.models.begin(), cfg.models.end(), [](ForecastModel m) {
    return m == ForecastModel::sgarch || m == ForecastModel::sarch;
  });
}

}  // namespace

std::string_view to_string(ForecastModel model) {
  switch (model) {
    case ForecastModel::sgarch: return "sgarch";
    case ForecastModel::sarch: return "sarch";
    case ForecastModel::garch_vt: return "garch_vt";
    case ForecastModel::ls_arch: return "ls_arch";
  }
  return "?";
}

ForecastModel parse_forecast_model(std::string_view text) {
  for (ForecastModel m :
       {ForecastModel::sgarch, ForecastModel::sarch, ForecastModel::garch_vt, ForecastModel::ls_arch})
    if (text == to_string(m)) return m;
  fail(ErrorKind::invalid_argument,
       "unknown model '" + std::string(text) + "' (sgarch, sarch, garch_vt, ls_arch)");
}

void ForecastConfig::validate(std::size_t n) const {
  if (horizons.empty()) fail(ErrorKind::invalid_argument, "no forecast horizons given");
  for (int h : horizons)
    if (h < 1) fail(ErrorKind::invalid_argument, "forecast horizons must be positive");
  if (models.empty()) fail(ErrorKind::invalid_argument, "no forecast models given");
  garch_order.validate();
  if (q_arch < 1) fail(ErrorKind::invalid_argument, "ARCH order must be at least 1");
  if (origin_start < static_cast<int>(kMinEstimationLength))
    fail(ErrorKind::invalid_argument, "origin_start must leave at least 50 in-sample points");
  const int max_h = *std::max_element(horizons.begin(), horizons.end());
  if (static_cast<std::size_t>(origin_start) + static_cast<std::size_t>(max_h) > n)
    fail(ErrorKind::invalid_argument, "origin_start + horizon exceeds the series length");
  if (origin_stride < 1 || bandwidth_refresh < 1)
    fail(ErrorKind::invalid_argument, "origin stride and bandwidth refresh must be positive");
  if (std::find(models.begin(), models.end(), ForecastModel::ls_arch) != models.end()) {
    if (window_grid.empty() || lookback < 1)
      fail(ErrorKind::invalid_argument, "LS-ARCH needs a window grid and a positive lookback");
    for (int w : window_grid)
      if (w <= q_arch + 1) fail(ErrorKind::invalid_argument, "LS-ARCH window too short");
    const int widest = *std::max_element(window_grid.begin(), window_grid.end());
    if (widest + lookback > origin_start)
      fail(ErrorKind::invalid_argument, "window grid plus lookback exceeds origin_start");
  }
  if (bandwidth) KernelSpec{KernelKind::epanechnikov, *bandwidth}.validate();
}

std::vector<double> forecast_g(const GarchParams& params, std::span<const double> u_sq,
                               std::span<const double> g, int max_h) {
  if (u_sq.size() != g.size()) fail(ErrorKind::invalid_argument, "u^2 and g lengths differ");
  if (max_h < 1) fail(ErrorKind::invalid_argument, "horizon must be positive");
  const auto n = static_cast<std::ptrdiff_t>(g.size());
  const int p = params.order().p;
  const int q = params.order().q;
  std::vector<double> out(static_cast<std::size_t>(max_h));
  const auto past_u = [&](std::ptrdiff_t s) {
    if (s >= n) return out[static_cast<std::size_t>(s - n)];
    return s >= 0 ? u_sq[static_cast<std::size_t>(s)] : 1.0;
  };
  const auto past_g = [&](std::ptrdiff_t s) {
    if (s >= n) return out[static_cast<std::size_t>(s - n)];
    return s >= 0 ? g[static_cast<std::size_t>(s)] : 1.0;
  };
  for (int j = 1; j <= max_h; ++j) {
    const std::ptrdiff_t s = n - 1 + j;
    double v = params.omega();
    for (int i = 1; i <= q; ++i) v += params.alpha(i - 1) * past_u(s - i);
    for (int l = 1; l <= p; ++l) v += params.beta(l - 1) * past_g(s - l);
    out[static_cast<std::size_t>(j - 1)] = v;
  }
  return out;
}

SgarchForecast forecast_sgarch(std::span<const double> y, GarchOrder order, double h, int max_h,
                               const FitOptions& options) {
  ReturnSeries prefix{{y.begin(), y.end()}, ""};
  require_estimable(prefix);
  const auto longrun =
      estimate_tau(prefix.values, KernelSpec{KernelKind::epanechnikov, h}, Boundary::reflection);
  SgarchForecast out;
  out.fit = fit_qmle(prefix, longrun, order, options);
  const auto u_sq = devolatilized_squares(prefix.values, longrun.tau_hat);
  out.tau_last = longrun.tau_hat.back();
  out.g = forecast_g(out.fit.params, u_sq, out.fit.filtered.g_hat, max_h);
  out.y_sq.resize(out.g.size());
  for (std::size_t j = 0; j < out.g.size(); ++j) out.y_sq[j] = out.tau_last * out.g[j];
  return out;
}

SgarchForecast forecast_garch_vt(std::span<const double> y, GarchOrder order, int max_h,
                                 const FitOptions& options) {
  ReturnSeries prefix{{y.begin(), y.end()}, ""};
  require_estimable(prefix);
  double acc = 0.0;
  for (double v : y) acc += v * v;
  const double tau_bar = acc / static_cast<double>(y.size());
  if (!(tau_bar > 0.0)) fail(ErrorKind::data, "in-sample data identically zero");
  LongRunFit longrun;
  longrun.tau_hat.assign(y.size(), tau_bar);
  SgarchForecast out;
  out.fit = fit_qmle(prefix, longrun, order, options);
  const auto u_sq = devolatilized_squares(prefix.values, longrun.tau_hat);
  out.tau_last = tau_bar;
  out.g = forecast_g(out.fit.params, u_sq, out.fit.filtered.g_hat, max_h);
  out.y_sq.resize(out.g.size());
  for (std::size_t j = 0; j < out.g.size(); ++j) out.y_sq[j] = tau_bar * out.g[j];
  return out;
}

std::vector<double> forecast_arch(const ArchFit& fit, std::span<const double> y, int max_h) {
  const auto q = static_cast<std::ptrdiff_t>(fit.alpha.size());
  const auto n = static_cast<std::ptrdiff_t>(y.size());
  if (n < q) fail(ErrorKind::invalid_argument, "not enough data for the ARCH forecast");
  std::vector<double> out(static_cast<std::size_t>(max_h));
  for (int j = 1; j <= max_h; ++j) {
    const std::ptrdiff_t s = n - 1 + j;
    double v = fit.intercept;
    for (std::ptrdiff_t i = 1; i <= q; ++i) {
      const std::ptrdiff_t src = s - i;
      const double y_sq = src >= n ? out[static_cast<std::size_t>(src - n)]
                                   : y[static_cast<std::size_t>(src)] * y[static_cast<std::size_t>(src)];
      v += fit.alpha(i - 1) * y_sq;
    }
    out[static_cast<std::size_t>(j - 1)] = v;
  }
  return out;
}

LsArchForecaster::LsArchForecaster(int q, std::vector<int> window_grid, int lookback)
    : q_(q), grid_(std::move(window_grid)), lookback_(lookback) {
  if (q_ < 1) fail(ErrorKind::invalid_argument, "ARCH order must be at least 1");
  if (grid_.empty() || lookback_ < 1)
    fail(ErrorKind::invalid_argument, "LS-ARCH needs a window grid and a positive lookback");
  std::sort(grid_.begin(), grid_.end());
  grid_.erase(std::unique(grid_.begin(), grid_.end()), grid_.end());
  if (grid_.front() <= q_ + 1) fail(ErrorKind::invalid_argument, "LS-ARCH window too short");
}

const ArchFit& LsArchForecaster::fit_window(std::span<const double> y, std::size_t end, int window) {
  const auto key = std::make_pair(end, window);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  const ArchFit* warm = nullptr;
  if (auto it = cache_.find({end - 1, window}); it != cache_.end()) warm = &it->second;
  auto fit = fit_free_arch(y.subspan(end - static_cast<std::size_t>(window), static_cast<std::size_t>(window)),
                           q_, warm);
  return cache_.emplace(key, std::move(fit)).first->second;
}

LsArchForecaster::Result LsArchForecaster::forecast(std::span<const double> y, int max_h) {
  const std::size_t origin = y.size();
  if (static_cast<std::size_t>(grid_.back() + lookback_) > origin)
    fail(ErrorKind::invalid_argument, "insufficient history for LS-ARCH window selection");

  Result result;
  double best = std::numeric_limits<double>::infinity();
  for (int w : grid_) {
    double loss = 0.0;
    for (std::size_t t = origin - static_cast<std::size_t>(lookback_); t < origin; ++t) {
      const auto& fit = fit_window(y, t, w);
      const auto f = forecast_arch(fit, y.subspan(t - static_cast<std::size_t>(w), static_cast<std::size_t>(w)), 1);
      loss += qlike_loss(f[0], y[t]);
    }
    loss /= lookback_;
    result.window_qlike.push_back(loss);
    if (loss < best) {
      best = loss;
      result.window = w;
    }
  }
  if (result.window == 0) fail(ErrorKind::numerical, "LS-ARCH window selection failed");
  const auto w = static_cast<std::size_t>(result.window);
  result.y_sq = forecast_arch(fit_window(y, origin, result.window), y.subspan(origin - w, w), max_h);

  const std::size_t keep_from = origin >= static_cast<std::size_t>(lookback_) ? origin - lookback_ : 0;
  std::erase_if(cache_, [&](const auto& entry) { return entry.first.first < keep_from; });
  return result;
}

double qlike_loss(double forecast_y_sq, double y) {
  if (!(forecast_y_sq > 0.0) || !std::isfinite(forecast_y_sq))
    return std::numeric_limits<double>::infinity();
  return std::log(forecast_y_sq) + y * y / forecast_y_sq;
}

DmResult dm_test(std::span<const double> loss_a, std::span<const double> loss_b, int horizon) {
  if (loss_a.size() != loss_b.size())
    fail(ErrorKind::invalid_argument, "loss series lengths differ");
  if (horizon < 1) fail(ErrorKind::invalid_argument, "horizon must be positive");
  const std::size_t n = loss_a.size();
  if (n < 2) fail(ErrorKind::invalid_argument, "DM test needs at least two losses");
  std::vector<double> d(n);
  for (std::size_t t = 0; t < n; ++t) d[t] = loss_a[t] - loss_b[t];
  const double dbar = mean(d);
  const auto autocov = [&](std::size_t k) {
    double acc = 0.0;
    for (std::size_t t = k; t < n; ++t) acc += (d[t] - dbar) * (d[t - k] - dbar);
    return acc / static_cast<double>(n);
  };
  const double gamma0 = autocov(0);
  double v = gamma0;
  for (std::size_t k = 1; k < static_cast<std::size_t>(horizon) && k < n; ++k) v += 2.0 * autocov(k);
  if (!(v > 0.0)) v = gamma0;

  DmResult out;
  out.n = n;
  if (!(v > 0.0)) {
    out.statistic = dbar == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), dbar);
    out.p_value = dbar == 0.0 ? 1.0 : 0.0;
    return out;
  }
  out.statistic = dbar / std::sqrt(v / static_cast<double>(n));
  out.p_value = normal_two_sided_p(out.statistic);
  return out;
}

std::vector<std::vector<double>> forecast_at_origin(const ReturnSeries& series, int origin,
                                                    const ForecastConfig& config) {
  if (origin < static_cast<int>(kMinEstimationLength) || static_cast<std::size_t>(origin) > series.size())
    fail(ErrorKind::invalid_argument, "origin outside the series");
  const auto y = std::span<const double>(series.values).first(static_cast<std::size_t>(origin));
  const int max_h = *std::max_element(config.horizons.begin(), config.horizons.end());
  const auto h = needs_kernel(config) ? select_h(y, config) : std::nullopt;
  return forecast_models(y, config, h, max_h, nullptr, nullptr, nullptr);
}

QlikeReport qlike_report(const ReturnSeries& series, const ForecastConfig& config) {
  config.validate(series.size());
  const std::size_t n = series.size();
  const auto& horizons = config.horizons;
  const int min_h = *std::min_element(horizons.begin(), horizons.end());
  const int max_h = *std::max_element(horizons.begin(), horizons.end());

  QlikeReport report;
  report.config = config;
  for (int t0 = config.origin_start; static_cast<std::size_t>(t0 + min_h) <= n; t0 += config.origin_stride)
    report.origins.push_back(t0);

  const std::size_t n_h = horizons.size();
  const std::size_t n_o = report.origins.size();
  for (ForecastModel m : config.models) {
    ModelColumn col;
    col.model = m;
    col.name = std::string(to_string(m));
    col.forecasts.assign(n_h, std::vector<double>(n_o, kNaN));
    col.losses.assign(n_h, std::vector<double>(n_o, kNaN));
    col.qlike.assign(n_h, kNaN);
    col.failures.assign(n_h, 0);
    col.attempts.assign(n_h, 0);
    col.valid.assign(n_h, false);
    report.columns.push_back(std::move(col));
  }

  OriginState state;
  const bool has_ls =
      std::find(config.models.begin(), config.models.end(), ForecastModel::ls_arch) != config.models.end();
  std::optional<LsArchForecaster> ls;
  if (has_ls) ls.emplace(config.q_arch, config.window_grid, config.lookback);
  const bool kernel = needs_kernel(config);
  std::optional<double> h;
  int last_refresh = 0;

  for (std::size_t oi = 0; oi < n_o; ++oi) {
    const int t0 = report.origins[oi];
    const auto y = std::span<const double>(series.values).first(static_cast<std::size_t>(t0));
    if (kernel && (oi == 0 || t0 - last_refresh >= config.bandwidth_refresh || !h)) {
      if (auto selected = select_h(y, config)) h = selected;
      last_refresh = t0;
    }
    report.bandwidths.push_back(kernel && h ? *h : kNaN);
    int window = 0;
    const auto rows = forecast_models(y, config, h, max_h, &state, ls ? &*ls : nullptr, &window);
    report.ls_windows.push_back(window);
    for (std::size_t mi = 0; mi < rows.size(); ++mi) {
      auto& col = report.columns[mi];
      for (std::size_t hi = 0; hi < n_h; ++hi) {
        const int step = horizons[hi];
        const auto target = static_cast<std::size_t>(t0 + step);
        if (target > n) continue;
        ++col.attempts[hi];
        const double f = rows[mi][static_cast<std::size_t>(step - 1)];
        col.forecasts[hi][oi] = f;
        const double loss = qlike_loss(f, series.values[target - 1]);
        if (std::isfinite(loss)) {
          col.losses[hi][oi] = loss;
        } else {
          ++col.failures[hi];
        }
      }
    }
  }

  report.best.assign(n_h, -1);
  for (std::size_t hi = 0; hi < n_h; ++hi) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t mi = 0; mi < report.columns.size(); ++mi) {
      auto& col = report.columns[mi];
      double acc = 0.0;
      int used = 0;
      for (double l : col.losses[hi])
        if (std::isfinite(l)) {
          acc += l;
          ++used;
        }
      col.qlike[hi] = used > 0 ? acc / used : kNaN;
      col.valid[hi] = used > 0 && col.failures[hi] * 10 <= col.attempts[hi];
      if (col.valid[hi] && col.qlike[hi] < best) {
        best = col.qlike[hi];
        report.best[hi] = static_cast<int>(mi);
      }
    }
  }

  report.dm.assign(report.columns.size(), std::vector<std::optional<DmResult>>(n_h));
  for (std::size_t hi = 0; hi < n_h; ++hi) {
    if (report.best[hi] < 0) continue;
    const auto& best = report.columns[static_cast<std::size_t>(report.best[hi])];
    for (std::size_t mi = 0; mi < report.columns.size(); ++mi) {
      if (static_cast<int>(mi) == report.best[hi] || !report.columns[mi].valid[hi]) continue;
      std::vector<double> a;
      std::vector<double> b;
      for (std::size_t oi = 0; oi < n_o; ++oi) {
        const double la = best.losses[hi][oi];
        const double lb = report.columns[mi].losses[hi][oi];
        if (std::isfinite(la) && std::isfinite(lb)) {
          a.push_back(la);
          b.push_back(lb);
        }
      }
      if (a.size() >= 2) report.dm[mi][hi] = dm_test(a, b, horizons[hi]);
    }
  }
  return report;
}

}  // namespace sgarch
