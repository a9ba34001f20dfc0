#include "sgarch/sgarch.h"

#include "core/alt_estimators.hpp"
#include "core/bandwidth.hpp"
#include "core/data_io.hpp"
#include "core/forecasting.hpp"
#include "core/inference.hpp"
#include "core/log.hpp"
#include "core/serialize.hpp"
#include "core/simulation.hpp"

#include <cstdlib>
#include <cstring>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

using namespace sgarch;

struct sgarch_series {
  ReturnSeries series;
};

struct sgarch_bandwidth {
  BandwidthSelection selection;
};

struct sgarch_fit {
  FitResult fit;
  std::optional<AsymptoticCov> cov;
};

namespace {

thread_local std::string g_last_error;

sgarch_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return SGARCH_E_INVALID_ARGUMENT;
    case ErrorKind::io: return SGARCH_E_IO;
    case ErrorKind::data: return SGARCH_E_DATA;
    case ErrorKind::numerical: return SGARCH_E_NUMERICAL;
    case ErrorKind::not_converged: return SGARCH_E_NOT_CONVERGED;
  }
  return SGARCH_E_INTERNAL;
}

template <typename F>
sgarch_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return SGARCH_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SGARCH_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SGARCH_E_INTERNAL;
  }
}

void require(bool condition, const char* message) {
  if (!condition) fail(ErrorKind::invalid_argument, message);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(char** out, const Json& json) {
  if (out) *out = dup_string(json.dump(2) + "\n");
}

void emit(char** out, const std::string& text) {
  if (out) *out = dup_string(text);
}

GarchOrder order_of(const sgarch_fit_options& o) { return GarchOrder{o.p, o.q}; }

LongRunFit long_run(const ReturnSeries& series, const sgarch_fit_options& o) {
  double h = o.bandwidth;
  if (!(h > 0.0)) {
    CVConfig cfg;
    cfg.pilot_order = GarchOrder{o.pilot_p, o.pilot_q};
    h = select_bandwidth_cv(series, cfg).h_cv;
  }
  const auto boundary = o.boundary == SGARCH_BOUNDARY_INTERIOR ? Boundary::interior_only : Boundary::reflection;
  return estimate_tau(series.values, KernelSpec{KernelKind::epanechnikov, h}, boundary);
}

std::optional<AsymptoticCov> try_covariance(const FilteredSeries& filtered) {
  try {
    return estimate_covariance(filtered);
  } catch (const Error& e) {
    log_warn(std::string("standard errors unavailable: ") + e.what());
    return std::nullopt;
  }
}

SimSpec sim_spec_of(const sgarch_sim_spec& s) {
  require(s.dgp && s.tau && s.dist, "simulation spec needs dgp, tau and dist");
  SimSpec spec;
  spec.dgp = parse_dgp(s.dgp);
  spec.k = s.k;
  spec.tau = parse_tau_shape(s.tau);
  spec.innovation = parse_innovation(s.dist);
  spec.T = s.T;
  spec.n_reps = s.reps;
  spec.seed = s.seed;
  spec.validate();
  return spec;
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

extern "C" {

const char* sgarch_last_error(void) { return g_last_error.c_str(); }

const char* sgarch_status_name(sgarch_status status) {
  switch (status) {
    case SGARCH_OK: return "ok";
    case SGARCH_E_INVALID_ARGUMENT: return "invalid argument";
    case SGARCH_E_IO: return "i/o error";
    case SGARCH_E_DATA: return "data error";
    case SGARCH_E_NUMERICAL: return "numerical error";
    case SGARCH_E_NOT_CONVERGED: return "not converged";
    case SGARCH_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* sgarch_version(void) { return "1.0.0"; }

void sgarch_set_log_level(int level) {
  set_log_level(level <= 0 ? LogLevel::quiet
                           : level == 1 ? LogLevel::warn : level == 2 ? LogLevel::info : LogLevel::debug);
}

void sgarch_string_free(char* s) { std::free(s); }

sgarch_status sgarch_series_load(const char* path, const char* column, int log_return_pct,
                                 sgarch_series** out) {
  return guarded([&] {
    require(path && out, "path and out must not be NULL");
    auto handle = std::make_unique<sgarch_series>();
    handle->series = load_series(path, column ? column : "0",
                                 log_return_pct ? Transform::log_return_pct : Transform::none);
    *out = handle.release();
  });
}

sgarch_status sgarch_series_from_array(const double* values, size_t n, const char* label,
                                       sgarch_series** out) {
  return guarded([&] {
    require(out && (values || n == 0), "values and out must not be NULL");
    auto handle = std::make_unique<sgarch_series>();
    handle->series.values.assign(values, values + n);
    handle->series.label = label ? label : "";
    for (std::size_t i = 0; i < n; ++i)
      if (!std::isfinite(values[i]))
        fail(ErrorKind::data, "non-finite value at index " + std::to_string(i));
    *out = handle.release();
  });
}

void sgarch_series_free(sgarch_series* series) { delete series; }

size_t sgarch_series_length(const sgarch_series* series) { return series ? series->series.size() : 0; }

sgarch_status sgarch_series_values(const sgarch_series* series, double* out, size_t n) {
  return guarded([&] {
    require(series && (out || n == 0), "series and out must not be NULL");
    const auto m = std::min(n, series->series.size());
    std::copy_n(series->series.values.begin(), m, out);
  });
}

sgarch_status sgarch_series_variance(const sgarch_series* series, double* out) {
  return guarded([&] {
    require(series && out, "series and out must not be NULL");
    *out = sample_variance(series->series.values);
  });
}

sgarch_status sgarch_series_to_csv(const sgarch_series* series, char** out) {
  return guarded([&] {
    require(series && out, "series and out must not be NULL");
    std::ostringstream os;
    write_series_csv(series->series, os);
    emit(out, os.str());
  });
}

sgarch_status sgarch_series_to_json(const sgarch_series* series, char** out) {
  return guarded([&] {
    require(series && out, "series and out must not be NULL");
    emit(out, series_json(series->series));
  });
}

void sgarch_fit_options_init(sgarch_fit_options* options) {
  if (!options) return;
  options->p = 1;
  options->q = 1;
  options->bandwidth = 0.0;
  options->boundary = SGARCH_BOUNDARY_REFLECTION;
  options->pilot_p = 1;
  options->pilot_q = 1;
}

sgarch_status sgarch_bandwidth_select(const sgarch_series* series, int pilot_p, int pilot_q,
                                      sgarch_bandwidth** out) {
  return guarded([&] {
    require(series && out, "series and out must not be NULL");
    CVConfig cfg;
    cfg.pilot_order = GarchOrder{pilot_p, pilot_q};
    auto handle = std::make_unique<sgarch_bandwidth>();
    handle->selection = select_bandwidth_cv(series->series, cfg);
    *out = handle.release();
  });
}

void sgarch_bandwidth_free(sgarch_bandwidth* selection) { delete selection; }

double sgarch_bandwidth_h(const sgarch_bandwidth* selection) {
  return selection ? selection->selection.h_cv : std::numeric_limits<double>::quiet_NaN();
}

sgarch_status sgarch_bandwidth_to_json(const sgarch_bandwidth* selection, char** out) {
  return guarded([&] {
    require(selection && out, "selection and out must not be NULL");
    emit(out, bandwidth_json(selection->selection));
  });
}

sgarch_status sgarch_bandwidth_curve_csv(const sgarch_bandwidth* selection, char** out) {
  return guarded([&] {
    require(selection && out, "selection and out must not be NULL");
    std::ostringstream os;
    write_curve_csv(selection->selection, os);
    emit(out, os.str());
  });
}

sgarch_status sgarch_fit_qmle(const sgarch_series* series, const sgarch_fit_options* options,
                              sgarch_fit** out) {
  return guarded([&] {
    require(series && options && out, "series, options and out must not be NULL");
    auto handle = std::make_unique<sgarch_fit>();
    const auto longrun = long_run(series->series, *options);
    handle->fit = fit_qmle(series->series, longrun, order_of(*options));
    if (!handle->fit.converged) log_warn("QMLE did not converge; reporting the best iterate");
    handle->cov = try_covariance(handle->fit.filtered);
    *out = handle.release();
  });
}

void sgarch_fit_free(sgarch_fit* fit) { delete fit; }

int sgarch_fit_converged(const sgarch_fit* fit) { return fit && fit->fit.converged ? 1 : 0; }

size_t sgarch_fit_num_params(const sgarch_fit* fit) {
  return fit ? static_cast<size_t>(fit->fit.params.theta().size()) : 0;
}

sgarch_status sgarch_fit_theta(const sgarch_fit* fit, double* out, size_t n) {
  return guarded([&] {
    require(fit && out, "fit and out must not be NULL");
    const auto& theta = fit->fit.params.theta();
    require(n >= static_cast<size_t>(theta.size()), "output buffer too small");
    std::copy(theta.data(), theta.data() + theta.size(), out);
  });
}

sgarch_status sgarch_fit_se(const sgarch_fit* fit, double* out, size_t n) {
  return guarded([&] {
    require(fit && out, "fit and out must not be NULL");
    if (!fit->cov) fail(ErrorKind::numerical, "standard errors unavailable (singular J1)");
    const auto& se = fit->cov->se;
    require(n >= static_cast<size_t>(se.size()), "output buffer too small");
    std::copy(se.data(), se.data() + se.size(), out);
  });
}

double sgarch_fit_omega(const sgarch_fit* fit) {
  return fit ? fit->fit.params.omega() : std::numeric_limits<double>::quiet_NaN();
}

double sgarch_fit_loglik(const sgarch_fit* fit) {
  return fit ? fit->fit.loglik : std::numeric_limits<double>::quiet_NaN();
}

double sgarch_fit_bandwidth(const sgarch_fit* fit) {
  return fit ? fit->fit.longrun.h_used : std::numeric_limits<double>::quiet_NaN();
}

sgarch_status sgarch_fit_to_json(const sgarch_fit* fit, char** out) {
  return guarded([&] {
    require(fit && out, "fit and out must not be NULL");
    AsymptoticCov empty;
    const auto n = fit->fit.params.theta().size();
    empty.se = Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());
    empty.sigma_hat = Matrix::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
    empty.kappa_hat = std::numeric_limits<double>::quiet_NaN();
    emit(out, fit_json(fit->fit, fit->cov ? *fit->cov : empty));
  });
}

sgarch_status sgarch_lm_test(const sgarch_series* series, const sgarch_fit_options* options,
                             const double* R, size_t d, const double* r, double* statistic,
                             double* p_value, char** json) {
  return guarded([&] {
    require(series && options && R && r, "series, options, R and r must not be NULL");
    const GarchOrder order = order_of(*options);
    order.validate();
    const auto n = static_cast<Eigen::Index>(order.num_params());
    require(d >= 1, "constraint needs at least one row");
    Matrix Rm(static_cast<Eigen::Index>(d), n);
    for (Eigen::Index i = 0; i < Rm.rows(); ++i)
      for (Eigen::Index j = 0; j < n; ++j) Rm(i, j) = R[i * n + j];
    Vector rv(static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < rv.size(); ++i) rv(i) = r[i];
    const LinearConstraint constraint(Rm, rv);
    const auto longrun = long_run(series->series, *options);
    const auto lm = lm_test(series->series, longrun, order, constraint);
    if (statistic) *statistic = lm.report.statistic;
    if (p_value) *p_value = lm.report.p_value;
    emit(json, lm_json(lm, constraint));
  });
}

sgarch_status sgarch_portmanteau(const sgarch_fit* fit, const int* lags, size_t n_lags,
                                 double* statistics, double* p_values, char** json) {
  return guarded([&] {
    require(fit && lags && n_lags > 0, "fit and lags must not be NULL");
    std::vector<std::pair<int, TestReport>> reports;
    for (size_t i = 0; i < n_lags; ++i) {
      const auto report = portmanteau_test(fit->fit, lags[i]).first;
      if (statistics) statistics[i] = report.statistic;
      if (p_values) p_values[i] = report.p_value;
      reports.emplace_back(lags[i], report);
    }
    if (json) {
      Json out{{"order", {{"p", fit->fit.params.order().p}, {"q", fit->fit.params.order().q}}},
               {"theta", vector_json(fit->fit.params.theta())},
               {"h_used", fit->fit.longrun.h_used},
               {"T", fit->fit.filtered.size()},
               {"tests", portmanteau_json(reports)}};
      emit(json, out);
    }
  });
}

sgarch_status sgarch_compare_estimators(const sgarch_series* series, const sgarch_fit_options* options,
                                        char** json) {
  return guarded([&] {
    require(series && options && json, "series, options and json must not be NULL");
    const GarchOrder order = order_of(*options);
    const auto longrun = long_run(series->series, *options);
    const auto fit = fit_qmle(series->series, longrun, order);
    if (!fit.converged) fail(ErrorKind::not_converged, "two-step QMLE did not converge");
    const auto cov = estimate_covariance(fit.filtered);
    Json out{{"order", {{"p", order.p}, {"q", order.q}}},
             {"parameter_names", parameter_names(order)},
             {"T", series->series.size()},
             {"h_used", longrun.h_used}};
    out["two_step"] = fit_json(fit, cov);
    try {
      out["variance_targeting"] = vt_json(fit_vt(series->series, order));
    } catch (const Error& e) {
      out["variance_targeting"] = Json{{"error", e.what()}};
    }
    try {
      const auto three = three_step_update(
          fit, series->series, KernelSpec{KernelKind::epanechnikov, longrun.h_used});
      const auto star = sigma_star_plugin(three, fit.filtered);
      out["three_step"] = three_step_json(three, star, series->series.size());
    } catch (const Error& e) {
      out["three_step"] = Json{{"error", e.what()}};
    }
    emit(json, out);
  });
}

void sgarch_sim_spec_init(sgarch_sim_spec* spec) {
  if (!spec) return;
  spec->dgp = "dgp2";
  spec->k = 0;
  spec->tau = "constant";
  spec->dist = "normal";
  spec->T = 2000;
  spec->reps = 1;
  spec->seed = 0;
  spec->threads = 0;
  spec->bandwidth = 0.0;
}

sgarch_status sgarch_simulate_series(const sgarch_sim_spec* spec, int rep, sgarch_series** out) {
  return guarded([&] {
    require(spec && out, "spec and out must not be NULL");
    auto handle = std::make_unique<sgarch_series>();
    handle->series = simulate(sim_spec_of(*spec), rep);
    *out = handle.release();
  });
}

sgarch_status sgarch_run_table(const sgarch_sim_spec* spec, int with_vt, int with_three_step,
                               char** json, char** csv) {
  return guarded([&] {
    require(spec, "spec must not be NULL");
    EstimationOptions options;
    if (spec->bandwidth > 0.0) options.bandwidth = spec->bandwidth;
    options.run_vt = with_vt != 0;
    options.run_three_step = with_three_step != 0;
    options.threads = spec->threads;
    const auto cell = run_estimation_cell(sim_spec_of(*spec), options);
    emit(json, estimation_cell_json(cell));
    if (csv) {
      std::ostringstream os;
      write_table_csv(cell, os);
      emit(csv, os.str());
    }
  });
}

sgarch_status sgarch_run_power(const sgarch_sim_spec* spec, const int* k_set, size_t n_k,
                               const int* lags, size_t n_lags, char** json, char** csv) {
  return guarded([&] {
    require(spec && k_set && n_k > 0, "spec and k_set must not be NULL");
    PowerOptions options;
    if (lags && n_lags > 0) options.lags.assign(lags, lags + n_lags);
    if (spec->bandwidth > 0.0) options.bandwidth = spec->bandwidth;
    options.threads = spec->threads;
    const auto report = run_power_curves(sim_spec_of(*spec), std::vector<int>(k_set, k_set + n_k), options);
    emit(json, power_json(report));
    if (csv) {
      std::ostringstream os;
      write_power_csv(report, os);
      emit(csv, os.str());
    }
  });
}

void sgarch_forecast_options_init(sgarch_forecast_options* options) {
  if (!options) return;
  static const int kHorizons[] = {1, 5, 10, 22};
  options->models = "sgarch,sarch,garch_vt,ls_arch";
  options->horizons = kHorizons;
  options->n_horizons = 4;
  options->origin_start = 1500;
  options->origin_stride = 1;
  options->p = 1;
  options->q = 1;
  options->q_arch = 1;
  options->bandwidth = 0.0;
  options->bandwidth_refresh = 250;
}

sgarch_status sgarch_forecast(const sgarch_series* series, const sgarch_forecast_options* options,
                              char** json, char** csv) {
  return guarded([&] {
    require(series && options, "series and options must not be NULL");
    ForecastConfig cfg;
    if (options->models) {
      cfg.models.clear();
      for (const auto& name : split_commas(options->models)) cfg.models.push_back(parse_forecast_model(name));
    }
    if (options->horizons && options->n_horizons > 0)
      cfg.horizons.assign(options->horizons, options->horizons + options->n_horizons);
    cfg.origin_start = options->origin_start;
    cfg.origin_stride = options->origin_stride;
    cfg.garch_order = GarchOrder{options->p, options->q};
    cfg.q_arch = options->q_arch;
    if (options->bandwidth > 0.0) cfg.bandwidth = options->bandwidth;
    cfg.bandwidth_refresh = options->bandwidth_refresh;
    const auto report = qlike_report(series->series, cfg);
    emit(json, qlike_json(report));
    if (csv) {
      std::ostringstream os;
      write_qlike_csv(report, os);
      emit(csv, os.str());
    }
  });
}

}  // extern "C"
