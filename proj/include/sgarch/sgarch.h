#ifndef SGARCH_SGARCH_H
#define SGARCH_SGARCH_H

#include <stddef.h>
#include <stdint.h>

#if defined(SGARCH_BUILDING_LIBRARY)
#define SGARCH_API __attribute__((visibility("default")))
#else
#define SGARCH_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sgarch_status {
  SGARCH_OK = 0,
  SGARCH_E_INVALID_ARGUMENT = 1,
  SGARCH_E_IO = 2,
  SGARCH_E_DATA = 3,
  SGARCH_E_NUMERICAL = 4,
  SGARCH_E_NOT_CONVERGED = 5,
  SGARCH_E_INTERNAL = 6
} sgarch_status;

/* Message of the last failing call on this thread; never NULL. */
SGARCH_API const char* sgarch_last_error(void);
SGARCH_API const char* sgarch_status_name(sgarch_status status);
SGARCH_API const char* sgarch_version(void);

/* 0 quiet, 1 warnings, 2 info, 3 debug. */
SGARCH_API void sgarch_set_log_level(int level);

/* Strings returned through char** out-parameters are owned by the caller. */
SGARCH_API void sgarch_string_free(char* s);

/* ---- series ---- */

typedef struct sgarch_series sgarch_series;

/* column: header name or 0-based index; log_return_pct != 0 converts prices
   to 100 * log differences. */
SGARCH_API sgarch_status sgarch_series_load(const char* path, const char* column, int log_return_pct,
                                            sgarch_series** out);
SGARCH_API sgarch_status sgarch_series_from_array(const double* values, size_t n, const char* label,
                                                  sgarch_series** out);
SGARCH_API void sgarch_series_free(sgarch_series* series);
SGARCH_API size_t sgarch_series_length(const sgarch_series* series);
/* Copies min(n, length) values. */
SGARCH_API sgarch_status sgarch_series_values(const sgarch_series* series, double* out, size_t n);
SGARCH_API sgarch_status sgarch_series_variance(const sgarch_series* series, double* out);
SGARCH_API sgarch_status sgarch_series_to_csv(const sgarch_series* series, char** out);
SGARCH_API sgarch_status sgarch_series_to_json(const sgarch_series* series, char** out);

/* ---- estimation options ---- */

typedef enum sgarch_boundary { SGARCH_BOUNDARY_REFLECTION = 0, SGARCH_BOUNDARY_INTERIOR = 1 } sgarch_boundary;

typedef struct sgarch_fit_options {
  int p;            /* GARCH lags */
  int q;            /* ARCH lags */
  double bandwidth; /* <= 0 selects h by cross-validation */
  sgarch_boundary boundary;
  int pilot_p;      /* pilot order for cross-validation */
  int pilot_q;
} sgarch_fit_options;

SGARCH_API void sgarch_fit_options_init(sgarch_fit_options* options);

/* ---- bandwidth ---- */

typedef struct sgarch_bandwidth sgarch_bandwidth;

SGARCH_API sgarch_status sgarch_bandwidth_select(const sgarch_series* series, int pilot_p, int pilot_q,
                                                 sgarch_bandwidth** out);
SGARCH_API void sgarch_bandwidth_free(sgarch_bandwidth* selection);
SGARCH_API double sgarch_bandwidth_h(const sgarch_bandwidth* selection);
SGARCH_API sgarch_status sgarch_bandwidth_to_json(const sgarch_bandwidth* selection, char** out);
SGARCH_API sgarch_status sgarch_bandwidth_curve_csv(const sgarch_bandwidth* selection, char** out);

/* ---- fit ---- */

typedef struct sgarch_fit sgarch_fit;

SGARCH_API sgarch_status sgarch_fit_qmle(const sgarch_series* series, const sgarch_fit_options* options,
                                         sgarch_fit** out);
SGARCH_API void sgarch_fit_free(sgarch_fit* fit);
SGARCH_API int sgarch_fit_converged(const sgarch_fit* fit);
SGARCH_API size_t sgarch_fit_num_params(const sgarch_fit* fit);
SGARCH_API sgarch_status sgarch_fit_theta(const sgarch_fit* fit, double* out, size_t n);
SGARCH_API sgarch_status sgarch_fit_se(const sgarch_fit* fit, double* out, size_t n);
SGARCH_API double sgarch_fit_omega(const sgarch_fit* fit);
SGARCH_API double sgarch_fit_loglik(const sgarch_fit* fit);
SGARCH_API double sgarch_fit_bandwidth(const sgarch_fit* fit);
SGARCH_API sgarch_status sgarch_fit_to_json(const sgarch_fit* fit, char** out);

/* ---- tests ---- */

/* R is d x (p+q) row-major. json may be NULL. */
SGARCH_API sgarch_status sgarch_lm_test(const sgarch_series* series, const sgarch_fit_options* options,
                                        const double* R, size_t d, const double* r, double* statistic,
                                        double* p_value, char** json);

/* Portmanteau tests on a fitted model, one entry per lag. */
SGARCH_API sgarch_status sgarch_portmanteau(const sgarch_fit* fit, const int* lags, size_t n_lags,
                                            double* statistics, double* p_values, char** json);

/* Two-step QMLE, variance targeting and the three-step update on one series. */
SGARCH_API sgarch_status sgarch_compare_estimators(const sgarch_series* series,
                                                   const sgarch_fit_options* options, char** json);

/* ---- simulation ---- */

typedef struct sgarch_sim_spec {
  const char* dgp;  /* dgp1 .. dgp4 */
  int k;
  const char* tau;  /* constant, linear, cyclical */
  const char* dist; /* normal, st10, st5 */
  int T;
  int reps;
  uint64_t seed;
  unsigned threads; /* 0: SGARCH_THREADS or hardware concurrency */
  double bandwidth; /* <= 0: cross-validation per replication */
} sgarch_sim_spec;

SGARCH_API void sgarch_sim_spec_init(sgarch_sim_spec* spec);

SGARCH_API sgarch_status sgarch_simulate_series(const sgarch_sim_spec* spec, int rep, sgarch_series** out);

/* Bias / ESD / ASD cell. json and csv may each be NULL. */
SGARCH_API sgarch_status sgarch_run_table(const sgarch_sim_spec* spec, int with_vt, int with_three_step,
                                          char** json, char** csv);

/* Rejection frequencies for each k in k_set (DGPs 3 and 4). */
SGARCH_API sgarch_status sgarch_run_power(const sgarch_sim_spec* spec, const int* k_set, size_t n_k,
                                          const int* lags, size_t n_lags, char** json, char** csv);

/* ---- forecasting ---- */

typedef struct sgarch_forecast_options {
  const char* models;   /* comma list of sgarch, sarch, garch_vt, ls_arch */
  const int* horizons;
  size_t n_horizons;
  int origin_start;
  int origin_stride;
  int p;
  int q;
  int q_arch;
  double bandwidth;     /* <= 0: cross-validation refreshed every bandwidth_refresh origins */
  int bandwidth_refresh;
} sgarch_forecast_options;

SGARCH_API void sgarch_forecast_options_init(sgarch_forecast_options* options);

SGARCH_API sgarch_status sgarch_forecast(const sgarch_series* series, const sgarch_forecast_options* options,
                                         char** json, char** csv);

#ifdef __cplusplus
}
#endif

#endif
