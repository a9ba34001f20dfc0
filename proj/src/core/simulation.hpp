#pragma once

#include "core/bandwidth.hpp"
#include "core/qmle.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>

namespace sgarch {

enum class Dgp { dgp1_sarch2, dgp2_sgarch11, dgp3_sgarch12, dgp4_sgarch21 };
enum class TauShape { constant, linear, cyclical };
enum class Innovation { normal, st10, st5 };

std::string_view to_string(Dgp dgp);
std::string_view to_string(TauShape shape);
std::string_view to_string(Innovation law);
Dgp parse_dgp(std::string_view text);
TauShape parse_tau_shape(std::string_view text);
Innovation parse_innovation(std::string_view text);

struct SimSpec {
  Dgp dgp = Dgp::dgp2_sgarch11;
  int k = 0;  // deviation index for DGPs 3 and 4
  TauShape tau = TauShape::constant;
  Innovation innovation = Innovation::normal;
  int T = 2000;
  int n_reps = 1;
  std::uint64_t seed = 0;
  int burn_in = 500;

  void validate() const;
};

GarchOrder dgp_order(Dgp dgp);
/// True theta in (alpha_1..alpha_q, beta_1..beta_p) order.
Vector dgp_theta(Dgp dgp, int k);
/// Index of the coefficient that is zero when k = 0 (DGPs 3 and 4 only).
int dgp_extra_index(Dgp dgp);

double tau_function(TauShape shape, double x);

/// Unit-variance innovation draw: N(0,1) or Student-t scaled by sqrt((nu-2)/nu).
double draw_innovation(Innovation law, std::mt19937_64& rng);

/// Independent generator for replication `rep` of stream `seed`.
std::mt19937_64 replication_rng(std::uint64_t seed, std::uint64_t rep);

struct SimPath {
  ReturnSeries series;
  std::vector<double> tau;
  std::vector<double> g;
  std::vector<double> eta;
};

SimPath simulate_path(const SimSpec& spec, int rep_index);
ReturnSeries simulate(const SimSpec& spec, int rep_index);

/// Worker count from SGARCH_THREADS, else the hardware concurrency.
unsigned default_thread_count();

/// Runs body(0..n-1) on up to `threads` workers. The body must not throw.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

struct EstimationOptions {
  std::optional<double> bandwidth;  // fixed h; CV selection when empty
  bool run_vt = false;
  bool run_three_step = false;
  unsigned threads = 0;  // 0 = default_thread_count()
};

struct RepRecord {
  int rep = 0;
  bool ok = false;  // QMLE converged and covariance available
  std::string error;
  double h = 0.0;
  Vector theta_hat;
  Vector se_hat;
  bool vt_ok = false;
  Vector theta_vt;
  bool three_ok = false;
  Vector theta_check;
};

struct ParamSummary {
  std::string name;
  double truth = 0.0;
  double bias = 0.0;
  double esd = 0.0;
  double asd = 0.0;  // NaN where no standard error is produced
};

struct EstimatorSummary {
  std::string estimator;
  int n_used = 0;
  int n_excluded = 0;
  std::vector<ParamSummary> params;
};

struct EstimationCell {
  SimSpec spec;
  std::vector<RepRecord> records;
  std::vector<EstimatorSummary> summaries;  // qmle first, then vt / three_step when run
};

/// Full pipeline per replication: CV bandwidth with the DGP's own model as
/// pilot, reflection kernel estimate, QMLE and plug-in covariance.
EstimationCell run_estimation_cell(const SimSpec& spec, const EstimationOptions& options = {});

/// Bias, ESD and mean ASD over the records accepted by `ok`.
EstimatorSummary summarize(std::string estimator, const std::vector<RepRecord>& records,
                           const Vector& truth, const std::vector<std::string>& names,
                           const std::function<const Vector*(const RepRecord&)>& estimate,
                           const std::function<const Vector*(const RepRecord&)>& se);

std::vector<std::string> parameter_names(GarchOrder order);

struct PowerOptions {
  std::vector<int> lags{6, 9, 12};
  std::vector<double> levels{0.01, 0.05, 0.10};
  std::optional<double> bandwidth;
  unsigned threads = 0;
};

struct PowerRecord {
  int rep = 0;
  bool ok = false;
  std::string error;
  double lm_p = 1.0;
  std::vector<double> q_p;  // one per lag
};

struct PowerRow {
  int k = 0;
  int n_used = 0;
  int n_excluded = 0;
  std::vector<double> lm_reject;               // per level
  std::vector<std::vector<double>> q_reject;   // [lag][level]
  std::vector<PowerRecord> records;
};

struct PowerReport {
  Dgp dgp = Dgp::dgp3_sgarch12;
  SimSpec base;
  PowerOptions options;
  std::vector<PowerRow> rows;
};

/// Null S-GARCH(1,1) against the DGP's larger model: LM on the extra
/// coefficient and Q(ell) on the null fit, rejection frequencies per k.
PowerReport run_power_curves(const SimSpec& base, const std::vector<int>& k_set,
                             const PowerOptions& options = {});

void write_table_csv(const EstimationCell& cell, std::ostream& out);
void write_power_csv(const PowerReport& report, std::ostream& out);

}  // namespace sgarch
