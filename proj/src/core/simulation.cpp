#include "core/simulation.hpp"

#include "core/alt_estimators.hpp"
#include "core/asymptotics.hpp"
#include "core/data_io.hpp"
#include "core/inference.hpp"
#include "core/log.hpp"
#include "core/stats.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <ostream>
#include <thread>

namespace sgarch {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double student_t_unit(double nu, std::mt19937_64& rng) {
  std::student_t_distribution<double> dist(nu);
  return dist(rng) * std::sqrt((nu - 2.0) / nu);
}

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

std::string_view to_string(Dgp dgp) {
  switch (dgp) {
    case Dgp::dgp1_sarch2: return "dgp1";
    case Dgp::dgp2_sgarch11: return "dgp2";
    case Dgp::dgp3_sgarch12: return "dgp3";
    case Dgp::dgp4_sgarch21: return "dgp4";
  }
  return "?";
}

std::string_view to_string(TauShape shape) {
  switch (shape) {
    case TauShape::constant: return "constant";
    case TauShape::linear: return "linear";
    case TauShape::cyclical: return "cyclical";
  }
  return "?";
}

std::string_view to_string(Innovation law) {
  switch (law) {
    case Innovation::normal: return "normal";
    case Innovation::st10: return "st10";
    case Innovation::st5: return "st5";
  }
  return "?";
}

Dgp parse_dgp(std::string_view text) {
  for (Dgp d : {Dgp::dgp1_sarch2, Dgp::dgp2_sgarch11, Dgp::dgp3_sgarch12, Dgp::dgp4_sgarch21})
    if (text == to_string(d)) return d;
  fail(ErrorKind::invalid_argument, "unknown DGP '" + std::string(text) + "' (dgp1..dgp4)");
}

TauShape parse_tau_shape(std::string_view text) {
  for (TauShape s : {TauShape::constant, TauShape::linear, TauShape::cyclical})
    if (text == to_string(s)) return s;
  fail(ErrorKind::invalid_argument,
       "unknown tau shape '" + std::string(text) + "' (constant, linear, cyclical)");
}

Innovation parse_innovation(std::string_view text) {
  for (Innovation i : {Innovation::normal, Innovation::st10, Innovation::st5})
    if (text == to_string(i)) return i;
  fail(ErrorKind::invalid_argument,
       "unknown innovation law '" + std::string(text) + "' (normal, st10, st5)");
}

void SimSpec::validate() const {
  if (k < 0 || k > 10) fail(ErrorKind::invalid_argument, "k must lie in 0..10");
  if (T < 1) fail(ErrorKind::invalid_argument, "T must be positive");
  if (n_reps < 1) fail(ErrorKind::invalid_argument, "number of replications must be positive");
  if (burn_in < 0) fail(ErrorKind::invalid_argument, "burn-in must be non-negative");
}

GarchOrder dgp_order(Dgp dgp) {
  switch (dgp) {
    case Dgp::dgp1_sarch2: return {0, 2};
    case Dgp::dgp2_sgarch11: return {1, 1};
    case Dgp::dgp3_sgarch12: return {1, 2};
    case Dgp::dgp4_sgarch21: return {2, 1};
  }
  return {1, 1};
}

Vector dgp_theta(Dgp dgp, int k) {
  const double extra = 0.03 * k;
  switch (dgp) {
    case Dgp::dgp1_sarch2: return Vector{{0.3, 0.3}};
    case Dgp::dgp2_sgarch11: return Vector{{0.1, 0.8}};
    case Dgp::dgp3_sgarch12: return Vector{{0.3, extra, 0.3}};
    case Dgp::dgp4_sgarch21: return Vector{{0.3, 0.3, extra}};
  }
  return Vector{{0.1, 0.8}};
}

int dgp_extra_index(Dgp dgp) {
  switch (dgp) {
    case Dgp::dgp3_sgarch12: return 1;
    case Dgp::dgp4_sgarch21: return 2;
    default: fail(ErrorKind::invalid_argument, "only DGPs 3 and 4 have a deviation coefficient");
  }
}

double tau_function(TauShape shape, double x) {
  switch (shape) {
    case TauShape::constant: return 1.0;
    case TauShape::linear: return 1.0 + 2.0 * x;
    case TauShape::cyclical: return 1.0 + std::sin(4.0 * std::numbers::pi * x) / 2.0;
  }
  return 1.0;
}

double draw_innovation(Innovation law, std::mt19937_64& rng) {
  switch (law) {
    case Innovation::normal: {
      std::normal_distribution<double> dist(0.0, 1.0);
      return dist(rng);
    }
    case Innovation::st10: return student_t_unit(10.0, rng);
    case Innovation::st5: return student_t_unit(5.0, rng);
  }
  return 0.0;
}

std::mt19937_64 replication_rng(std::uint64_t seed, std::uint64_t rep) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(rep + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

SimPath simulate_path(const SimSpec& spec, int rep_index) {
  spec.validate();
  if (rep_index < 0) fail(ErrorKind::invalid_argument, "replication index must be non-negative");
  const GarchOrder order = dgp_order(spec.dgp);
  const GarchParams params(order, dgp_theta(spec.dgp, spec.k));
  const int p = order.p;
  const int q = order.q;
  auto rng = replication_rng(spec.seed, static_cast<std::uint64_t>(rep_index));

  const std::size_t total = static_cast<std::size_t>(spec.burn_in) + static_cast<std::size_t>(spec.T);
  std::vector<double> g(total);
  std::vector<double> u_sq(total);
  std::vector<double> eta(total);
  for (std::size_t t = 0; t < total; ++t) {
    const auto ti = static_cast<std::ptrdiff_t>(t);
    double gt = params.omega();
    for (int i = 1; i <= q; ++i) gt += params.alpha(i - 1) * (ti - i >= 0 ? u_sq[t - i] : 1.0);
    for (int j = 1; j <= p; ++j) gt += params.beta(j - 1) * (ti - j >= 0 ? g[t - j] : 1.0);
    g[t] = gt;
    eta[t] = draw_innovation(spec.innovation, rng);
    u_sq[t] = gt * eta[t] * eta[t];
  }

  SimPath path;
  const auto n = static_cast<std::size_t>(spec.T);
  const std::size_t offset = static_cast<std::size_t>(spec.burn_in);
  path.series.values.resize(n);
  path.tau.resize(n);
  path.g.assign(g.begin() + static_cast<std::ptrdiff_t>(offset), g.end());
  path.eta.assign(eta.begin() + static_cast<std::ptrdiff_t>(offset), eta.end());
  for (std::size_t t = 0; t < n; ++t) {
    const double x = static_cast<double>(t + 1) / static_cast<double>(n);
    path.tau[t] = tau_function(spec.tau, x);
    path.series.values[t] = std::sqrt(path.tau[t] * path.g[t]) * path.eta[t];
  }
  path.series.label = std::string(to_string(spec.dgp)) + "_rep" + std::to_string(rep_index);
  return path;
}

ReturnSeries simulate(const SimSpec& spec, int rep_index) {
  return simulate_path(spec, rep_index).series;
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("SGARCH_THREADS")) {
    unsigned value = 0;
    const char* end = env + std::char_traits<char>::length(env);
    const auto [ptr, ec] = std::from_chars(env, end, value);
    if (ec == std::errc() && ptr == end && value > 0) return value;
    log_warn("ignoring invalid SGARCH_THREADS value '" + std::string(env) + "'");
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = default_thread_count();
  const auto workers = static_cast<std::size_t>(std::min<std::size_t>(threads, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) body(i);
    });
}

std::vector<std::string> parameter_names(GarchOrder order) {
  std::vector<std::string> names;
  for (int i = 1; i <= order.q; ++i) names.push_back("alpha" + std::to_string(i));
  for (int j = 1; j <= order.p; ++j) names.push_back("beta" + std::to_string(j));
  return names;
}

EstimatorSummary summarize(std::string estimator, const std::vector<RepRecord>& records,
                           const Vector& truth, const std::vector<std::string>& names,
                           const std::function<const Vector*(const RepRecord&)>& estimate,
                           const std::function<const Vector*(const RepRecord&)>& se) {
  EstimatorSummary out;
  out.estimator = std::move(estimator);
  const auto n = truth.size();
  std::vector<std::vector<double>> values(static_cast<std::size_t>(n));
  std::vector<double> se_sum(static_cast<std::size_t>(n), 0.0);
  bool have_se = static_cast<bool>(se);
  for (const auto& rec : records) {
    const Vector* est = estimate(rec);
    if (!est || est->size() != n || !est->allFinite()) {
      ++out.n_excluded;
      continue;
    }
    ++out.n_used;
    for (Eigen::Index i = 0; i < n; ++i) values[static_cast<std::size_t>(i)].push_back((*est)(i));
    if (have_se) {
      const Vector* s = se(rec);
      if (s && s->size() == n)
        for (Eigen::Index i = 0; i < n; ++i) se_sum[static_cast<std::size_t>(i)] += (*s)(i);
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    ParamSummary ps;
    ps.name = idx < names.size() ? names[idx] : "theta" + std::to_string(i + 1);
    ps.truth = truth(i);
    if (out.n_used > 0) {
      ps.bias = mean(values[idx]) - truth(i);
      ps.esd = stddev(values[idx]);
      ps.asd = have_se ? se_sum[idx] / out.n_used : nan();
    } else {
      ps.bias = ps.esd = ps.asd = nan();
    }
    out.params.push_back(std::move(ps));
  }
  return out;
}

EstimationCell run_estimation_cell(const SimSpec& spec, const EstimationOptions& options) {
  spec.validate();
  const GarchOrder order = dgp_order(spec.dgp);
  const Vector truth = dgp_theta(spec.dgp, spec.k);
  EstimationCell cell;
  cell.spec = spec;
  cell.records.resize(static_cast<std::size_t>(spec.n_reps));

  parallel_for(cell.records.size(), options.threads, [&](std::size_t i) {
    RepRecord& rec = cell.records[i];
    rec.rep = static_cast<int>(i);
    try {
      const auto series = simulate(spec, rec.rep);
      if (options.bandwidth) {
        rec.h = *options.bandwidth;
      } else {
        CVConfig cfg;
        cfg.pilot_order = order;
        rec.h = select_bandwidth_cv(series, cfg).h_cv;
      }
      const KernelSpec kernel{KernelKind::epanechnikov, rec.h};
      const auto longrun = estimate_tau(series.values, kernel, Boundary::reflection);
      const auto fit = fit_qmle(series, longrun, order);
      if (!fit.converged) {
        rec.error = "QMLE did not converge";
        return;
      }
      const auto cov = estimate_covariance(fit.filtered);
      rec.theta_hat = fit.params.theta();
      rec.se_hat = cov.se;
      rec.ok = true;
      if (options.run_three_step) {
        try {
          const auto three = three_step_update(fit, series, kernel);
          rec.theta_check = three.theta_check;
          rec.three_ok = rec.theta_check.allFinite();
        } catch (const Error& e) {
          rec.error = std::string("three-step: ") + e.what();
        }
      }
      if (options.run_vt) {
        try {
          const auto vt = fit_vt(series, order);
          rec.vt_ok = vt.fit.converged;
          if (rec.vt_ok) rec.theta_vt = vt.fit.params.theta();
        } catch (const Error& e) {
          rec.error = std::string("vt: ") + e.what();
        }
      }
    } catch (const Error& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  });

  const auto names = parameter_names(order);
  cell.summaries.push_back(summarize(
      "qmle", cell.records, truth, names,
      [](const RepRecord& r) { return r.ok ? &r.theta_hat : nullptr; },
      [](const RepRecord& r) { return r.ok ? &r.se_hat : nullptr; }));
  if (options.run_vt)
    cell.summaries.push_back(summarize(
        "vt", cell.records, truth, names,
        [](const RepRecord& r) { return r.ok && r.vt_ok ? &r.theta_vt : nullptr; }, {}));
  if (options.run_three_step)
    cell.summaries.push_back(summarize(
        "three_step", cell.records, truth, names,
        [](const RepRecord& r) { return r.ok && r.three_ok ? &r.theta_check : nullptr; }, {}));
  return cell;
}

PowerReport run_power_curves(const SimSpec& base, const std::vector<int>& k_set,
                             const PowerOptions& options) {
  base.validate();
  if (base.dgp != Dgp::dgp3_sgarch12 && base.dgp != Dgp::dgp4_sgarch21)
    fail(ErrorKind::invalid_argument, "power curves are defined for DGPs 3 and 4");
  if (options.lags.empty()) fail(ErrorKind::invalid_argument, "at least one portmanteau lag needed");
  const GarchOrder alternative = dgp_order(base.dgp);
  const GarchOrder null_order{1, 1};
  const auto constraint = LinearConstraint::pin(alternative.num_params(), dgp_extra_index(base.dgp));

  PowerReport report;
  report.dgp = base.dgp;
  report.base = base;
  report.options = options;
  for (int k : k_set) {
    SimSpec spec = base;
    spec.k = k;
    spec.validate();
    PowerRow row;
    row.k = k;
    row.records.resize(static_cast<std::size_t>(spec.n_reps));
    parallel_for(row.records.size(), options.threads, [&](std::size_t i) {
      PowerRecord& rec = row.records[i];
      rec.rep = static_cast<int>(i);
      try {
        const auto series = simulate(spec, rec.rep);
        double h = 0.0;
        if (options.bandwidth) {
          h = *options.bandwidth;
        } else {
          CVConfig cfg;
          cfg.pilot_order = null_order;
          h = select_bandwidth_cv(series, cfg).h_cv;
        }
        const auto longrun =
            estimate_tau(series.values, KernelSpec{KernelKind::epanechnikov, h}, Boundary::reflection);
        const auto lm = lm_test(series, longrun, alternative, constraint);
        rec.lm_p = lm.report.p_value;
        const auto null_fit = fit_qmle(series, longrun, null_order);
        for (int lag : options.lags) rec.q_p.push_back(portmanteau_test(null_fit, lag).first.p_value);
        rec.ok = true;
      } catch (const Error& e) {
        rec.ok = false;
        rec.error = e.what();
      }
    });

    const auto n_levels = options.levels.size();
    row.lm_reject.assign(n_levels, 0.0);
    row.q_reject.assign(options.lags.size(), std::vector<double>(n_levels, 0.0));
    for (const auto& rec : row.records) {
      if (!rec.ok) {
        ++row.n_excluded;
        continue;
      }
      ++row.n_used;
      for (std::size_t l = 0; l < n_levels; ++l) {
        if (rec.lm_p < options.levels[l]) row.lm_reject[l] += 1.0;
        for (std::size_t j = 0; j < options.lags.size(); ++j)
          if (rec.q_p[j] < options.levels[l]) row.q_reject[j][l] += 1.0;
      }
    }
    if (row.n_used > 0) {
      for (auto& v : row.lm_reject) v /= row.n_used;
      for (auto& lag_row : row.q_reject)
        for (auto& v : lag_row) v /= row.n_used;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

void write_table_csv(const EstimationCell& cell, std::ostream& out) {
  out << "estimator,dgp,tau,dist,T,param,truth,bias_x100,esd_x100,asd_x100,n_used,n_excluded,seed\n";
  for (const auto& s : cell.summaries)
    for (const auto& p : s.params)
      out << s.estimator << ',' << to_string(cell.spec.dgp) << ',' << to_string(cell.spec.tau) << ','
          << to_string(cell.spec.innovation) << ',' << cell.spec.T << ',' << p.name << ','
          << format_double(p.truth) << ',' << format_double(100.0 * p.bias) << ','
          << format_double(100.0 * p.esd) << ','
          << (std::isnan(p.asd) ? std::string() : format_double(100.0 * p.asd)) << ',' << s.n_used
          << ',' << s.n_excluded << ',' << cell.spec.seed << '\n';
}

void write_power_csv(const PowerReport& report, std::ostream& out) {
  out << "dgp,T,k,test,level,rejection_rate,n_used,n_excluded,seed\n";
  const auto& o = report.options;
  for (const auto& row : report.rows) {
    const auto prefix = std::string(to_string(report.dgp)) + ',' + std::to_string(report.base.T) +
                        ',' + std::to_string(row.k) + ',';
    for (std::size_t l = 0; l < o.levels.size(); ++l)
      out << prefix << "LM," << format_double(o.levels[l]) << ',' << format_double(row.lm_reject[l])
          << ',' << row.n_used << ',' << row.n_excluded << ',' << report.base.seed << '\n';
    for (std::size_t j = 0; j < o.lags.size(); ++j)
      for (std::size_t l = 0; l < o.levels.size(); ++l)
        out << prefix << 'Q' << o.lags[j] << ',' << format_double(o.levels[l]) << ','
            << format_double(row.q_reject[j][l]) << ',' << row.n_used << ',' << row.n_excluded << ','
            << report.base.seed << '\n';
  }
}

}  // namespace sgarch
