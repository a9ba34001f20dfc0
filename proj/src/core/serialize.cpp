#include "core/serialize.hpp"

#include "core/data_io.hpp"

#include <cmath>
#include <ostream>

namespace sgarch {
namespace {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::string level_key(double level) { return format_double(level); }

}  // namespace

Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

Json matrix_json_row_major(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(number(m(i, j)));
  return out;
}

Json report_json(const TestReport& report) {
  Json reject = Json::object();
  for (const auto& [level, rejected] : report.reject_at) reject[level_key(level)] = rejected;
  return Json{{"statistic", number(report.statistic)},
              {"df", report.df},
              {"p_value", number(report.p_value)},
              {"reject_at", reject}};
}

Json fit_json(const FitResult& fit, const AsymptoticCov& cov) {
  const auto& order = fit.params.order();
  return Json{{"order", {{"p", order.p}, {"q", order.q}}},
              {"parameter_names", parameter_names(order)},
              {"theta", vector_json(fit.params.theta())},
              {"omega", number(fit.params.omega())},
              {"se", vector_json(cov.se)},
              {"kappa_hat", number(cov.kappa_hat)},
              {"sigma_hat", matrix_json_row_major(cov.sigma_hat)},
              {"loglik", number(fit.loglik)},
              {"h_used", number(fit.longrun.h_used)},
              {"boundary", fit.longrun.boundary == Boundary::reflection ? "reflection" : "interior_only"},
              {"converged", fit.converged},
              {"iterations", fit.iterations},
              {"T", fit.filtered.size()}};
}

Json bandwidth_json(const BandwidthSelection& selection) {
  Json curve = Json::array();
  for (const auto& pt : selection.curve) curve.push_back({{"h", number(pt.h)}, {"cv", number(pt.cv)}});
  return Json{{"h_cv", number(selection.h_cv)},
              {"h_pilot", number(selection.h_pilot)},
              {"pilot_theta", vector_json(selection.pilot_params.theta())},
              {"pilot_converged", selection.pilot_converged},
              {"curve", curve}};
}

Json lm_json(const LmResult& lm, const LinearConstraint& constraint) {
  Json out = report_json(lm.report);
  out["R"] = matrix_json_row_major(constraint.R());
  out["r"] = vector_json(constraint.r());
  out["constrained_theta"] = vector_json(lm.constrained_fit.params.theta());
  out["constrained_converged"] = lm.constrained_fit.converged;
  out["h_used"] = number(lm.constrained_fit.longrun.h_used);
  out["T"] = lm.constrained_fit.filtered.size();
  return out;
}

Json portmanteau_json(const std::vector<std::pair<int, TestReport>>& reports) {
  Json tests = Json::array();
  for (const auto& [lag, report] : reports) {
    Json entry = report_json(report);
    entry["lag"] = lag;
    tests.push_back(entry);
  }
  return tests;
}

Json vt_json(const VTResult& vt) {
  return Json{{"tau_bar", number(vt.tau_bar)},
              {"theta", vector_json(vt.fit.params.theta())},
              {"omega", number(vt.fit.params.omega())},
              {"se", vector_json(vt.cov.se)},
              {"loglik", number(vt.fit.loglik)},
              {"converged", vt.fit.converged}};
}

Json three_step_json(const ThreeStepResult& three, const SigmaStar& sigma, std::size_t n_obs) {
  Vector se(sigma.sigma.rows());
  for (Eigen::Index i = 0; i < se.size(); ++i)
    se(i) = std::sqrt(std::max(sigma.sigma(i, i), 0.0) / static_cast<double>(n_obs));
  return Json{{"theta", vector_json(three.theta_check)},
              {"se", vector_json(se)},
              {"sigma_star", matrix_json_row_major(sigma.sigma)},
              {"tau_fallbacks", three.tau_fallbacks}};
}

Json estimation_cell_json(const EstimationCell& cell) {
  const auto& s = cell.spec;
  Json summaries = Json::array();
  for (const auto& est : cell.summaries) {
    Json params = Json::array();
    for (const auto& p : est.params)
      params.push_back({{"name", p.name},
                        {"truth", number(p.truth)},
                        {"bias", number(p.bias)},
                        {"esd", number(p.esd)},
                        {"asd", number(p.asd)}});
    summaries.push_back({{"estimator", est.estimator},
                         {"n_used", est.n_used},
                         {"n_excluded", est.n_excluded},
                         {"params", params}});
  }
  Json failures = Json::array();
  for (const auto& r : cell.records)
    if (!r.ok) failures.push_back({{"rep", r.rep}, {"error", r.error}});
  return Json{{"experiment", "table"},
              {"dgp", to_string(s.dgp)},
              {"k", s.k},
              {"tau", to_string(s.tau)},
              {"dist", to_string(s.innovation)},
              {"T", s.T},
              {"reps", s.n_reps},
              {"seed", s.seed},
              {"summaries", summaries},
              {"failures", failures}};
}

Json power_json(const PowerReport& report) {
  const auto& o = report.options;
  Json rows = Json::array();
  for (const auto& row : report.rows) {
    Json lm = Json::object();
    for (std::size_t l = 0; l < o.levels.size(); ++l) lm[level_key(o.levels[l])] = row.lm_reject[l];
    Json q = Json::array();
    for (std::size_t j = 0; j < o.lags.size(); ++j) {
      Json rates = Json::object();
      for (std::size_t l = 0; l < o.levels.size(); ++l) rates[level_key(o.levels[l])] = row.q_reject[j][l];
      q.push_back({{"lag", o.lags[j]}, {"rejection_rate", rates}});
    }
    rows.push_back({{"k", row.k},
                    {"n_used", row.n_used},
                    {"n_excluded", row.n_excluded},
                    {"lm_rejection_rate", lm},
                    {"portmanteau", q}});
  }
  return Json{{"experiment", "power"},
              {"dgp", to_string(report.dgp)},
              {"tau", to_string(report.base.tau)},
              {"dist", to_string(report.base.innovation)},
              {"T", report.base.T},
              {"reps", report.base.n_reps},
              {"seed", report.base.seed},
              {"rows", rows}};
}

Json series_json(const ReturnSeries& series) {
  Json values = Json::array();
  for (double v : series.values) values.push_back(number(v));
  return Json{{"label", series.label}, {"T", series.size()}, {"values", values}};
}

Json qlike_json(const QlikeReport& report) {
  const auto& cfg = report.config;
  Json models = Json::array();
  for (std::size_t mi = 0; mi < report.columns.size(); ++mi) {
    const auto& col = report.columns[mi];
    Json per_h = Json::array();
    for (std::size_t hi = 0; hi < cfg.horizons.size(); ++hi) {
      Json entry{{"t0", cfg.horizons[hi]},
                 {"qlike", number(col.qlike[hi])},
                 {"valid", static_cast<bool>(col.valid[hi])},
                 {"failures", col.failures[hi]},
                 {"origins", col.attempts[hi]},
                 {"best", report.best[hi] == static_cast<int>(mi)}};
      if (const auto& dm = report.dm[mi][hi]) {
        entry["dm_statistic"] = number(dm->statistic);
        entry["dm_p_value"] = number(dm->p_value);
      } else {
        entry["dm_statistic"] = nullptr;
        entry["dm_p_value"] = nullptr;
      }
      per_h.push_back(entry);
    }
    models.push_back({{"model", col.name}, {"horizons", per_h}});
  }
  Json windows = Json::array();
  for (int w : report.ls_windows) windows.push_back(w);
  return Json{{"origin_start", cfg.origin_start},
              {"origin_stride", cfg.origin_stride},
              {"n_origins", report.origins.size()},
              {"horizons", cfg.horizons},
              {"garch_order", {{"p", cfg.garch_order.p}, {"q", cfg.garch_order.q}}},
              {"q_arch", cfg.q_arch},
              {"models", models},
              {"ls_arch_windows", windows}};
}

void write_curve_csv(const BandwidthSelection& selection, std::ostream& out) {
  out << "h,cv,selected\n";
  for (const auto& pt : selection.curve)
    out << format_double(pt.h) << ',' << format_double(pt.cv) << ',' << (pt.h == selection.h_cv ? 1 : 0)
        << '\n';
}

void write_qlike_csv(const QlikeReport& report, std::ostream& out) {
  const auto& horizons = report.config.horizons;
  out << "model";
  for (int h : horizons) out << ",qlike_t0_" << h << ",sig_t0_" << h;
  out << '\n';
  for (std::size_t mi = 0; mi < report.columns.size(); ++mi) {
    const auto& col = report.columns[mi];
    out << col.name;
    for (std::size_t hi = 0; hi < horizons.size(); ++hi) {
      out << ',';
      if (col.valid[hi] && std::isfinite(col.qlike[hi])) out << format_double(col.qlike[hi]);
      out << ',';
      const auto& dm = report.dm[mi][hi];
      if (dm && dm->p_value < 0.05) out << '*';
    }
    out << '\n';
  }
}

}  // namespace sgarch
