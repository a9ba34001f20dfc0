#include "sgarch/sgarch.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitComputation = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ComputationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { sgarch_string_free(ptr); }
  std::string str() const { return ptr ? std::string(ptr) : std::string(); }
};

void check(sgarch_status status) {
  if (status == SGARCH_OK) return;
  const std::string message = sgarch_last_error();
  if (status == SGARCH_E_INVALID_ARGUMENT || status == SGARCH_E_IO) throw UsageError(message);
  throw ComputationError(std::string(sgarch_status_name(status)) + ": " + message);
}

struct SeriesHandle {
  sgarch_series* ptr = nullptr;
  ~SeriesHandle() { sgarch_series_free(ptr); }
};

struct FitHandle {
  sgarch_fit* ptr = nullptr;
  ~FitHandle() { sgarch_fit_free(ptr); }
};

struct BandwidthHandle {
  sgarch_bandwidth* ptr = nullptr;
  ~BandwidthHandle() { sgarch_bandwidth_free(ptr); }
};

enum class Format { json, csv };

struct Output {
  std::string target;  // empty: stdout
  std::string format;  // empty: inferred

  Format resolve(Format fallback) const {
    if (format == "json") return Format::json;
    if (format == "csv") return Format::csv;
    if (target == "json") return Format::json;
    if (target == "csv") return Format::csv;
    const auto ext = std::filesystem::path(target).extension().string();
    if (ext == ".json") return Format::json;
    if (ext == ".csv") return Format::csv;
    return fallback;
  }

  void write(const std::string& text) const {
    if (target.empty() || target == "-" || target == "json" || target == "csv") {
      std::cout << text;
      std::cout.flush();
      return;
    }
    std::ofstream out(target, std::ios::binary);
    if (!out) throw UsageError("cannot write '" + target + "'");
    out << text;
  }
};

void add_output(CLI::App* cmd, Output& out, const std::string& formats) {
  cmd->add_option("--out", out.target,
                  "Output file (format from the extension) or the literal " + formats +
                      " to write that format to stdout; stdout when omitted");
  cmd->add_option("--format", out.format, "Force the output format")->check(CLI::IsMember({"json", "csv"}));
}

struct SeriesArgs {
  std::string path;
  std::string column = "0";
  bool log_returns = false;
};

void add_series(CLI::App* cmd, SeriesArgs& args) {
  cmd->add_option("data", args.path, "CSV file with the return (or price) series")->required();
  cmd->add_option("--column", args.column, "Column name or 0-based index")->capture_default_str();
  cmd->add_flag("--log-returns", args.log_returns, "Treat the column as prices and use 100 * log differences");
}

SeriesHandle load(const SeriesArgs& args) {
  if (!std::filesystem::exists(args.path)) throw UsageError("cannot open '" + args.path + "': no such file");
  SeriesHandle h;
  check(sgarch_series_load(args.path.c_str(), args.column.c_str(), args.log_returns ? 1 : 0, &h.ptr));
  return h;
}

struct ModelArgs {
  std::vector<int> order{1, 1};
  std::vector<int> pilot_order{1, 1};
  std::string bandwidth = "auto";
  std::string boundary = "reflection";

  sgarch_fit_options options() const {
    sgarch_fit_options o;
    sgarch_fit_options_init(&o);
    o.p = order[0];
    o.q = order[1];
    o.pilot_p = pilot_order[0];
    o.pilot_q = pilot_order[1];
    o.boundary = boundary == "interior" ? SGARCH_BOUNDARY_INTERIOR : SGARCH_BOUNDARY_REFLECTION;
    if (bandwidth != "auto") {
      double h = 0.0;
      const auto [ptr, ec] = std::from_chars(bandwidth.data(), bandwidth.data() + bandwidth.size(), h);
      if (ec != std::errc() || ptr != bandwidth.data() + bandwidth.size() || !(h > 0.0))
        throw UsageError("--bandwidth must be 'auto' or a positive number, got '" + bandwidth + "'");
      o.bandwidth = h;
    }
    return o;
  }
};

void add_model(CLI::App* cmd, ModelArgs& args, bool with_boundary = true) {
  cmd->add_option("--order", args.order, "GARCH order as p q (p GARCH lags, q ARCH lags)")
      ->expected(2)
      ->capture_default_str();
  cmd->add_option("--bandwidth", args.bandwidth, "Kernel bandwidth h in (0, 0.5), or auto for cross-validation")
      ->capture_default_str();
  cmd->add_option("--pilot-order", args.pilot_order, "Pilot GARCH order p q used by cross-validation")
      ->expected(2)
      ->capture_default_str();
  if (with_boundary)
    cmd->add_option("--boundary", args.boundary, "Kernel boundary treatment")
        ->check(CLI::IsMember({"reflection", "interior"}))
        ->capture_default_str();
}

std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) throw UsageError("empty entry in " + what);
    item = item.substr(first, last - first + 1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || ptr != item.data() + item.size())
      throw UsageError("cannot parse '" + item + "' in " + what);
    out.push_back(v);
  }
  if (out.empty()) throw UsageError(what + " is empty");
  return out;
}

std::vector<int> parse_ints(const std::string& text, const std::string& what) {
  std::vector<int> out;
  for (double v : parse_numbers(text, what)) {
    if (v != static_cast<int>(v)) throw UsageError(what + " must contain integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

unsigned thread_default() {
  if (const char* env = std::getenv("SGARCH_THREADS")) {
    unsigned v = 0;
    const std::string s(env);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size() && v > 0) return v;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semiparametric GARCH estimation, testing, simulation and forecasting"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sgarch_version()));
  int verbosity = 0;
  bool quiet = false;
  unsigned threads = thread_default();
  app.add_flag("-v,--verbose", verbosity, "Increase diagnostic output (repeatable)");
  app.add_flag("-q,--quiet", quiet, "Suppress warnings");
  app.add_option("--threads", threads, "Worker threads for simulation (0: available parallelism)")
      ->capture_default_str();

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Two-step S-GARCH estimation with standard errors (JSON)");
  SeriesArgs fit_series;
  ModelArgs fit_model;
  Output fit_out;
  add_series(fit_cmd, fit_series);
  add_model(fit_cmd, fit_model);
  add_output(fit_cmd, fit_out, "json");

  // lm-test
  auto* lm_cmd = app.add_subcommand("lm-test", "LM test of R theta = r at the constrained estimate (JSON)");
  SeriesArgs lm_series;
  ModelArgs lm_model;
  Output lm_out;
  std::string lm_R;
  std::string lm_r;
  add_series(lm_cmd, lm_series);
  add_model(lm_cmd, lm_model);
  lm_cmd->add_option("--R", lm_R, "Constraint matrix, row-major with ';' between rows, e.g. '0,1,0'")->required();
  lm_cmd->add_option("--r", lm_r, "Right-hand side, comma separated")->required();
  add_output(lm_cmd, lm_out, "json");

  // check
  auto* check_cmd = app.add_subcommand("check", "Portmanteau tests on squared standardized residuals (JSON)");
  SeriesArgs check_series;
  ModelArgs check_model;
  Output check_out;
  std::string check_lags = "6,9,12";
  add_series(check_cmd, check_series);
  add_model(check_cmd, check_model);
  check_cmd->add_option("--lags", check_lags, "Comma-separated lags")->capture_default_str();
  add_output(check_cmd, check_out, "json");

  // bandwidth
  auto* bw_cmd = app.add_subcommand("bandwidth", "Cross-validation bandwidth and the CV curve (CSV h,cv,selected)");
  SeriesArgs bw_series;
  std::vector<int> bw_pilot{1, 1};
  Output bw_out;
  add_series(bw_cmd, bw_series);
  bw_cmd->add_option("--pilot-order", bw_pilot, "Pilot GARCH order p q")->expected(2)->capture_default_str();
  add_output(bw_cmd, bw_out, "csv|json");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Monte-Carlo experiments on the simulated designs");
  std::string sim_dgp = "dgp2";
  int sim_k = 0;
  std::string sim_tau = "constant";
  std::string sim_dist = "normal";
  int sim_T = 2000;
  int sim_reps = 100;
  std::uint64_t sim_seed = 0;
  std::string sim_experiment = "table";
  std::string sim_k_set = "0,5,10";
  std::string sim_lags = "6,9,12";
  double sim_bandwidth = 0.0;
  bool sim_vt = false;
  bool sim_three = false;
  Output sim_out;
  sim_cmd->add_option("--dgp", sim_dgp, "Design")->check(CLI::IsMember({"dgp1", "dgp2", "dgp3", "dgp4"}))
      ->capture_default_str();
  sim_cmd->add_option("--k", sim_k, "Deviation index 0..10 for dgp3/dgp4")->check(CLI::Range(0, 10))
      ->capture_default_str();
  sim_cmd->add_option("--tau", sim_tau, "Long-run variance shape")
      ->check(CLI::IsMember({"constant", "linear", "cyclical"}))
      ->capture_default_str();
  sim_cmd->add_option("--dist", sim_dist, "Innovation law")->check(CLI::IsMember({"normal", "st10", "st5"}))
      ->capture_default_str();
  sim_cmd->add_option("--T", sim_T, "Sample size")->check(CLI::PositiveNumber)->capture_default_str();
  sim_cmd->add_option("--reps", sim_reps, "Replications")->check(CLI::PositiveNumber)->capture_default_str();
  sim_cmd->add_option("--seed", sim_seed, "Random seed (echoed in the output)")->capture_default_str();
  sim_cmd->add_option("--experiment", sim_experiment,
                      "table: bias/ESD/ASD cell; power: rejection rates over --k-set; series: the raw paths")
      ->check(CLI::IsMember({"table", "power", "series"}))
      ->capture_default_str();
  sim_cmd->add_option("--k-set", sim_k_set, "Comma-separated k values for the power experiment")
      ->capture_default_str();
  sim_cmd->add_option("--lags", sim_lags, "Portmanteau lags for the power experiment")->capture_default_str();
  sim_cmd->add_option("--bandwidth", sim_bandwidth, "Fixed bandwidth; cross-validation per replication when 0")
      ->capture_default_str();
  sim_cmd->add_flag("--vt", sim_vt, "Also run the variance-targeting estimator (table)");
  sim_cmd->add_flag("--three-step", sim_three, "Also run the three-step update (table)");
  add_output(sim_cmd, sim_out, "csv|json");

  // forecast
  auto* fc_cmd = app.add_subcommand("forecast", "Rolling-origin QLIKE comparison with DM tests (CSV or JSON)");
  SeriesArgs fc_series;
  std::string fc_models = "sgarch,sarch,garch_vt,ls_arch";
  std::string fc_t0 = "1,5,10,22";
  int fc_origin = 1500;
  int fc_stride = 1;
  int fc_q = 1;
  std::vector<int> fc_order{1, 1};
  double fc_bandwidth = 0.0;
  int fc_refresh = 250;
  Output fc_out;
  add_series(fc_cmd, fc_series);
  fc_cmd->add_option("--models", fc_models, "Comma list of sgarch, sarch, garch_vt, ls_arch")
      ->capture_default_str();
  fc_cmd->add_option("--t0", fc_t0, "Comma-separated forecast horizons")->capture_default_str();
  fc_cmd->add_option("--origin-start", fc_origin, "First forecast origin (in-sample length)")
      ->capture_default_str();
  fc_cmd->add_option("--origin-stride", fc_stride, "Step between consecutive origins")->capture_default_str();
  fc_cmd->add_option("--q", fc_q, "ARCH order for sarch and ls_arch")->capture_default_str();
  fc_cmd->add_option("--order", fc_order, "GARCH order p q for sgarch and garch_vt")->expected(2)
      ->capture_default_str();
  fc_cmd->add_option("--bandwidth", fc_bandwidth, "Fixed bandwidth; cross-validation when 0")
      ->capture_default_str();
  fc_cmd->add_option("--refresh", fc_refresh, "Origins between bandwidth re-selections")->capture_default_str();
  add_output(fc_cmd, fc_out, "csv|json");

  // compare-estimators
  auto* cmp_cmd = app.add_subcommand("compare-estimators", "Two-step, variance-targeting and three-step fits (JSON)");
  SeriesArgs cmp_series;
  ModelArgs cmp_model;
  Output cmp_out;
  add_series(cmp_cmd, cmp_series);
  add_model(cmp_cmd, cmp_model, false);
  add_output(cmp_cmd, cmp_out, "json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  sgarch_set_log_level(quiet ? 0 : 1 + verbosity);

  try {
    if (*fit_cmd) {
      auto series = load(fit_series);
      const auto options = fit_model.options();
      FitHandle fit;
      check(sgarch_fit_qmle(series.ptr, &options, &fit.ptr));
      OwnedString json;
      check(sgarch_fit_to_json(fit.ptr, &json.ptr));
      fit_out.write(json.str());
    } else if (*lm_cmd) {
      auto series = load(lm_series);
      const auto options = lm_model.options();
      std::vector<double> R;
      std::size_t rows = 0;
      std::stringstream ss(lm_R);
      std::string row;
      std::size_t width = 0;
      while (std::getline(ss, row, ';')) {
        const auto values = parse_numbers(row, "--R");
        if (rows == 0) width = values.size();
        if (values.size() != width) throw UsageError("--R rows have different lengths");
        R.insert(R.end(), values.begin(), values.end());
        ++rows;
      }
      if (width != static_cast<std::size_t>(options.p + options.q))
        throw UsageError("--R needs p+q = " + std::to_string(options.p + options.q) + " columns");
      const auto r = parse_numbers(lm_r, "--r");
      if (r.size() != rows) throw UsageError("--r must have one entry per row of --R");
      OwnedString json;
      check(sgarch_lm_test(series.ptr, &options, R.data(), rows, r.data(), nullptr, nullptr, &json.ptr));
      lm_out.write(json.str());
    } else if (*check_cmd) {
      auto series = load(check_series);
      const auto options = check_model.options();
      const auto lags = parse_ints(check_lags, "--lags");
      FitHandle fit;
      check(sgarch_fit_qmle(series.ptr, &options, &fit.ptr));
      OwnedString json;
      check(sgarch_portmanteau(fit.ptr, lags.data(), lags.size(), nullptr, nullptr, &json.ptr));
      check_out.write(json.str());
    } else if (*bw_cmd) {
      auto series = load(bw_series);
      BandwidthHandle bw;
      check(sgarch_bandwidth_select(series.ptr, bw_pilot[0], bw_pilot[1], &bw.ptr));
      OwnedString text;
      if (bw_out.resolve(Format::csv) == Format::json)
        check(sgarch_bandwidth_to_json(bw.ptr, &text.ptr));
      else
        check(sgarch_bandwidth_curve_csv(bw.ptr, &text.ptr));
      bw_out.write(text.str());
    } else if (*sim_cmd) {
      sgarch_sim_spec spec;
      sgarch_sim_spec_init(&spec);
      spec.dgp = sim_dgp.c_str();
      spec.k = sim_k;
      spec.tau = sim_tau.c_str();
      spec.dist = sim_dist.c_str();
      spec.T = sim_T;
      spec.reps = sim_reps;
      spec.seed = sim_seed;
      spec.threads = threads;
      spec.bandwidth = sim_bandwidth;
      const Format format = sim_out.resolve(Format::csv);
      OwnedString json;
      OwnedString csv;
      if (sim_experiment == "table") {
        check(sgarch_run_table(&spec, sim_vt, sim_three, &json.ptr, &csv.ptr));
        sim_out.write(format == Format::json ? json.str() : csv.str());
      } else if (sim_experiment == "power") {
        const auto ks = parse_ints(sim_k_set, "--k-set");
        const auto lags = parse_ints(sim_lags, "--lags");
        check(sgarch_run_power(&spec, ks.data(), ks.size(), lags.data(), lags.size(), &json.ptr, &csv.ptr));
        sim_out.write(format == Format::json ? json.str() : csv.str());
      } else {
        std::string text = "rep,t,y,seed\n";
        nlohmann::ordered_json doc;
        if (format == Format::json) {
          doc["experiment"] = "series";
          doc["dgp"] = sim_dgp;
          doc["k"] = sim_k;
          doc["tau"] = sim_tau;
          doc["dist"] = sim_dist;
          doc["T"] = sim_T;
          doc["reps"] = sim_reps;
          doc["seed"] = sim_seed;
          doc["paths"] = nlohmann::ordered_json::array();
        }
        for (int rep = 0; rep < sim_reps; ++rep) {
          SeriesHandle path;
          check(sgarch_simulate_series(&spec, rep, &path.ptr));
          if (format == Format::json) {
            OwnedString one;
            check(sgarch_series_to_json(path.ptr, &one.ptr));
            auto entry = nlohmann::ordered_json::parse(one.str());
            entry["rep"] = rep;
            doc["paths"].push_back(std::move(entry));
          } else {
            std::vector<double> values(sgarch_series_length(path.ptr));
            check(sgarch_series_values(path.ptr, values.data(), values.size()));
            for (std::size_t t = 0; t < values.size(); ++t) {
              char buf[64];
              const auto res = std::to_chars(buf, buf + sizeof buf, values[t]);
              text += std::to_string(rep) + ',' + std::to_string(t + 1) + ',' + std::string(buf, res.ptr) + ',' +
                      std::to_string(sim_seed) + '\n';
            }
          }
        }
        if (format == Format::json) text = doc.dump(2) + "\n";
        sim_out.write(text);
      }
    } else if (*fc_cmd) {
      auto series = load(fc_series);
      const auto horizons = parse_ints(fc_t0, "--t0");
      sgarch_forecast_options options;
      sgarch_forecast_options_init(&options);
      options.models = fc_models.c_str();
      options.horizons = horizons.data();
      options.n_horizons = horizons.size();
      options.origin_start = fc_origin;
      options.origin_stride = fc_stride;
      options.p = fc_order[0];
      options.q = fc_order[1];
      options.q_arch = fc_q;
      options.bandwidth = fc_bandwidth;
      options.bandwidth_refresh = fc_refresh;
      OwnedString json;
      OwnedString csv;
      check(sgarch_forecast(series.ptr, &options, &json.ptr, &csv.ptr));
      fc_out.write(fc_out.resolve(Format::csv) == Format::json ? json.str() : csv.str());
    } else if (*cmp_cmd) {
      auto series = load(cmp_series);
      const auto options = cmp_model.options();
      OwnedString json;
      check(sgarch_compare_estimators(series.ptr, &options, &json.ptr));
      cmp_out.write(json.str());
    }
  } catch (const UsageError& e) {
    std::cerr << "sgarch: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ComputationError& e) {
    std::cerr << "sgarch: " << e.what() << '\n';
    return kExitComputation;
  } catch (const std::exception& e) {
    std::cerr << "sgarch: " << e.what() << '\n';
    return kExitComputation;
  }
  return kExitOk;
}
