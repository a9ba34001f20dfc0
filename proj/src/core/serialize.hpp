#pragma once

#include "core/alt_estimators.hpp"
#include "core/bandwidth.hpp"
#include "core/forecasting.hpp"
#include "core/inference.hpp"
#include "core/simulation.hpp"

#include <json.hpp>

#include <iosfwd>

namespace sgarch {

using Json = nlohmann::ordered_json;

Json vector_json(const Vector& v);
Json matrix_json_row_major(const Matrix& m);

Json report_json(const TestReport& report);
Json fit_json(const FitResult& fit, const AsymptoticCov& cov);
Json bandwidth_json(const BandwidthSelection& selection);
Json lm_json(const LmResult& lm, const LinearConstraint& constraint);
Json portmanteau_json(const std::vector<std::pair<int, TestReport>>& reports);
Json vt_json(const VTResult& vt);
Json three_step_json(const ThreeStepResult& three, const SigmaStar& sigma, std::size_t n_obs);
Json estimation_cell_json(const EstimationCell& cell);
Json power_json(const PowerReport& report);
Json series_json(const ReturnSeries& series);
Json qlike_json(const QlikeReport& report);

void write_curve_csv(const BandwidthSelection& selection, std::ostream& out);
/// Models as rows, horizons as columns, with a marker column per horizon that
/// is "*" when the DM test rejects equal accuracy against the best model at 5%.
void write_qlike_csv(const QlikeReport& report, std::ostream& out);

}  // namespace sgarch
