#pragma once

#include "core/common.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>

namespace sgarch {

enum class Transform { none, log_return_pct };

/// Reads one numeric column of a comma-separated file. A header row is
/// assumed when any field of the first line is not a number. `column` is a
/// header name or a 0-based index.
ReturnSeries load_series(const std::filesystem::path& path, std::string_view column,
                         Transform transform);

ReturnSeries read_series(std::istream& in, std::string_view column, Transform transform,
                         std::string label = "");

/// 100 * (log P_t - log P_{t-1}); every price must be strictly positive.
std::vector<double> log_returns_pct(std::span<const double> prices);

/// Writes a one-column CSV with the label as header. Values use the shortest
/// representation that parses back to the identical double.
void write_series_csv(const ReturnSeries& series, std::ostream& out);

/// Population variance (divisor T).
double sample_variance(std::span<const double> values);

/// Throws unless the series is long enough for estimation and fully finite.
void require_estimable(const ReturnSeries& series);

std::string format_double(double value);

}  // namespace sgarch
