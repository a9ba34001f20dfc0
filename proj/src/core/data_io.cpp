#include "core/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>

namespace sgarch {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                          : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_number(std::string_view field) {
  if (field.empty()) return std::nullopt;
  if (field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) return std::nullopt;
  return value;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

ReturnSeries load_series(const std::filesystem::path& path, std::string_view column,
                         Transform transform) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "'");
  return read_series(in, column, transform, path.filename().string());
}

ReturnSeries read_series(std::istream& in, std::string_view column, Transform transform,
                         std::string label) {
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    lines.push_back(std::move(line));
  }
  if (lines.empty()) fail(ErrorKind::data, "input contains no rows");

  const auto first = split_fields(lines.front());
  const bool has_header =
      std::any_of(first.begin(), first.end(), [](std::string_view f) { return !parse_number(f); });

  std::optional<std::size_t> index;
  std::string column_name;
  if (has_header) {
    const auto it = std::find(first.begin(), first.end(), column);
    if (it != first.end()) {
      index = static_cast<std::size_t>(it - first.begin());
      column_name = std::string(*it);
    }
  }
  if (!index && all_digits(column)) {
    index = std::stoul(std::string(column));
    if (has_header && *index < first.size()) column_name = std::string(first[*index]);
  }
  if (!index && column.empty()) index = 0;
  if (!index) fail(ErrorKind::invalid_argument, "column '" + std::string(column) + "' not found");

  std::vector<double> raw;
  raw.reserve(lines.size());
  for (std::size_t row = has_header ? 1 : 0; row < lines.size(); ++row) {
    const auto fields = split_fields(lines[row]);
    const std::size_t data_row = row - (has_header ? 1 : 0);
    if (*index >= fields.size())
      fail(ErrorKind::invalid_argument, "column " + std::to_string(*index) +
                                            " missing at data row " + std::to_string(data_row));
    const auto value = parse_number(fields[*index]);
    if (!value)
      fail(ErrorKind::data, "non-numeric or missing value '" + std::string(fields[*index]) +
                                "' at data row " + std::to_string(data_row));
    if (!std::isfinite(*value))
      fail(ErrorKind::data, "non-finite value at data row " + std::to_string(data_row));
    raw.push_back(*value);
  }

  ReturnSeries series;
  series.label = column_name.empty() ? std::move(label) : column_name;
  series.values = transform == Transform::log_return_pct ? log_returns_pct(raw) : std::move(raw);
  return series;
}

std::vector<double> log_returns_pct(std::span<const double> prices) {
  for (std::size_t i = 0; i < prices.size(); ++i)
    if (!(prices[i] > 0.0))
      fail(ErrorKind::data, "non-positive price at data row " + std::to_string(i) +
                                " under log-return transform");
  std::vector<double> out;
  if (prices.size() < 2) return out;
  out.reserve(prices.size() - 1);
  for (std::size_t i = 1; i < prices.size(); ++i)
    out.push_back(100.0 * (std::log(prices[i]) - std::log(prices[i - 1])));
  return out;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

void write_series_csv(const ReturnSeries& series, std::ostream& out) {
  out << (series.label.empty() ? "value" : series.label) << '\n';
  for (double v : series.values) out << format_double(v) << '\n';
}

double sample_variance(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) fail(ErrorKind::invalid_argument, "sample variance needs at least 2 values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(n);
}

void require_estimable(const ReturnSeries& series) {
  if (series.size() < kMinEstimationLength)
    fail(ErrorKind::data, "series has " + std::to_string(series.size()) +
                              " observations; estimation needs at least " +
                              std::to_string(kMinEstimationLength));
  for (std::size_t i = 0; i < series.size(); ++i)
    if (!std::isfinite(series.values[i]))
      fail(ErrorKind::data, "non-finite value at index " + std::to_string(i));
}

}  // namespace sgarch
