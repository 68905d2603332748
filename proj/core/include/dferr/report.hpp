#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace dferr {

/// One line of a results table. Estimation rows fill the first block,
/// diagnostic rows the second; unset fields print as empty cells.
struct ReportRow {
  std::string scheme;
  std::string kind;
  std::string phi;
  std::string chi;
  std::optional<long long> n;
  std::optional<long long> samples;
  std::optional<double> estimate;
  std::optional<double> std_error;
  std::optional<double> reference;
  std::optional<double> z_score;

  std::string test_name;
  std::optional<double> statistic;
  std::optional<double> threshold;
  std::optional<bool> pass;
};

/// Column names in output order.
const std::vector<std::string>& report_columns();

/// Shortest round-trip decimal form, independent of the locale. NaN and
/// infinities print as nan, inf, -inf.
std::string format_double(double x);

/// Quotes a CSV field when it contains a comma, quote or line break.
std::string csv_field(const std::string& text);

void write_csv(std::ostream& out, const std::vector<ReportRow>& rows);
std::string to_csv(const std::vector<ReportRow>& rows);

}  // namespace dferr
