#include "dferr/report.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace dferr {

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> columns = {
      "scheme", "kind",      "phi",       "chi",       "n",         "N",         "estimate",
      "stderr", "reference", "z_score",   "test_name", "statistic", "threshold", "pass"};
  return columns;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

namespace {

std::string cell(const std::optional<double>& x) { return x ? format_double(*x) : std::string(); }
std::string cell(const std::optional<long long>& x) { return x ? std::to_string(*x) : std::string(); }

}  // namespace

void write_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  const auto& cols = report_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const ReportRow& r : rows) {
    out << csv_field(r.scheme) << ',' << csv_field(r.kind) << ',' << csv_field(r.phi) << ','
        << csv_field(r.chi) << ',' << cell(r.n) << ',' << cell(r.samples) << ','
        << cell(r.estimate) << ',' << cell(r.std_error) << ',' << cell(r.reference) << ','
        << cell(r.z_score) << ',' << csv_field(r.test_name) << ',' << cell(r.statistic) << ','
        << cell(r.threshold) << ',' << (r.pass ? (*r.pass ? "true" : "false") : "") << '\n';
  }
}

std::string to_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream os;
  write_csv(os, rows);
  return os.str();
}

}  // namespace dferr
