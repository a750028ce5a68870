#include "dephasim/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dephasim {

std::string format_g17(double x) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

CsvError::CsvError(const std::filesystem::path& file, int row, const std::string& msg)
    : std::runtime_error(file.string() + ":" + std::to_string(row) + ": " + msg), row_(row) {}

std::optional<std::size_t> CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  return std::nullopt;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_double(const std::filesystem::path& file, int row, const std::string& s) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw CsvError(file, row, "cannot parse numeric field '" + s + "'");
  return v;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw CsvError(file, 0, "cannot open file");
  CsvTable table;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_fields(line);
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size())
      throw CsvError(file, row,
                     "expected " + std::to_string(table.header.size()) + " fields, got " +
                         std::to_string(fields.size()));
    std::vector<double> values(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i)
      values[i] = parse_double(file, row, fields[i]);
    table.rows.push_back(std::move(values));
  }
  if (table.header.empty()) throw CsvError(file, row, "missing header row");
  return table;
}

void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(file);
  if (!out) throw CsvError(file, 0, "cannot open file for writing");
  for (std::size_t i = 0; i < header.size(); ++i)
    out << header[i] << (i + 1 < header.size() ? "," : "\n");
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i)
      out << format_g17(r[i]) << (i + 1 < r.size() ? "," : "\n");
  }
  if (!out) throw CsvError(file, 0, "write failed");
}

Dataset load_dataset(const std::filesystem::path& file,
                     const std::optional<std::string>& value_column) {
  const CsvTable table = read_csv(file);
  auto t_col = table.column("t_s");
  if (!t_col) t_col = table.column("tau_pi_s");
  if (!t_col) throw CsvError(file, 1, "missing time column 't_s' (or 'tau_pi_s')");

  std::optional<std::size_t> y_col;
  if (value_column) {
    y_col = table.column(*value_column);
    if (!y_col) throw CsvError(file, 1, "missing value column '" + *value_column + "'");
  } else {
    for (const char* name : {"p3", "v", "p3_analytic"})
      if ((y_col = table.column(name))) break;
    if (!y_col) throw CsvError(file, 1, "missing value column ('p3', 'v' or 'p3_analytic')");
  }
  const auto w_col = table.column("weight");

  Dataset d;
  double prev_t = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    DataPoint p{r[*t_col], r[*y_col], w_col ? r[*w_col] : 1.0};
    const int row = static_cast<int>(i) + 2;  // header is row 1
    if (!std::isfinite(p.t) || !std::isfinite(p.y))
      throw CsvError(file, row, "non-finite value");
    if (p.t <= prev_t) throw CsvError(file, row, "times must be strictly increasing");
    if (w_col && !(p.weight > 0.0)) throw CsvError(file, row, "weights must be > 0");
    prev_t = p.t;
    d.points.push_back(p);
  }
  if (d.points.empty()) throw CsvError(file, 1, "no data rows");
  return d;
}

TimeSeries load_timeseries(const std::filesystem::path& file) {
  const CsvTable table = read_csv(file);
  const auto t_col = table.column("time_s");
  const auto v_col = table.column("value");
  if (!t_col || !v_col) throw CsvError(file, 1, "need columns 'time_s' and 'value'");
  if (table.rows.size() < 4) throw CsvError(file, 1, "need at least 4 samples");

  TimeSeries s;
  s.values.reserve(table.rows.size());
  const double t0 = table.rows[0][*t_col];
  const double t1 = table.rows[1][*t_col];
  s.sample_interval = t1 - t0;
  if (!(s.sample_interval > 0.0)) throw CsvError(file, 3, "sample times must increase");
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (i > 0) {
      const double dt = table.rows[i][*t_col] - table.rows[i - 1][*t_col];
      if (std::abs(dt - s.sample_interval) > 1e-6 * s.sample_interval)
        throw CsvError(file, static_cast<int>(i) + 2, "sampling must be uniform");
    }
    s.values.push_back(table.rows[i][*v_col]);
  }
  return s;
}

}  // namespace dephasim
