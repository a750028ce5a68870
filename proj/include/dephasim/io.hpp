#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dephasim/fit.hpp"
#include "dephasim/noise.hpp"

// CSV readers/writers. Machine output keeps full round-trippable precision
// (17 significant digits) and is locale-independent.

namespace dephasim {

std::string format_g17(double x);

// Parse/IO failures carry the 1-based row for error messages.
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::filesystem::path& file, int row, const std::string& msg);
  int row() const { return row_; }

 private:
  int row_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::optional<std::size_t> column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& file);
void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// Fringe/visibility data: time column "t_s" (or "tau_pi_s") plus a value
// column "p3" / "v" and an optional "weight". Simulator output is accepted
// too; `value_column` selects among its columns (default "p3_analytic").
Dataset load_dataset(const std::filesystem::path& file,
                     const std::optional<std::string>& value_column = std::nullopt);

// Monitor-signal record: columns "time_s,value" with uniform sampling.
TimeSeries load_timeseries(const std::filesystem::path& file);

}  // namespace dephasim
