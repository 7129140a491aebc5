#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "modalkit/density.hpp"
#include "modalkit/modes.hpp"

namespace modalkit::io {

// Problems with input files (missing, malformed, wrong columns).
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Comma-separated numeric table with a mandatory header row. '.' decimal
// separator, UTF-8, no quoting. Unknown columns are carried along.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  // row-major, aligned with columns

  // index of a named column; -1 when absent
  int column_index(const std::string& name) const;
  std::vector<double> column(const std::string& name) const;  // throws data_error
};

Table read_table(const std::string& path);
std::string to_csv(const Table& table);  // throws on non-finite values
void write_table(const std::string& path, const Table& table);

// typed readers over the fixed column names
density::Sample read_sample(const Table& table);             // x, y
density::CensoredSample read_censored(const Table& table);   // x, y, delta
// w, y; the error distribution is supplied by the caller
density::ContaminatedSample read_contaminated(
    const Table& table, const kernels::ErrorDistribution& error);

// long-format modal curve: x, mode_index, y, density. mode_index -1 holds an
// optional single-valued companion curve, -2 marks a grid point without modes.
modes::ModalCurve read_curve(const std::string& path);
Table curve_table(const modes::ModalCurve& curve,
                  const modes::ModalCurve* unimodal = nullptr);
void write_curve(const std::string& path, const modes::ModalCurve& curve,
                 const modes::ModalCurve* unimodal = nullptr);

// %.17g, matching the JSON number format
std::string format_double(double v);

}  // namespace modalkit::io
