#include "modalkit/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace modalkit::io {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

double parse_field(const std::string& field, std::size_t line_no) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc{} || result.ptr != end) {
    throw data_error("line " + std::to_string(line_no) +
                     ": cannot parse numeric field '" + field + "'");
  }
  return value;
}

void require_finite_cell(double v) {
  if (!std::isfinite(v)) {
    throw std::runtime_error("refusing to write non-finite value to CSV");
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int Table::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<double> Table::column(const std::string& name) const {
  const int idx = column_index(name);
  if (idx < 0) {
    throw data_error("required column '" + name + "' is missing");
  }
  std::vector<double> out(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out[r] = rows[r][static_cast<std::size_t>(idx)];
  }
  return out;
}

Table read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw data_error("cannot open input file: " + path);
  }
  Table table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_line(line);
    if (table.columns.empty()) {
      table.columns = std::move(fields);
      continue;
    }
    if (fields.size() != table.columns.size()) {
      throw data_error("line " + std::to_string(line_no) +
                       ": expected " + std::to_string(table.columns.size()) +
                       " fields, found " + std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      row[c] = parse_field(fields[c], line_no);
    }
    table.rows.push_back(std::move(row));
  }
  if (table.columns.empty()) {
    throw data_error("input file has no header row: " + path);
  }
  if (table.rows.empty()) {
    throw data_error("input file has no data rows: " + path);
  }
  return table;
}

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c > 0) out += ',';
    out += table.columns[c];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      require_finite_cell(row[c]);
      if (c > 0) out += ',';
      out += format_double(row[c]);
    }
    out += '\n';
  }
  return out;
}

void write_table(const std::string& path, const Table& table) {
  std::ofstream out(path);
  if (!out) {
    throw data_error("cannot open output file: " + path);
  }
  out << to_csv(table);
  if (!out) {
    throw data_error("failed to write output file: " + path);
  }
}

density::Sample read_sample(const Table& table) {
  try {
    return density::Sample(table.column("x"), table.column("y"));
  } catch (const std::invalid_argument& e) {
    throw data_error(e.what());
  }
}

density::CensoredSample read_censored(const Table& table) {
  const auto delta = table.column("delta");
  std::vector<std::uint8_t> event(delta.size());
  for (std::size_t i = 0; i < delta.size(); ++i) {
    if (delta[i] != 0.0 && delta[i] != 1.0) {
      throw data_error("delta column must contain only 0 and 1");
    }
    event[i] = delta[i] == 1.0 ? 1 : 0;
  }
  try {
    return density::CensoredSample(table.column("x"), table.column("y"),
                                   std::move(event));
  } catch (const std::invalid_argument& e) {
    throw data_error(e.what());
  }
}

density::ContaminatedSample read_contaminated(
    const Table& table, const kernels::ErrorDistribution& error) {
  try {
    return density::ContaminatedSample(table.column("w"), table.column("y"),
                                       error);
  } catch (const std::invalid_argument& e) {
    throw data_error(e.what());
  }
}

modes::ModalCurve read_curve(const std::string& path) {
  const Table table = read_table(path);
  const auto xs = table.column("x");
  const auto idx = table.column("mode_index");
  const auto ys = table.column("y");
  const int density_col = table.column_index("density");

  modes::ModalCurve curve;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (idx[r] == -1.0) continue;  // single-valued companion rows
    if (curve.grid.empty() || xs[r] != curve.grid.back()) {
      if (!curve.grid.empty() && xs[r] <= curve.grid.back()) {
        throw data_error("curve rows must be grouped by increasing x");
      }
      curve.grid.push_back(xs[r]);
      curve.sets.emplace_back();
      curve.sets.back().x = xs[r];
    }
    if (idx[r] == -2.0) {
      curve.sets.back().flagged = true;  // explicit empty-set marker
      continue;
    }
    modes::ModePoint point;
    point.y = ys[r];
    if (density_col >= 0) {
      point.density = table.rows[r][static_cast<std::size_t>(density_col)];
    }
    curve.sets.back().points.push_back(point);
  }
  if (curve.grid.empty()) {
    throw data_error("curve file contains no grid points: " + path);
  }
  return curve;
}

Table curve_table(const modes::ModalCurve& curve,
                  const modes::ModalCurve* unimodal) {
  Table table;
  table.columns = {"x", "mode_index", "y", "density"};
  for (std::size_t g = 0; g < curve.size(); ++g) {
    const auto& set = curve.sets[g];
    if (set.empty()) {
      table.rows.push_back({curve.grid[g], -2.0, 0.0, 0.0});
      continue;
    }
    for (std::size_t m = 0; m < set.points.size(); ++m) {
      table.rows.push_back({curve.grid[g], static_cast<double>(m),
                            set.points[m].y, set.points[m].density});
    }
  }
  if (unimodal != nullptr) {
    for (std::size_t g = 0; g < unimodal->size(); ++g) {
      const auto& set = unimodal->sets[g];
      if (set.empty()) continue;
      table.rows.push_back(
          {unimodal->grid[g], -1.0, set.points[0].y, set.points[0].density});
    }
  }
  return table;
}

void write_curve(const std::string& path, const modes::ModalCurve& curve,
                 const modes::ModalCurve* unimodal) {
  write_table(path, curve_table(curve, unimodal));
}

}  // namespace modalkit::io
