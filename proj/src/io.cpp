// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "segflow/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace segflow {

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path + ": cannot open for writing");
  return out;
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw IoError("missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

double Table::number(std::size_t row, const std::string& name) const {
  const std::string& cell = rows.at(row).at(column(name));
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != cell.size()) throw IoError("column '" + name + "': not a number: '" + cell + "'");
  return v;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const Table& table) {
  std::ofstream out = open_out(path);
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  };
  emit(table.header);
  for (const auto& row : table.rows) emit(row);
}

Table read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path + ": cannot open");
  Table t;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_row(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw IoError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                    " columns, got " + std::to_string(cells.size()));
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw IoError(path + ": empty file");
  return t;
}

std::string format_text_table(const Table& table) {
  std::vector<std::size_t> width(table.header.size(), 0);
  for (std::size_t c = 0; c < width.size(); ++c) {
    width[c] = table.header[c].size();
    for (const auto& row : table.rows) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << (c ? "  " : "");
      out << std::string(width[c] - row[c].size(), ' ') << row[c];
    }
    out << '\n';
  };
  emit(table.header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  out << std::string(total + 2 * (width.empty() ? 0 : width.size() - 1), '-') << '\n';
  for (const auto& row : table.rows) emit(row);
  return out.str();
}

void write_field_csv(const std::string& path, const SpatialGrid& space, const StateField& field) {
  std::ofstream out = open_out(path);
  const bool two_d = space.dim == 2;
  out << (two_d ? "component,t_index,x_index,y_index,value\n" : "component,t_index,x_index,value\n");
  const Index row = space.row_length();
  for (int c = 0; c < field.k; ++c)
    for (int j = 0; j < field.nt; ++j)
      for (Index s = 0; s < field.ns; ++s) {
        out << c << ',' << j << ',' << s % row << ',';
        if (two_d) out << s / row << ',';
        out << format_number(field(c, j, s)) << '\n';
      }
}

StateField read_field_csv(const std::string& path, const SpatialGrid& space) {
  const Table t = read_csv(path);
  const bool two_d = space.dim == 2;
  const std::size_t ic = t.column("component"), it = t.column("t_index"), ix = t.column("x_index");
  t.column("value");
  const std::size_t iy = two_d ? t.column("y_index") : 0;
  auto to_int = [&](const std::string& cell) {
    std::size_t pos = 0;
    long v = -1;
    try {
      v = std::stol(cell, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != cell.size() || v < 0) throw IoError(path + ": bad index '" + cell + "'");
    return v;
  };
  int k = 0, nt = 0;
  for (const auto& r : t.rows) {
    k = std::max<int>(k, static_cast<int>(to_int(r[ic])) + 1);
    nt = std::max<int>(nt, static_cast<int>(to_int(r[it])) + 1);
  }
  if (k == 0) throw IoError(path + ": no data rows");
  StateField field(k, nt, space.size());
  std::vector<char> seen(static_cast<std::size_t>(field.values.size()), 0);
  const Index row = space.row_length();
  for (std::size_t n = 0; n < t.rows.size(); ++n) {
    const auto& r = t.rows[n];
    const long x = to_int(r[ix]);
    const long y = two_d ? to_int(r[iy]) : 0;
    if (x >= row || (two_d && y >= static_cast<long>(space.ny) + 2))
      throw IoError(path + ": node index outside the grid");
    const Index s = static_cast<Index>(y) * row + x;
    const Index idx = field.index(static_cast<int>(to_int(r[ic])), static_cast<int>(to_int(r[it])), s);
    if (seen[static_cast<std::size_t>(idx)]) throw IoError(path + ": duplicate entry");
    seen[static_cast<std::size_t>(idx)] = 1;
    field.values[idx] = t.number(n, "value");
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw IoError(path + ": incomplete field");
  return field;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out = open_out(path);
  out << text;
}

}  // namespace segflow
