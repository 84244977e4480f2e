// Copyright 2026 The segflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "segflow/grid.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace segflow {

/// Input file problem; the message names the file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Column-oriented text table; cells are kept as strings.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a column; throws IoError when absent.
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
};

/// 17 significant digits.
std::string format_number(double v);

void write_csv(const std::string& path, const Table& table);

/// Throws IoError for a missing file, a ragged row or an empty file.
Table read_csv(const std::string& path);

/// Right-aligned columns with a rule under the header.
std::string format_text_table(const Table& table);

/// Columns component,t_index,x_index[,y_index],value over every node.
void write_field_csv(const std::string& path, const SpatialGrid& space, const StateField& field);

/// Inverse of write_field_csv; every (component, t_index, node) must appear once.
StateField read_field_csv(const std::string& path, const SpatialGrid& space);

void write_text(const std::string& path, const std::string& text);

}  // namespace segflow
