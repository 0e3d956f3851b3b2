// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gridattn {

/// Plain comma-separated table. Fields are unquoted; the first line is the
/// header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws ContractError naming `context` when
  /// the column is absent.
  std::size_t column(std::string_view name, std::string_view context) const;
};

CsvTable read_csv(const std::filesystem::path& path, std::string_view context);
std::vector<std::string> split_csv_line(std::string_view line);

double parse_double(std::string_view text, std::string_view context);
long long parse_int(std::string_view text, std::string_view context);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace gridattn
