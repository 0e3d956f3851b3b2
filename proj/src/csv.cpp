// Copyright 2026 The gridattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "gridattn/csv.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "gridattn/error.hpp"

namespace gridattn {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.emplace_back(trim(line.substr(start)));
      break;
    }
    out.emplace_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

std::size_t CsvTable::column(std::string_view name, std::string_view context) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ContractError(std::string(context) + ": missing column '" + std::string(name) + "'");
}

CsvTable read_csv(const std::filesystem::path& path, std::string_view context) {
  std::ifstream in(path);
  if (!in) throw ContractError(std::string(context) + ": cannot open " + path.string());
  CsvTable table;
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (first) {
      table.header = std::move(fields);
      first = false;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw ContractError(std::string(context) + ": " + path.string() + " line " + std::to_string(line_no) +
                          " has " + std::to_string(fields.size()) + " fields, header has " +
                          std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (first) throw ContractError(std::string(context) + ": " + path.string() + " is empty");
  return table;
}

double parse_double(std::string_view text, std::string_view context) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ContractError(std::string(context) + ": '" + std::string(text) + "' is not a number");
  }
  return v;
}

long long parse_int(std::string_view text, std::string_view context) {
  long long v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ContractError(std::string(context) + ": '" + std::string(text) + "' is not an integer");
  }
  return v;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ContractError("cli::write: cannot open " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ContractError("cli::write: failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace gridattn
