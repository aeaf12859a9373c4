// Copyright 2026 The prior-forge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "prior_forge/error.hpp"
#include "prior_forge/format.hpp"

namespace prior_forge {

/// One CSV cell: a number, a string, or empty.
class Cell {
 public:
  Cell() = default;
  Cell(double v) : text_(format_double(v)) {}  // NOLINT(google-explicit-constructor)
  Cell(long long v) : text_(std::to_string(v)) {}  // NOLINT(google-explicit-constructor)
  Cell(std::size_t v) : text_(std::to_string(v)) {}  // NOLINT(google-explicit-constructor)
  Cell(int v) : text_(std::to_string(v)) {}  // NOLINT(google-explicit-constructor)
  Cell(bool v) : text_(v ? "true" : "false") {}  // NOLINT(google-explicit-constructor)
  Cell(std::string v) : text_(std::move(v)) {}  // NOLINT(google-explicit-constructor)
  Cell(const char* v) : text_(v) {}  // NOLINT(google-explicit-constructor)
  template <class T>
  Cell(const std::optional<T>& v) {  // NOLINT(google-explicit-constructor)
    if (v) text_ = Cell(*v).text_;
  }

  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

using Row = std::vector<Cell>;

/// Header-first CSV; an optional preamble goes on one leading '#' line.
struct Table {
  std::vector<std::string> columns;
  std::vector<Row> rows;
  std::string preamble;
};

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline std::string render_csv(const Table& t) {
  if (t.columns.empty()) throw InputError("table: no columns");
  std::ostringstream out;
  if (!t.preamble.empty()) out << "# " << t.preamble << '\n';
  for (std::size_t j = 0; j < t.columns.size(); ++j) {
    out << (j ? "," : "") << detail::csv_field(t.columns[j]);
  }
  out << '\n';
  for (const auto& row : t.rows) {
    if (row.size() != t.columns.size()) {
      throw InputError("table: row has " + std::to_string(row.size()) + " cells, expected " +
                       std::to_string(t.columns.size()));
    }
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << detail::csv_field(row[j].text());
    out << '\n';
  }
  return out.str();
}

/// Writes `content` to a sibling temporary file and renames it over `path`.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot write '" + tmp.string() + "'");
    f << content;
    f.flush();
    if (!f) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw InputError("cannot write '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw InputError("cannot write '" + path.string() + "': " + ec.message());
  }
}

inline void emit_table(const Table& t, const std::filesystem::path& path) {
  write_atomic(path, render_csv(t));
}

}  // namespace prior_forge
