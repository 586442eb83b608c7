// Copyright 2026 The vcmarkov Authors.
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

// Minimal RFC 4180 CSV: quoted fields, doubled quotes, CRLF or LF records.
// Lines starting with '#' outside a quoted field are comments.

#pragma once

#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "vcmarkov/error.hpp"

namespace vcmarkov::csv {

using Row = std::vector<std::string>;

inline std::vector<Row> parse(std::string_view text) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool quoted = false, field_started = false, at_line_start = true;
  std::size_t line = 1;
  const auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  const auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
    at_line_start = true;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    if (at_line_start && c == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
      ++line;
      continue;
    }
    at_line_start = false;
    switch (c) {
      case '"':
        if (field_started)
          throw DataError("stray quote in CSV field at line " + std::to_string(line));
        quoted = true;
        field_started = true;
        break;
      case ',': end_field(); break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        field.push_back(c);
        field_started = true;
        break;
      case '\n':
        end_row();
        ++line;
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (quoted) throw DataError("unterminated quoted CSV field");
  if (!at_line_start) end_row();
  return rows;
}

inline std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos &&
      (field.empty() || field.front() != '#'))
    return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

/// Shortest round-trip decimal representation of a double.
inline std::string number(double v) {
  char buf[32];
  for (int precision = 6; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}

  Writer& field(std::string_view s) {
    sep();
    os_ << escape(s);
    return *this;
  }
  Writer& field(const char* s) { return field(std::string_view(s)); }
  Writer& field(const std::string& s) { return field(std::string_view(s)); }
  Writer& field(double v) {
    sep();
    os_ << number(v);
    return *this;
  }
  template <typename Int>
    requires std::is_integral_v<Int>
  Writer& field(Int v) {
    sep();
    if constexpr (std::is_same_v<Int, bool>)
      os_ << (v ? "true" : "false");
    else
      os_ << v;
    return *this;
  }
  Writer& row(const std::vector<std::string>& fields) {
    for (const auto& f : fields) field(f);
    return end();
  }
  Writer& end() {
    os_ << '\n';
    first_ = true;
    return *this;
  }
  Writer& comment(std::string_view text) {
    os_ << '#' << ' ' << text << '\n';
    return *this;
  }

 private:
  void sep() {
    if (!first_) os_ << ',';
    first_ = false;
  }
  std::ostream& os_;
  bool first_ = true;
};

/// Maps header names to column indices of a parsed table.
class Table {
 public:
  explicit Table(std::vector<Row> rows, std::string_view what = "table") : what_(what) {
    if (rows.empty()) throw DataError(what_ + " is empty");
    header_ = std::move(rows.front());
    rows.erase(rows.begin());
    rows_ = std::move(rows);
  }
  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header_.size(); ++i)
      if (header_[i] == name) return i;
    throw DataError(what_ + " has no column '" + std::string(name) + "'");
  }
  bool has_column(std::string_view name) const {
    for (const auto& h : header_)
      if (h == name) return true;
    return false;
  }
  const std::vector<Row>& rows() const noexcept { return rows_; }
  const std::string& at(const Row& row, std::size_t col) const {
    if (col >= row.size()) throw DataError(what_ + ": short row");
    return row[col];
  }

 private:
  std::string what_;
  Row header_;
  std::vector<Row> rows_;
};

}  // namespace vcmarkov::csv
