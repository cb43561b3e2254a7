#pragma once

// Minimal RFC-4180-style delimited text: quoted fields, doubled quotes,
// CRLF tolerance. Enough for industry tables whose names contain commas.

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cardsel/error.hpp"

namespace cardsel {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline void strip_bom(std::string& text) {
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
      static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF)
    text.erase(0, 3);
}

}  // namespace detail

inline CsvTable parse_csv(std::string text, char delim = ',') {
  detail::strip_bom(text);
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool any_content = false;

  auto end_field = [&] {
    record.push_back(field_was_quoted ? field : detail::trim(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = record.size() == 1 && record[0].empty();
    if (!blank) records.push_back(std::move(record));
    record.clear();
    any_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && detail::trim(field).empty()) {
      field.clear();
      in_quotes = true;
      field_was_quoted = true;
      any_content = true;
    } else if (c == delim) {
      end_field();
      any_content = true;
    } else if (c == '\n') {
      end_record();
    } else if (c != '\r') {
      field.push_back(c);
      any_content = true;
    }
  }
  if (in_quotes) fail(ErrorKind::Io, "unterminated quoted field in delimited input");
  if (any_content || !field.empty()) end_record();

  CsvTable table;
  if (records.empty()) return table;
  table.header = std::move(records.front());
  table.rows.assign(std::make_move_iterator(records.begin() + 1), std::make_move_iterator(records.end()));
  for (std::size_t r = 0; r < table.rows.size(); ++r)
    if (table.rows[r].size() != table.header.size())
      fail(ErrorKind::Io, "row " + std::to_string(r + 2) + " has " + std::to_string(table.rows[r].size()) +
                              " fields, header has " + std::to_string(table.header.size()));
  return table;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline CsvTable read_csv(const std::string& path) { return parse_csv(read_text_file(path)); }

inline std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

/// Shortest representation that round-trips to the same double (>= 17 sig.
/// digits whenever needed), so emitted numeric files never lose precision.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, std::string_view what) {
  const std::string t = detail::trim(text);
  double value = 0.0;
  const auto* first = t.data();
  const auto* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, value);
  if (t.empty() || res.ec != std::errc{} || res.ptr != last)
    fail(ErrorKind::InvalidInput, "cannot parse " + std::string(what) + " value '" + t + "' as a number");
  return value;
}

}  // namespace cardsel
