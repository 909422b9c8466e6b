#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "colwin/value.hpp"

namespace colwin {

/// Streaming RFC-4180 record reader: quoted fields may contain commas,
/// doubled quotes and line breaks. Unquoted CR before LF is dropped.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  /// Next record, or nullopt at end of input. Blank lines are skipped.
  std::optional<std::vector<std::string>> next() {
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool quoted_field = false;
    bool any = false;
    record_line_ = line_ + 1;
    int c;
    while ((c = in_.get()) != std::char_traits<char>::eof()) {
      any = true;
      char ch = static_cast<char>(c);
      if (in_quotes) {
        if (ch == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field += '"';
          } else {
            in_quotes = false;
          }
        } else {
          if (ch == '\n') ++line_;
          field += ch;
        }
        continue;
      }
      if (ch == '"') {
        if (!field.empty() || quoted_field) throw ValidationError(where(fields.size()) + ": stray quote in unquoted field");
        in_quotes = true;
        quoted_field = true;
      } else if (ch == ',') {
        fields.push_back(std::move(field));
        field.clear();
        quoted_field = false;
      } else if (ch == '\n') {
        ++line_;
        if (fields.empty() && field.empty() && !quoted_field) {
          record_line_ = line_ + 1;
          any = false;
          continue;
        }
        fields.push_back(std::move(field));
        return fields;
      } else if (ch == '\r' && in_.peek() == '\n') {
        continue;
      } else {
        field += ch;
      }
    }
    if (in_quotes) throw ValidationError(where(fields.size()) + ": unterminated quoted field");
    if (!any || (fields.empty() && field.empty() && !quoted_field)) return std::nullopt;
    ++line_;
    fields.push_back(std::move(field));
    return fields;
  }

  /// 1-based line on which the most recently returned record started.
  [[nodiscard]] std::size_t record_line() const { return record_line_; }

 private:
  std::string where(std::size_t column_index) const {
    return "line " + std::to_string(record_line_) + ", column " + std::to_string(column_index + 1);
  }

  std::istream& in_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
};

/// Quotes a field only when it needs it.
inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace colwin
