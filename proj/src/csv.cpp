#include "rescnn/csv.hpp"

#include <istream>

namespace rescnn::csv {

bool Reader::next(Record& out, std::vector<ParseIssue>& issues) {
  for (;;) {
    if (in_.peek() == std::char_traits<char>::eof()) return false;
    out.fields.clear();
    out.line = line_;
    std::string field;
    bool quoted = false;     // inside a quoted section
    bool was_quoted = false; // current field started with a quote
    bool broken = false;
    std::string problem;
    int ch;
    for (;;) {
      ch = in_.get();
      if (ch == std::char_traits<char>::eof()) {
        if (quoted) {
          broken = true;
          problem = "unterminated quoted field";
        }
        break;
      }
      const char c = static_cast<char>(ch);
      if (quoted) {
        if (c == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field += '"';
          } else {
            quoted = false;
          }
        } else {
          if (c == '\n') ++line_;
          field += c;
        }
        continue;
      }
      if (c == ',') {
        out.fields.push_back(std::move(field));
        field.clear();
        was_quoted = false;
      } else if (c == '\n') {
        ++line_;
        break;
      } else if (c == '\r') {
        if (in_.peek() == '\n') continue;
        ++line_;
        break;
      } else if (c == '"') {
        if (field.empty() && !was_quoted) {
          quoted = true;
          was_quoted = true;
        } else if (!broken) {
          broken = true;
          problem = "stray quote inside unquoted field";
        }
      } else {
        if (was_quoted && !broken) {
          broken = true;
          problem = "text after closing quote";
        }
        field += c;
      }
    }
    out.fields.push_back(std::move(field));
    if (broken) {
      issues.push_back({out.line, problem});
      if (ch == std::char_traits<char>::eof()) return false;
      continue;
    }
    if (out.fields.size() == 1 && out.fields[0].empty() && !was_quoted) continue;  // blank line
    return true;
  }
}

std::string escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string s = "\"";
  for (char c : field) {
    if (c == '"') s += '"';
    s += c;
  }
  return s + '"';
}

std::string join(const Row& fields) {
  std::string s;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) s += ',';
    s += escape(fields[i]);
  }
  return s;
}

}  // namespace rescnn::csv
