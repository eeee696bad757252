#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rescnn::csv {

using Row = std::vector<std::string>;

/// One record plus the physical line it started on (1-based).
struct Record {
  Row fields;
  std::size_t line = 0;
};

struct ParseIssue {
  std::size_t line;
  std::string message;
};

/// Streaming RFC 4180 reader: comma separated, double-quoted fields may contain
/// commas, doubled quotes and newlines. CRLF and LF line ends are accepted.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  /// Reads the next record. Returns false at end of input. A malformed record
  /// (unterminated quote, stray quote) is reported through `issue` and skipped.
  bool next(Record& out, std::vector<ParseIssue>& issues);

 private:
  std::istream& in_;
  std::size_t line_ = 1;
};

/// Quotes a field if it contains a comma, quote, CR or LF.
std::string escape(const std::string& field);
std::string join(const Row& fields);

}  // namespace rescnn::csv
