#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace cdgnn {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Line-by-line reader for plain or gzip-compressed text (zlib detects the
/// format). Strips trailing '\r' and '\n'.
class LineReader {
 public:
  explicit LineReader(const std::string& path);
  ~LineReader();
  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  bool next(std::string& line);
  std::size_t line_number() const noexcept { return line_no_; }
  const std::string& path() const noexcept { return path_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string path_;
  std::size_t line_no_ = 0;
};

/// Splits on tabs and spaces, dropping empty fields.
std::vector<std::string> split_fields(const std::string& line);

/// True for blank lines and lines whose first non-space character is '#'.
bool is_comment_or_blank(const std::string& line);

/// Parses a non-negative integer id; throws ParseError naming path:line.
long long parse_id(const std::string& field, const LineReader& where);

}  // namespace cdgnn
