#include <zlib.h>

#include <charconv>

#include "cdgnn/text_io.hpp"

namespace cdgnn {

struct LineReader::Impl {
  gzFile file = nullptr;
};

LineReader::LineReader(const std::string& path) : impl_(std::make_unique<Impl>()), path_(path) {
  impl_->file = gzopen(path.c_str(), "rb");
  if (impl_->file == nullptr) throw ParseError("cannot open " + path);
}

LineReader::~LineReader() {
  if (impl_ && impl_->file) gzclose(impl_->file);
}

bool LineReader::next(std::string& line) {
  line.clear();
  char buf[4096];
  bool got_any = false;
  while (gzgets(impl_->file, buf, sizeof(buf)) != nullptr) {
    got_any = true;
    line.append(buf);
    if (!line.empty() && line.back() == '\n') break;
  }
  if (!got_any) return false;
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
  ++line_no_;
  return true;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool is_comment_or_blank(const std::string& line) {
  for (char c : line) {
    if (c == ' ' || c == '\t') continue;
    return c == '#';
  }
  return true;
}

long long parse_id(const std::string& field, const LineReader& where) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size() || v < 0) {
    throw ParseError(where.path() + ":" + std::to_string(where.line_number()) +
                     ": expected a non-negative integer, got '" + field + "'");
  }
  return v;
}

}  // namespace cdgnn
