#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace qscan {

// Line reader over plain or gzip files (sniffs the 1f 8b magic). Lines are
// returned without the trailing newline; CRLF is tolerated.
class LineReader {
public:
  explicit LineReader(const std::string& path);
  ~LineReader();
  LineReader(LineReader&&) noexcept;
  LineReader& operator=(LineReader&&) noexcept;

  // False at end of input.
  bool next(std::string& line);
  long line_number() const { return line_no_; }
  const std::string& path() const { return path_; }

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string path_;
  long line_no_ = 0;
};

// Deterministic gzip writer: fixed header (mtime 0), so identical content
// always produces identical bytes. zlib's gzopen stamps the current time
// into the header, which would break byte-for-byte reproducibility.
class GzWriter {
public:
  explicit GzWriter(const std::string& path);
  ~GzWriter();
  GzWriter(const GzWriter&) = delete;
  GzWriter& operator=(const GzWriter&) = delete;

  void write(const char* data, size_t len);
  void write(const std::string& s) { write(s.data(), s.size()); }
  void close();  // flushes; called by the destructor if needed

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace qscan
