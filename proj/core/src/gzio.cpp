#include "qscan/gzio.hpp"

#include <zlib.h>

#include <cerrno>
#include <cstdio>
#include <cstring>

#include "qscan/errors.hpp"

namespace qscan {

namespace {
constexpr size_t kBufSize = 1 << 16;
}

struct LineReader::Impl {
  FILE* plain = nullptr;
  gzFile gz = nullptr;
  std::vector<char> buf;
  size_t pos = 0, avail = 0;
  bool eof = false;

  ~Impl() {
    if (plain) std::fclose(plain);
    if (gz) gzclose(gz);
  }

  bool refill(const std::string& path) {
    if (eof) return false;
    pos = 0;
    if (gz) {
      const int got = gzread(gz, buf.data(), static_cast<unsigned>(buf.size()));
      if (got < 0) {
        int errnum = 0;
        const char* msg = gzerror(gz, &errnum);
        throw IoError("reading " + path + ": " + (msg ? msg : "gzip error"));
      }
      avail = static_cast<size_t>(got);
    } else {
      avail = std::fread(buf.data(), 1, buf.size(), plain);
      if (avail < buf.size() && std::ferror(plain)) {
        throw IoError("reading " + path + ": " + std::strerror(errno));
      }
    }
    if (avail == 0) eof = true;
    return avail > 0;
  }
};

LineReader::LineReader(const std::string& path) : impl_(new Impl), path_(path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open " + path + ": " + std::strerror(errno));
  unsigned char magic[2] = {0, 0};
  const size_t got = std::fread(magic, 1, 2, f);
  const bool gzipped = got == 2 && magic[0] == 0x1f && magic[1] == 0x8b;
  if (gzipped) {
    std::fclose(f);
    impl_->gz = gzopen(path.c_str(), "rb");
    if (!impl_->gz) throw IoError("cannot open " + path + " as gzip");
    gzbuffer(impl_->gz, kBufSize);
  } else {
    std::rewind(f);
    impl_->plain = f;
  }
  impl_->buf.resize(kBufSize);
}

LineReader::~LineReader() = default;
LineReader::LineReader(LineReader&&) noexcept = default;
LineReader& LineReader::operator=(LineReader&&) noexcept = default;

bool LineReader::next(std::string& line) {
  line.clear();
  Impl& im = *impl_;
  bool any = false;
  for (;;) {
    if (im.pos >= im.avail && !im.refill(path_)) break;
    const char* start = im.buf.data() + im.pos;
    const char* nl = static_cast<const char*>(std::memchr(start, '\n', im.avail - im.pos));
    if (nl) {
      line.append(start, nl - start);
      im.pos += (nl - start) + 1;
      any = true;
      break;
    }
    line.append(start, im.avail - im.pos);
    im.pos = im.avail;
    any = true;
  }
  if (!any && line.empty()) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  ++line_no_;
  return true;
}

// gzip container written by hand around raw deflate so the header carries no
// timestamp (byte 4..7 zero) and no name, giving byte-stable output.
struct GzWriter::Impl {
  FILE* f = nullptr;
  std::string path;
  z_stream zs{};
  std::vector<unsigned char> out;
  uLong crc = 0;
  uLong total = 0;
  bool open = false;

  void emit(int flush) {
    do {
      zs.next_out = out.data();
      zs.avail_out = static_cast<unsigned>(out.size());
      const int rc = deflate(&zs, flush);
      if (rc == Z_STREAM_ERROR) throw IoError("deflate failed writing " + path);
      const size_t have = out.size() - zs.avail_out;
      if (have && std::fwrite(out.data(), 1, have, f) != have) {
        throw IoError("writing " + path + ": " + std::strerror(errno));
      }
    } while (zs.avail_out == 0);
  }
};

GzWriter::GzWriter(const std::string& path) : impl_(new Impl) {
  impl_->path = path;
  impl_->f = std::fopen(path.c_str(), "wb");
  if (!impl_->f) throw IoError("cannot open " + path + " for writing: " + std::strerror(errno));
  static const unsigned char header[10] = {0x1f, 0x8b, 8, 0, 0, 0, 0, 0, 0, 255};
  if (std::fwrite(header, 1, sizeof(header), impl_->f) != sizeof(header)) {
    throw IoError("writing " + path + ": " + std::strerror(errno));
  }
  // raw deflate (negative window bits); the gzip framing is ours
  if (deflateInit2(&impl_->zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, -15, 8,
                   Z_DEFAULT_STRATEGY) != Z_OK) {
    throw IoError("deflate initialization failed for " + path);
  }
  impl_->out.resize(kBufSize);
  impl_->crc = crc32(0L, Z_NULL, 0);
  impl_->open = true;
}

GzWriter::~GzWriter() {
  try {
    close();
  } catch (...) {
    // a destructor cannot report; close() explicitly to catch write errors
  }
  if (impl_ && impl_->f) std::fclose(impl_->f);
}

void GzWriter::write(const char* data, size_t len) {
  if (!impl_->open) throw IoError("write after close on " + impl_->path);
  impl_->crc = crc32(impl_->crc, reinterpret_cast<const unsigned char*>(data),
                     static_cast<uInt>(len));
  impl_->total += static_cast<uLong>(len);
  impl_->zs.next_in = reinterpret_cast<unsigned char*>(const_cast<char*>(data));
  impl_->zs.avail_in = static_cast<unsigned>(len);
  impl_->emit(Z_NO_FLUSH);
}

void GzWriter::close() {
  if (!impl_ || !impl_->open) return;
  impl_->zs.next_in = nullptr;
  impl_->zs.avail_in = 0;
  impl_->emit(Z_FINISH);
  deflateEnd(&impl_->zs);
  impl_->open = false;
  unsigned char trailer[8];
  for (int i = 0; i < 4; ++i) trailer[i] = static_cast<unsigned char>(impl_->crc >> (8 * i));
  for (int i = 0; i < 4; ++i) trailer[4 + i] = static_cast<unsigned char>(impl_->total >> (8 * i));
  if (std::fwrite(trailer, 1, 8, impl_->f) != 8) {
    throw IoError("writing " + impl_->path + ": " + std::strerror(errno));
  }
  if (std::fclose(impl_->f) != 0) {
    impl_->f = nullptr;
    throw IoError("closing " + impl_->path + ": " + std::strerror(errno));
  }
  impl_->f = nullptr;
}

}  // namespace qscan
