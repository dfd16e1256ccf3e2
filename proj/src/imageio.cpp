#include "misr4d/imageio.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace misr4d {

namespace {

struct TiffEntry {
  uint16_t tag, type;
  uint32_t count, value;
};

void put16(std::string& s, uint16_t v) { s.append(reinterpret_cast<const char*>(&v), 2); }
void put32(std::string& s, uint32_t v) { s.append(reinterpret_cast<const char*>(&v), 4); }

void append_entry(std::string& s, uint16_t tag, uint16_t type, uint32_t count, uint32_t value) {
  put16(s, tag);
  put16(s, type);
  put32(s, count);
  put32(s, value);
}

} // namespace

void write_tiff_f32(const std::string& path, const ImageF& img) {
  constexpr uint16_t kShort = 3, kLong = 4;
  const uint32_t data_bytes = static_cast<uint32_t>(img.size() * sizeof(float));
  const uint32_t ifd_offset = 8 + data_bytes;

  std::string buf;
  buf.reserve(8 + data_bytes + 200);
  buf.append("II", 2);
  put16(buf, 42);
  put32(buf, ifd_offset);
  buf.append(reinterpret_cast<const char*>(img.v.data()), data_bytes);

  std::string ifd;
  put16(ifd, 10);  // entry count
  append_entry(ifd, 256, kLong, 1, static_cast<uint32_t>(img.w));   // width = columns
  append_entry(ifd, 257, kLong, 1, static_cast<uint32_t>(img.h));   // length = rows
  append_entry(ifd, 258, kShort, 1, 32);
  append_entry(ifd, 259, kShort, 1, 1);  // no compression
  append_entry(ifd, 262, kShort, 1, 1);  // black is zero
  append_entry(ifd, 273, kLong, 1, 8);   // strip starts right after header
  append_entry(ifd, 277, kShort, 1, 1);
  append_entry(ifd, 278, kLong, 1, static_cast<uint32_t>(img.h));
  append_entry(ifd, 279, kLong, 1, data_bytes);
  append_entry(ifd, 339, kShort, 1, 3);  // IEEE float
  put32(ifd, 0);
  buf += ifd;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("tiff: cannot write " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

ImageF read_tiff_f32(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("tiff: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 8 || buf[0] != 'I' || buf[1] != 'I')
    throw config_error("tiff: not a little-endian TIFF: " + path);

  auto get16 = [&](size_t off) {
    uint16_t v;
    std::memcpy(&v, buf.data() + off, 2);
    return v;
  };
  auto get32 = [&](size_t off) {
    uint32_t v;
    std::memcpy(&v, buf.data() + off, 4);
    return v;
  };

  const uint32_t ifd = get32(4);
  if (ifd + 2 > buf.size()) throw config_error("tiff: truncated IFD");
  const uint16_t n = get16(ifd);
  uint32_t width = 0, height = 0, bits = 0, comp = 1, offset = 0, fmt = 1, count = 0;
  for (uint16_t e = 0; e < n; ++e) {
    const size_t at = ifd + 2 + static_cast<size_t>(e) * 12;
    const uint16_t tag = get16(at), type = get16(at + 2);
    const uint32_t value = (type == 3) ? get16(at + 8) : get32(at + 8);
    switch (tag) {
      case 256: width = value; break;
      case 257: height = value; break;
      case 258: bits = value; break;
      case 259: comp = value; break;
      case 273: offset = value; break;
      case 279: count = value; break;
      case 339: fmt = value; break;
      default: break;
    }
  }
  if (bits != 32 || fmt != 3 || comp != 1)
    throw config_error("tiff: only uncompressed 32-bit float supported: " + path);
  if (static_cast<size_t>(offset) + count > buf.size()) throw config_error("tiff: truncated data");
  ImageF img(static_cast<int>(height), static_cast<int>(width));
  if (count != img.size() * sizeof(float)) throw config_error("tiff: strip size mismatch");
  std::memcpy(img.v.data(), buf.data() + offset, count);
  return img;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw config_error("csv: cannot write " + path);
  for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  out.precision(10);
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

} // namespace misr4d
