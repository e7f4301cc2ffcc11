#include "netpbm.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "errors.hpp"

namespace scd {

namespace {

struct Header {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t data_offset = 0;
};

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw DataError(path.string() + ": " + what);
}

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Reads one whitespace-delimited header integer, skipping '#' comments.
std::size_t header_number(const std::vector<unsigned char>& buf, std::size_t& pos, const std::filesystem::path& path) {
  while (pos < buf.size()) {
    if (std::isspace(buf[pos])) {
      ++pos;
    } else if (buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  if (pos >= buf.size() || !std::isdigit(buf[pos])) fail(path, "malformed header");
  std::size_t value = 0;
  while (pos < buf.size() && std::isdigit(buf[pos])) {
    value = value * 10 + static_cast<std::size_t>(buf[pos] - '0');
    if (value > (1u << 24)) fail(path, "header value too large");
    ++pos;
  }
  return value;
}

Header parse_header(const std::vector<unsigned char>& buf, char kind, std::size_t channels,
                    const std::filesystem::path& path) {
  if (buf.size() < 2 || buf[0] != 'P' || buf[1] != static_cast<unsigned char>(kind)) {
    fail(path, std::string("expected binary P") + kind + " magic");
  }
  std::size_t pos = 2;
  Header h;
  h.width = header_number(buf, pos, path);
  h.height = header_number(buf, pos, path);
  const std::size_t maxval = header_number(buf, pos, path);
  if (h.width == 0 || h.height == 0) fail(path, "zero image dimension");
  if (maxval != 255) fail(path, "maxval " + std::to_string(maxval) + " unsupported (expected 255)");
  if (pos >= buf.size() || !std::isspace(buf[pos])) fail(path, "missing whitespace after header");
  h.data_offset = pos + 1;
  const std::size_t need = h.width * h.height * channels;
  if (buf.size() - h.data_offset < need) fail(path, "truncated pixel data");
  if (buf.size() - h.data_offset > need) fail(path, "trailing bytes after pixel data");
  return h;
}

void write_raw(const std::filesystem::path& path, char kind, std::size_t w, std::size_t h,
               const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out << 'P' << kind << '\n' << w << ' ' << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError(path.string() + ": write failed");
}

}  // namespace

RgbImage read_ppm(const std::filesystem::path& path) {
  const auto buf = slurp(path);
  const auto h = parse_header(buf, '6', 3, path);
  RgbImage img(h.height, h.width);
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(h.data_offset), buf.end(), img.rgb.begin());
  return img;
}

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
  write_raw(path, '6', image.width, image.height, image.rgb);
}

LabelMap read_pgm(const std::filesystem::path& path) {
  const auto buf = slurp(path);
  const auto h = parse_header(buf, '5', 1, path);
  LabelMap map(h.height, h.width);
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(h.data_offset), buf.end(), map.values.begin());
  return map;
}

void write_pgm(const std::filesystem::path& path, const LabelMap& map) {
  write_raw(path, '5', map.width, map.height, map.values);
}

}  // namespace scd
