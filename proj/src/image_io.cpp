#include "spinr/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

#include "spinr/errors.hpp"

#ifdef SPINR_HAVE_PNG
#include <png.h>
#endif

namespace spinr::io {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_whitespace_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  unsigned long read_uint(const char* what) {
    skip_whitespace_and_comments();
    const std::size_t start = pos_;
    unsigned long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1u << 24) throw ParseError(std::string("PPM: ") + what + " too large", start);
      ++pos_;
    }
    if (pos_ == start) {
      if (pos_ >= bytes_.size())
        throw ParseError(std::string("PPM: truncated header, expected ") + what, pos_);
      throw ParseError(std::string("PPM: expected ") + what, pos_);
    }
    return value;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

bool is_png(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= 8 && std::equal(kSig, kSig + 8, bytes.begin());
}

#ifdef SPINR_HAVE_PNG
Image decode_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str()))
    throw ParseError(std::string("PNG: ") + png.message, 0);
  png.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&png);
    throw ParseError(std::string("PNG: ") + png.message, 0);
  }
  std::vector<double> samples(buffer.size());
  std::transform(buffer.begin(), buffer.end(), samples.begin(),
                 [](std::uint8_t v) { return v / 255.0; });
  return Image(static_cast<int>(png.height), static_cast<int>(png.width), std::move(samples));
}
#endif

}  // namespace

Image decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
    throw ParseError("PPM: missing P6 magic", 0);
  HeaderReader reader(bytes);
  reader.advance(2);
  const auto width = reader.read_uint("width");
  const auto height = reader.read_uint("height");
  reader.skip_whitespace_and_comments();
  const std::size_t maxval_offset = reader.pos();
  const auto maxval = reader.read_uint("maxval");
  if (width == 0 || height == 0) throw ParseError("PPM: zero dimension", maxval_offset);
  if (maxval != 255)
    throw ParseError("PPM: unsupported maxval " + std::to_string(maxval), maxval_offset);
  if (reader.pos() >= bytes.size() || !std::isspace(bytes[reader.pos()]))
    throw ParseError("PPM: expected whitespace after maxval", reader.pos());
  reader.advance(1);

  const std::size_t data_start = reader.pos();
  const std::size_t needed = width * height * 3;
  if (bytes.size() - data_start < needed)
    throw ParseError("PPM: truncated pixel data, expected " + std::to_string(needed) +
                         " bytes but file ends",
                     bytes.size());
  std::vector<double> samples(needed);
  for (std::size_t i = 0; i < needed; ++i) samples[i] = bytes[data_start + i] / 255.0;
  return Image(static_cast<int>(height), static_cast<int>(width), std::move(samples));
}

std::uint8_t to_byte(double value) {
  const double v = std::clamp(value, 0.0, 1.0) * 255.0;
  return static_cast<std::uint8_t>(std::lround(v));
}

std::vector<std::uint8_t> encode_ppm(const Image& image) {
  const std::string header = "P6\n" + std::to_string(image.width()) + " " +
                             std::to_string(image.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + image.samples().size());
  for (double v : image.samples()) out.push_back(to_byte(v));
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Image load(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (is_png(bytes)) {
#ifdef SPINR_HAVE_PNG
    return decode_png(path);
#else
    throw ParseError("PNG support not built in", 0);
#endif
  }
  return decode_ppm(bytes);
}

void save(const Image& image, const std::filesystem::path& path) {
  write_file(path, encode_ppm(image));
}

}  // namespace spinr::io
