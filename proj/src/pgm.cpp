#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "dtriage/errors.hpp"
#include "dtriage/mask.hpp"

namespace dtriage {
namespace {

bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

class PgmReader {
 public:
  PgmReader(std::span<const std::uint8_t> bytes, std::size_t start) : bytes_(bytes), pos_(start) {}

  std::size_t pos() const { return pos_; }
  bool at_end() const { return pos_ >= bytes_.size(); }

  // Skips whitespace and '#' comments.
  void skip_separators() {
    while (!at_end()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (!at_end() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  long long number(const char* what) {
    skip_separators();
    if (at_end()) {
      throw FormatError(std::string("malformed header: missing ") + what, pos_);
    }
    const std::size_t start = pos_;
    long long value = 0;
    while (!at_end() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000LL) {
        throw FormatError(std::string("number too large for ") + what, start);
      }
      ++pos_;
    }
    if (pos_ == start || (!at_end() && !is_space(bytes_[pos_]) && bytes_[pos_] != '#')) {
      throw FormatError(std::string("malformed ") + what, start);
    }
    return value;
  }

  std::uint8_t byte() { return bytes_[pos_++]; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_;
};

std::vector<std::uint8_t> encode(const CertaintyMask& mask, int maxval, bool binary) {
  mask.validate();
  if (maxval <= 0 || maxval > 65535) {
    throw PreconditionError("PGM maxval must lie in 1..65535");
  }
  std::string header = std::string(binary ? "P5" : "P2") + "\n" + std::to_string(mask.width) + " " +
                       std::to_string(mask.height) + "\n" + std::to_string(maxval) + "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  std::size_t i = 0;
  for (double v : mask.values) {
    const auto q = static_cast<unsigned>(std::lround(v * maxval));
    if (binary) {
      if (maxval > 255) {
        out.push_back(static_cast<std::uint8_t>(q >> 8));
      }
      out.push_back(static_cast<std::uint8_t>(q & 0xFF));
    } else {
      const std::string s = std::to_string(q);
      out.insert(out.end(), s.begin(), s.end());
      out.push_back(++i % static_cast<std::size_t>(mask.width) == 0 ? '\n' : ' ');
    }
  }
  return out;
}

}  // namespace

CertaintyMask load_mask(std::span<const std::uint8_t> bytes, std::string image_id, double mass_scale) {
  if (!is_valid_image_id(image_id)) {
    throw PreconditionError("invalid image id '" + image_id + "'");
  }
  if (!(mass_scale > 0.0)) {
    throw PreconditionError("mass_scale must be positive");
  }
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
    throw FormatError("malformed header: expected magic P2 or P5", 0);
  }
  const bool binary = bytes[1] == '5';
  PgmReader in(bytes, 2);
  const long long width = in.number("width");
  const long long height = in.number("height");
  in.skip_separators();
  const std::size_t maxval_pos = in.pos();
  const long long maxval = in.number("maxval");
  if (width <= 0 || height <= 0) {
    throw FormatError("malformed header: dimensions must be positive", 2);
  }
  if (maxval <= 0 || maxval > 65535) {
    throw FormatError("malformed header: maxval must lie in 1..65535", maxval_pos);
  }
  if (width * height > (1LL << 28)) {
    throw FormatError("malformed header: image too large", 2);
  }

  CertaintyMask mask;
  mask.image_id = std::move(image_id);
  mask.width = static_cast<int>(width);
  mask.height = static_cast<int>(height);
  mask.mass_scale = mass_scale;
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  mask.values.reserve(count);

  if (binary) {
    if (in.at_end()) {
      throw FormatError("truncated pixel data", in.pos());
    }
    in.byte();  // single whitespace after maxval
    const std::size_t sample_bytes = maxval > 255 ? 2 : 1;
    if (in.remaining() < count * sample_bytes) {
      throw FormatError("truncated pixel data: expected " + std::to_string(count * sample_bytes) +
                            " bytes, found " + std::to_string(in.remaining()),
                        in.pos() + in.remaining());
    }
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t at = in.pos();
      unsigned raw = in.byte();
      if (sample_bytes == 2) {
        raw = (raw << 8) | in.byte();
      }
      if (raw > maxval) {
        throw FormatError("pixel value exceeds maxval", at);
      }
      mask.values.push_back(static_cast<double>(raw) / static_cast<double>(maxval));
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      in.skip_separators();
      const std::size_t at = in.pos();
      if (in.at_end()) {
        throw FormatError("truncated pixel data: " + std::to_string(i) + " of " + std::to_string(count) +
                              " pixels present",
                          at);
      }
      const long long raw = in.number("pixel value");
      if (raw > maxval) {
        throw FormatError("pixel value exceeds maxval", at);
      }
      mask.values.push_back(static_cast<double>(raw) / static_cast<double>(maxval));
    }
  }
  return mask;
}

CertaintyMask load_mask_file(const std::string& path, std::string image_id, double mass_scale) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw Error("cannot open mask file '" + path + "'");
  }
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  return load_mask(bytes, std::move(image_id), mass_scale);
}

std::vector<std::uint8_t> encode_pgm(const CertaintyMask& mask, int maxval) { return encode(mask, maxval, true); }

std::vector<std::uint8_t> encode_pgm_ascii(const CertaintyMask& mask, int maxval) {
  return encode(mask, maxval, false);
}

}  // namespace dtriage
