#pragma once

// Defect-certainty masks and the superpixels (connected defect regions)
// extracted from them.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dtriage {

inline constexpr double kDefaultCutoff = 0.3;

struct PixelCoord {
  int row = 0;
  int col = 0;

  auto operator<=>(const PixelCoord&) const = default;
  bool operator==(const PixelCoord&) const = default;
};

// Row-major grid of certainties in [0,1].
struct CertaintyMask {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::vector<double> values;
  double mass_scale = 1.0;

  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * width + col]; }

  // Throws PreconditionError when any invariant is violated.
  void validate() const;

  bool operator==(const CertaintyMask&) const = default;
};

struct Point2 {
  double row = 0.0;
  double col = 0.0;

  bool operator==(const Point2&) const = default;
};

struct Superpixel {
  std::string superpixel_id;
  std::vector<PixelCoord> pixels;  // sorted row-major
  double mass = 0.0;
  Point2 centroid;
  double center_distance = 0.0;
  double eccentricity = 0.0;
};

struct FeatureRecord {
  std::string image_id;
  std::vector<Superpixel> superpixels;
  int num_hps = 0;
  double total_volume = 0.0;
};

// Image ids become parts of fact constants, so they are restricted to
// [A-Za-z0-9_]+.
bool is_valid_image_id(std::string_view id) noexcept;

// Grayscale PGM (P2 or P5, maxval <= 65535); values are raw/maxval.
CertaintyMask load_mask(std::span<const std::uint8_t> bytes, std::string image_id, double mass_scale = 1.0);
CertaintyMask load_mask_file(const std::string& path, std::string image_id, double mass_scale = 1.0);

// Quantizes values to 0..maxval and writes a binary P5 payload.
std::vector<std::uint8_t> encode_pgm(const CertaintyMask& mask, int maxval = 255);
std::vector<std::uint8_t> encode_pgm_ascii(const CertaintyMask& mask, int maxval = 255);

// Values below `cutoff` count as 0; the rest is split into 8-connected
// components ordered by (min row, min col) and named hp_<image_id>_<k>.
std::vector<Superpixel> extract_superpixels(const CertaintyMask& mask, double cutoff = kDefaultCutoff);

// Distance from the geometric image center, normalized by the half-diagonal.
double compute_center_distance(int width, int height, Point2 centroid);

// sqrt(1 - b^2/a^2) with a the largest pixel-center distance and b the extent
// of the set orthogonal to that axis.
double compute_eccentricity(std::span<const PixelCoord> pixels);

FeatureRecord build_feature_record(const CertaintyMask& mask, double cutoff = kDefaultCutoff);

}  // namespace dtriage
