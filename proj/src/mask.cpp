#include "dtriage/mask.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "dtriage/errors.hpp"

namespace dtriage {
namespace {

// Union-find over provisional labels of the first labeling pass.
class DisjointSets {
 public:
  int make() {
    parent_.push_back(static_cast<int>(parent_.size()));
    return parent_.back();
  }
  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) {
      // Smaller label wins so roots keep raster order.
      if (b < a) std::swap(a, b);
      parent_[b] = a;
    }
  }

 private:
  std::vector<int> parent_;
};

std::int64_t cross(PixelCoord o, PixelCoord a, PixelCoord b) {
  return static_cast<std::int64_t>(a.row - o.row) * (b.col - o.col) -
         static_cast<std::int64_t>(a.col - o.col) * (b.row - o.row);
}

// Strict convex hull (collinear points dropped). A farthest pair always
// consists of strict hull vertices.
std::vector<PixelCoord> hull_vertices(std::vector<PixelCoord> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) {
    return pts;
  }
  std::vector<PixelCoord> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 2) {
    // All points collinear: keep the two extremes.
    return {pts.front(), pts.back()};
  }
  return hull;
}

}  // namespace

bool is_valid_image_id(std::string_view id) noexcept {
  return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
  });
}

void CertaintyMask::validate() const {
  if (!is_valid_image_id(image_id)) {
    throw PreconditionError("invalid image id '" + image_id + "'");
  }
  if (width <= 0 || height <= 0) {
    throw PreconditionError("mask dimensions must be positive");
  }
  if (values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw PreconditionError("mask has " + std::to_string(values.size()) + " values, expected " +
                            std::to_string(static_cast<std::size_t>(width) * height));
  }
  if (!(mass_scale > 0.0) || !std::isfinite(mass_scale)) {
    throw PreconditionError("mass_scale must be positive");
  }
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw PreconditionError("mask value outside [0,1]");
    }
  }
}

std::vector<Superpixel> extract_superpixels(const CertaintyMask& mask, double cutoff) {
  mask.validate();
  if (!(cutoff >= 0.0 && cutoff <= 1.0)) {
    throw PreconditionError("cutoff must lie in [0,1]");
  }
  const int w = mask.width;
  const int h = mask.height;
  std::vector<int> labels(static_cast<std::size_t>(w) * h, -1);
  DisjointSets sets;

  // First pass: provisional labels from the already-visited 8-neighbours
  // (W, NW, N, NE).
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (mask.at(r, c) < cutoff || mask.at(r, c) <= 0.0) {
        continue;
      }
      int label = -1;
      const int nbr[4][2] = {{r, c - 1}, {r - 1, c - 1}, {r - 1, c}, {r - 1, c + 1}};
      for (const auto& n : nbr) {
        if (n[0] < 0 || n[1] < 0 || n[1] >= w) continue;
        const int other = labels[static_cast<std::size_t>(n[0]) * w + n[1]];
        if (other < 0) continue;
        if (label < 0) {
          label = other;
        } else {
          sets.unite(label, other);
        }
      }
      labels[static_cast<std::size_t>(r) * w + c] = label < 0 ? sets.make() : label;
    }
  }

  // Second pass: resolve to roots; roots appear in raster order of their
  // first pixel, which is the (min row, min col) ordering.
  std::vector<int> root_to_index;
  std::vector<Superpixel> out;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const int provisional = labels[static_cast<std::size_t>(r) * w + c];
      if (provisional < 0) continue;
      const int root = sets.find(provisional);
      if (static_cast<std::size_t>(root) >= root_to_index.size()) {
        root_to_index.resize(static_cast<std::size_t>(root) + 1, -1);
      }
      if (root_to_index[root] < 0) {
        root_to_index[root] = static_cast<int>(out.size());
        out.emplace_back();
      }
      Superpixel& sp = out[root_to_index[root]];
      sp.pixels.push_back({r, c});
      sp.mass += mask.at(r, c) * mask.mass_scale;
    }
  }

  for (std::size_t k = 0; k < out.size(); ++k) {
    Superpixel& sp = out[k];
    sp.superpixel_id = "hp_" + mask.image_id + "_" + std::to_string(k + 1);
    double sr = 0.0;
    double sc = 0.0;
    for (const auto& p : sp.pixels) {
      sr += p.row;
      sc += p.col;
    }
    const double n = static_cast<double>(sp.pixels.size());
    sp.centroid = {sr / n, sc / n};
    sp.center_distance = compute_center_distance(w, h, sp.centroid);
    sp.eccentricity = compute_eccentricity(sp.pixels);
  }
  return out;
}

double compute_center_distance(int width, int height, Point2 centroid) {
  if (width < 1 || height < 1) {
    throw PreconditionError("image dimensions must be at least 1");
  }
  const double cr = (height - 1) / 2.0;
  const double cc = (width - 1) / 2.0;
  const double half_diagonal = std::hypot(cr, cc);
  if (half_diagonal == 0.0) {
    return 0.0;
  }
  const double d = std::hypot(centroid.row - cr, centroid.col - cc) / half_diagonal;
  return std::clamp(d, 0.0, 1.0);
}

double compute_eccentricity(std::span<const PixelCoord> pixels) {
  if (pixels.empty()) {
    throw PreconditionError("eccentricity of an empty pixel set");
  }
  const auto hull = hull_vertices({pixels.begin(), pixels.end()});

  // Major axis: farthest pair. Among equally long pairs pick the one with
  // the smallest orthogonal extent, so the result does not depend on the
  // orientation of the set; pairs equal in both give the same value.
  // Everything is compared on exact integers.
  auto orthogonal_extent = [&hull](PixelCoord a, PixelCoord b) {
    const std::int64_t dr = b.row - a.row;
    const std::int64_t dc = b.col - a.col;
    std::int64_t lo = INT64_MAX;
    std::int64_t hi = INT64_MIN;
    for (const auto& p : hull) {
      const std::int64_t proj = -dc * p.row + dr * p.col;
      lo = std::min(lo, proj);
      hi = std::max(hi, proj);
    }
    return hi - lo;
  };

  std::int64_t best_d2 = 0;
  std::int64_t best_extent = 0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    for (std::size_t j = i + 1; j < hull.size(); ++j) {
      PixelCoord a = std::min(hull[i], hull[j]);
      PixelCoord b = std::max(hull[i], hull[j]);
      const std::int64_t dr = b.row - a.row;
      const std::int64_t dc = b.col - a.col;
      const std::int64_t d2 = dr * dr + dc * dc;
      if (d2 < best_d2) continue;
      const std::int64_t extent = orthogonal_extent(a, b);
      if (d2 > best_d2 || extent < best_extent) {
        best_d2 = d2;
        best_extent = extent;
      }
    }
  }
  if (best_d2 == 0) {
    return 0.0;
  }
  // b = extent / |d| and a = |d|, so b^2/a^2 = extent^2 / d2^2.
  const double ratio = static_cast<double>(best_extent) / static_cast<double>(best_d2);
  return std::sqrt(std::clamp(1.0 - ratio * ratio, 0.0, 1.0));
}

FeatureRecord build_feature_record(const CertaintyMask& mask, double cutoff) {
  FeatureRecord record;
  record.image_id = mask.image_id;
  record.superpixels = extract_superpixels(mask, cutoff);
  record.num_hps = static_cast<int>(record.superpixels.size());
  for (const auto& sp : record.superpixels) {
    record.total_volume += sp.mass;
  }
  return record;
}

}  // namespace dtriage
