#pragma once

// Seeded synthetic masks labeled by a known ground-truth theory.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dtriage/facts.hpp"
#include "dtriage/logic.hpp"
#include "dtriage/mask.hpp"

namespace dtriage {

struct SynthConfig {
  std::uint64_t seed = 1;
  int count = 86;
  int width = 256;
  int height = 256;
  int min_defects = 1;
  int max_defects = 4;
  double min_radius = 10.0;
  double max_radius = 40.0;
  // Normalized distance of the defect center from the image center.
  double min_distance = 0.6;
  double max_distance = 0.95;
  double elongation_probability = 0.3;
  Theory ground_truth;
  double label_noise = 0.0;
  double cutoff = kDefaultCutoff;

  void validate() const;  // throws ConfigError
  // Keys as above except "image_size": [w, h], "defect_count_range",
  // "blob_radius_range", "distance_range" as [min, max] pairs and
  // "ground_truth_theory" as clause text. Missing keys keep their defaults.
  static SynthConfig parse_json(std::string_view text);
  static SynthConfig load_file(const std::string& path);
};

struct SynthItem {
  CertaintyMask mask;
  SymbolicExample example;  // annotated, labeled
  bool label_flipped = false;
};

// Zero-padded 1-based ids, at least four digits wide.
std::string synth_id(int index, int count);

std::vector<SynthItem> generate_dataset(const SynthConfig& config);

// Grayscale stand-in photo: a bright round part on a dark backdrop with the
// defects darkened in proportion to their certainty.
CertaintyMask render_photo(const CertaintyMask& mask);

// Writes masks/<id>.pgm (8-bit P5), images/<id>.pgm (render_photo),
// labels.tsv ("id<TAB>label") and manifest.tsv ("id<TAB>label<TAB>provenance").
// The last `review_count` items are left out of labels.tsv and listed as
// inferred in the manifest (with their generated label), so they form a
// review queue.
void write_dataset(const std::vector<SynthItem>& items, const std::filesystem::path& out_dir, int review_count = 0);

}  // namespace dtriage
