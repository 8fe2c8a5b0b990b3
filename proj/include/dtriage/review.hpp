#pragma once

// Everything the review screen shows for one image, evaluated against the
// knowledge base at one revision.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dtriage/evaluator.hpp"
#include "dtriage/knowledge_base.hpp"
#include "dtriage/mask.hpp"
#include "dtriage/verbalizer.hpp"

namespace dtriage {

struct OverlayRegion {
  int ordinal = 0;  // matches the defect numbering in defect_text
  std::string superpixel_id;
  int min_row = 0;
  int min_col = 0;
  int max_row = 0;
  int max_col = 0;

  bool operator==(const OverlayRegion&) const = default;
};

struct JustificationText {
  std::string text;
  bool satisfied = false;
  std::size_t clause_index = 0;

  bool operator==(const JustificationText&) const = default;
};

struct ReviewItem {
  std::string image_id;
  std::uint64_t revision = 0;
  int width = 0;
  int height = 0;
  std::optional<std::string> image_png_base64;  // absent when no photo is on disk
  std::string mask_png_base64;
  std::vector<OverlayRegion> overlay_regions;
  std::string defect_text;
  Classification classification;
  std::vector<JustificationText> justification_texts;  // aligned with classification.justifications
  std::string theory_text;

  bool operator==(const ReviewItem&) const = default;
};

ReviewItem build_review_item(const KnowledgeBase& kb, const SymbolicExample& example, const CertaintyMask& mask,
                             const CertaintyMask* photo, const TemplateRegistry& templates,
                             double cutoff = kDefaultCutoff);

}  // namespace dtriage
