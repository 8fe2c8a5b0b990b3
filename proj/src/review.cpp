#include "dtriage/review.hpp"

#include <algorithm>

#include "dtriage/codec.hpp"
#include "dtriage/facts.hpp"

namespace dtriage {

ReviewItem build_review_item(const KnowledgeBase& kb, const SymbolicExample& example, const CertaintyMask& mask,
                             const CertaintyMask* photo, const TemplateRegistry& templates, double cutoff) {
  ReviewItem item;
  item.image_id = example.image_id;
  item.revision = kb.revision();
  item.width = mask.width;
  item.height = mask.height;
  item.mask_png_base64 = base64_encode(encode_png(mask));
  if (photo) item.image_png_base64 = base64_encode(encode_png(*photo));

  const FeatureRecord record = build_feature_record(mask, cutoff);
  item.defect_text = verbalize_defects(record, example, templates);

  std::vector<std::string> entities;
  for (const Atom& f : example.facts) {
    if (f.predicate == pred::has_hp && f.arity() == 2) entities.push_back(f.args[1].name);
  }
  for (const Superpixel& sp : record.superpixels) {
    const auto pos = std::find(entities.begin(), entities.end(), sp.superpixel_id);
    if (pos == entities.end()) continue;
    OverlayRegion region{static_cast<int>(pos - entities.begin()) + 1, sp.superpixel_id, sp.pixels.front().row,
                         sp.pixels.front().col, sp.pixels.front().row, sp.pixels.front().col};
    for (const PixelCoord& p : sp.pixels) {
      region.min_row = std::min(region.min_row, p.row);
      region.max_row = std::max(region.max_row, p.row);
      region.min_col = std::min(region.min_col, p.col);
      region.max_col = std::max(region.max_col, p.col);
    }
    item.overlay_regions.push_back(std::move(region));
  }

  item.classification = evaluate(kb.theory(), example, kb.background());
  for (const Justification& j : item.classification.justifications) {
    item.justification_texts.push_back(
        {verbalize_justification(j, kb.theory().clauses.at(j.clause_index), example, templates), j.satisfied,
         j.clause_index});
  }
  item.theory_text = verbalize_theory(kb.theory(), templates);
  return item;
}

}  // namespace dtriage
