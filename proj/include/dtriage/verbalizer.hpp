#pragma once

// Template-based English rendering of clauses, justifications and defect
// descriptions. Functional predicates (total_volume, num_hps) are fused with
// the num_leq atoms that constrain their value; has_hp introduces a defect
// that later atoms describe.

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dtriage/evaluator.hpp"
#include "dtriage/facts.hpp"
#include "dtriage/logic.hpp"
#include "dtriage/mask.hpp"

namespace dtriage {

// Introduces an entity: has_hp(Image, Defect).
struct EntityTemplate {
  std::string predicate;
  std::string noun;  // "defect"

  bool operator==(const EntityTemplate&) const = default;
};

// Describes an entity: has_size(Defect, vol_large) -> "is large".
struct PropertyTemplate {
  std::string predicate;
  std::string sort;
  std::string pattern;        // "is {}"
  std::string negated;        // "is not {}"
  std::string unconstrained;  // used when the value is an unconstrained variable
  std::string unconstrained_negated;
  std::map<std::string, std::string> values;

  bool operator==(const PropertyTemplate&) const = default;
};

// Single value of the whole part: total_volume(Image, V).
struct MeasureTemplate {
  std::string predicate;
  std::string sort;
  std::string noun;  // "the total defective volume of the part"
  std::map<std::string, std::string> values;

  bool operator==(const MeasureTemplate&) const = default;
};

class TemplateRegistry {
 public:
  static const TemplateRegistry& defaults();
  static TemplateRegistry parse_json(std::string_view text);  // throws ConfigError
  static TemplateRegistry load_file(const std::string& path);

  // Every constant of every scheme sort used by a template has a phrase.
  void check_total(const SchemeRegistry& schemes) const;  // throws ConfigError

  const EntityTemplate* entity(std::string_view predicate) const;
  const PropertyTemplate* property(std::string_view predicate) const;
  const MeasureTemplate* measure(std::string_view predicate) const;
  const std::string& order_predicate() const noexcept { return order_predicate_; }
  const std::string& at_most() const noexcept { return at_most_; }
  const std::string& at_least() const noexcept { return at_least_; }
  // Phrase for a constant from any value lexicon; throws RenderError.
  const std::string& phrase(std::string_view constant) const;

  bool operator==(const TemplateRegistry&) const = default;

 private:
  std::vector<EntityTemplate> entities_;
  std::vector<PropertyTemplate> properties_;
  std::vector<MeasureTemplate> measures_;
  std::string order_predicate_ = "num_leq";
  std::string at_most_ = "at most";
  std::string at_least_ = "at least";
};

// "The part is classified as defective if there is a defect which is large."
std::string verbalize_clause(const HornClause& clause, const TemplateRegistry& reg = TemplateRegistry::defaults());

// One clause sentence per line; "No rules learned yet." for an empty theory.
std::string verbalize_theory(const Theory& theory, const TemplateRegistry& reg = TemplateRegistry::defaults());

// Defect ordinals come from the position of the bound constant among the
// example's has_hp facts, hence the example argument.
std::string verbalize_justification(const Justification& justification, const HornClause& clause,
                                    const SymbolicExample& example,
                                    const TemplateRegistry& reg = TemplateRegistry::defaults());

// "Defect 1: large, very elongated, at the outer rim." per superpixel, one per
// line; "No defects detected." when there are none.
std::string verbalize_defects(const FeatureRecord& record, const SymbolicExample& example,
                              const TemplateRegistry& reg = TemplateRegistry::defaults());

}  // namespace dtriage
