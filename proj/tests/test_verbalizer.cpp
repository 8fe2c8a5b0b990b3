#include <doctest.h>

#include <random>
#include <regex>

#include "dtriage/errors.hpp"
#include "dtriage/evaluator.hpp"
#include "dtriage/learner.hpp"
#include "dtriage/verbalizer.hpp"
#include "fixtures.hpp"

using namespace dtriage;

namespace {

std::string justify(const char* clause, const SymbolicExample& ex) {
  Theory t;
  t.clauses.push_back(parse_clause(clause));
  const auto c = evaluate(t, ex, fixture::background());
  return verbalize_justification(c.justifications.at(0), t.clauses[0], ex);
}

// Tokens that look like raw interval or entity constants.
bool mentions_raw_constant(const std::string& text) {
  static const std::regex raw("[a-z]+_[a-z0-9_]+");
  return std::regex_search(text, raw);
}

}  // namespace

TEST_CASE("clause sentences") {
  CHECK(verbalize_clause(parse_clause(
            "defective(A) :- has_hp(A,B), has_size(B,vol_large), distance_from_center(B,outer_rim).")) ==
        "The part is classified as defective if there is a defect which is large and lies at the outer rim.");
  CHECK(verbalize_clause(parse_clause("defective(A) :- total_volume(A,B), num_leq(tvol_medium,B).")) ==
        "The part is classified as defective if the total defective volume of the part is at least medium.");
  CHECK(verbalize_clause(parse_clause("defective(A) :- total_volume(A,B), num_leq(B,tvol_small).")) ==
        "The part is classified as defective if the total defective volume of the part is at most small.");
  CHECK(verbalize_clause(parse_clause("defective(A).")) == "The part is always classified as defective.");
  CHECK(verbalize_clause(parse_clause(
            "defective(A) :- has_hp(A,B), eccentricity(B,very_elongated), num_hps(A,C), num_leq(cnt_2,C).")) ==
        "The part is classified as defective if there is a defect which is very elongated, and the number of "
        "defects is at least two.");
  CHECK(verbalize_clause(parse_clause("defective(A) :- has_hp(A,B), total_volume(A,tvol_large).")) ==
        "The part is classified as defective if there is a defect, and the total defective volume of the part is "
        "large.");
}

TEST_CASE("clause rendering errors name the predicate") {
  try {
    verbalize_clause(parse_clause("defective(A) :- scratch(A)."));
    FAIL("expected RenderError");
  } catch (const RenderError& e) {
    CHECK(std::string(e.what()).find("scratch") != std::string::npos);
  }
  CHECK_THROWS_AS(verbalize_clause(parse_clause("defective(A) :- has_size(B,vol_large).")), RenderError);
  CHECK_THROWS_AS(verbalize_clause(parse_clause("defective(A) :- has_hp(A,B), has_size(B,vol_huge).")), RenderError);
}

TEST_CASE("theory text") {
  CHECK(verbalize_theory(Theory{}) == "No rules learned yet.");
  Theory t;
  t.clauses.push_back(parse_clause("defective(A)."));
  t.clauses.push_back(parse_clause("defective(A) :- has_hp(A,B)."));
  CHECK(verbalize_theory(t) ==
        "The part is always classified as defective.\nThe part is classified as defective if there is a defect.");
}

TEST_CASE("justification sentences on cast_6858") {
  const auto ex = fixture::cast_6858();
  CHECK(justify("defective(A) :- has_hp(A,B), has_size(B,vol_large), distance_from_center(B,outer_rim).", ex) ==
        "Defect 1 is large and lies at the outer rim, so the part is classified as defective.");
  CHECK(justify("defective(A) :- has_hp(A,B), has_size(B,vol_large), distance_from_center(B,inner_rim).", ex) ==
        "Defect 1 is large, but it does not lie at the inner rim.");
  CHECK(justify("defective(A) :- has_hp(A,B), distance_from_center(B,inner_rim).", ex) ==
        "Defect 1 does not lie at the inner rim.");
  CHECK(justify("defective(A) :- total_volume(A,B), num_leq(tvol_medium,B).", ex) ==
        "The total defective volume of the part is at least medium, so the part is classified as defective.");
  CHECK(justify("defective(A) :- total_volume(A,B), num_leq(B,tvol_medium).", ex) ==
        "The total defective volume of the part is not at most medium.");
  CHECK(justify("defective(A).", ex) == "The part is always classified as defective.");
}

TEST_CASE("no defect to bind") {
  const auto empty = compile_example(FeatureRecord{"5", {}, 0, 0.0}, Label::unlabeled);
  CHECK(justify("defective(A) :- has_hp(A,B), has_size(B,vol_large).", empty) ==
        "There is no defect which is large.");
}

TEST_CASE("ordinals follow has_hp order") {
  SymbolicExample ex{"2", {}, Label::unlabeled, Provenance::inferred};
  ex.facts = parse_facts(
      "total_volume(cast_2,tvol_large).\nnum_hps(cast_2,cnt_2).\n"
      "has_hp(cast_2,hp_2_1).\nhas_size(hp_2_1,vol_small).\n"
      "has_hp(cast_2,hp_2_2).\nhas_size(hp_2_2,vol_large).\n");
  CHECK(justify("defective(A) :- has_hp(A,B), has_size(B,vol_large).", ex) ==
        "Defect 2 is large, so the part is classified as defective.");
}

TEST_CASE("justification and clause must match") {
  const auto ex = fixture::cast_6858();
  Theory t;
  t.clauses.push_back(parse_clause("defective(A) :- has_hp(A,B), has_size(B,vol_large)."));
  auto j = evaluate(t, ex, fixture::background()).justifications.at(0);
  j.atom_evals.pop_back();
  CHECK_THROWS_AS(verbalize_justification(j, t.clauses[0], ex), RenderError);
  const auto other = parse_clause("defective(A) :- has_hp(A,B), has_size(B,vol_small).");
  const auto full = evaluate(t, ex, fixture::background()).justifications.at(0);
  CHECK_THROWS_AS(verbalize_justification(full, other, ex), RenderError);
}

TEST_CASE("defect descriptions") {
  CHECK(verbalize_defects(fixture::cast_6858_record(), fixture::cast_6858()) ==
        "Defect 1: large, very elongated, at the outer rim.");
  CHECK(verbalize_defects(FeatureRecord{"5", {}, 0, 0.0}, SymbolicExample{}) == "No defects detected.");
  FeatureRecord rec = fixture::cast_6858_record();
  Superpixel small = rec.superpixels[0];
  small.superpixel_id = "hp_6858_3";
  small.mass = 5;
  small.eccentricity = 0.1;
  small.center_distance = 0.1;
  rec.superpixels.push_back(small);
  rec.num_hps = 2;
  CHECK(verbalize_defects(rec, compile_example(rec, Label::unlabeled)) ==
        "Defect 1: large, very elongated, at the outer rim.\nDefect 2: small, round, at the center.");
}

TEST_CASE("default templates cover the default vocabulary") {
  CHECK_NOTHROW(TemplateRegistry::defaults().check_total(SchemeRegistry::defaults()));
  CHECK(TemplateRegistry::load_file(DTRIAGE_SOURCE_DIR "/config/templates.json") == TemplateRegistry::defaults());
  const auto partial = TemplateRegistry::parse_json(R"({"properties": [{"predicate": "has_size", "sort": "size",
    "pattern": "is {}", "negated": "is not {}", "unconstrained": "x", "unconstrained_negated": "y",
    "values": {"vol_small": "small"}}]})");
  CHECK_THROWS_AS(partial.check_total(SchemeRegistry::defaults()), ConfigError);
  CHECK_THROWS_AS(TemplateRegistry::parse_json("[1"), ConfigError);
}

TEST_CASE("rendered text never shows raw constants") {
  std::mt19937 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const auto seed = fixture::random_example(rng, "s" + std::to_string(trial), 3);
    const auto bottom = build_bottom_clause(seed, fixture::background(), default_modes(), LearnerConfig{});
    std::vector<int> picked;
    for (int i = 0; i < static_cast<int>(bottom.literals.size()); ++i) {
      if (rng() % 4 == 0) picked.push_back(i);
    }
    const HornClause c = canonicalize(clause_from_literals(bottom, picked));
    if (!is_linked(c)) continue;
    const std::string text = verbalize_clause(c);
    CHECK_FALSE(mentions_raw_constant(text));
    const auto ex = fixture::random_example(rng, std::to_string(trial), 3);
    const Theory t{{c}, {}};
    for (const auto& j : evaluate(t, ex, fixture::background()).justifications) {
      const std::string jt = verbalize_justification(j, c, ex);
      CHECK_FALSE(mentions_raw_constant(jt));
      CHECK(jt == verbalize_justification(j, c, ex));
    }
  }
}
