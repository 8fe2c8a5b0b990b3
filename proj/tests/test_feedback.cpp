#include <doctest.h>

#include <random>
#include <set>

#include "dtriage/errors.hpp"
#include "dtriage/feedback.hpp"
#include "fixtures.hpp"

using namespace dtriage;

namespace {

const char* kTarget = "defective(A) :- has_hp(A,B), has_size(B,vol_large), distance_from_center(B,outer_rim).";

// Annotated examples labeled by the target clause plus unlabeled inferred
// examples to review; the theory is trained on the annotated part.
KnowledgeBase planted_kb(unsigned seed, int annotated, int inferred) {
  KnowledgeBase kb;
  kb.set_background(fixture::background());
  std::mt19937 rng(seed);
  const auto target = parse_clause(kTarget);
  for (int i = 0; i < annotated + inferred; ++i) {
    auto ex = fixture::random_example(rng, std::to_string(100 + i), 3);
    if (i < annotated) {
      ex.label = clause_covers(target, ex, kb.background()).covered ? Label::defective : Label::ok;
      ex.provenance = Provenance::annotated;
    }
    kb.add_example(ex);
  }
  FeedbackPolicy policy;
  policy.learner.noise = 0;
  retrain(kb, policy);
  return kb;
}

// First unlabeled example whose classification has the wanted label.
std::pair<SymbolicExample, Classification> pick(const KnowledgeBase& kb, Label wanted) {
  for (const auto& ex : kb.examples()) {
    if (ex.label != Label::unlabeled) continue;
    auto c = evaluate(kb.theory(), ex, kb.background());
    if (c.label == wanted) return {ex, c};
  }
  FAIL("no unlabeled example with the wanted classification");
  return {};
}

Verdict accept_all(const KnowledgeBase& kb, const Classification& c) {
  return Verdict{c.image_id, kb.revision(), true, std::vector<bool>(c.justifications.size(), true)};
}

}  // namespace

TEST_CASE("dummy examples instantiate exactly the clause body") {
  KnowledgeBase kb;
  kb.set_background(fixture::background());
  const auto e1 = parse_clause("defective(A) :- has_hp(A,B), has_size(B,vol_large).");
  const auto d1 = make_dummy_example(e1, kb);
  CHECK(d1.image_id == "dummy_1");
  CHECK(d1.label == Label::ok);
  CHECK(d1.provenance == Provenance::dummy);
  CHECK(emit_facts(d1) == "has_hp(dummy_1,dummy_1_hp1).\nhas_size(dummy_1_hp1,vol_large).\n");

  const auto e2 = parse_clause("defective(A) :- total_volume(A,B), num_leq(tvol_medium,B).");
  CHECK(emit_facts(make_dummy_example(e2, kb)) == "total_volume(dummy_1,tvol_medium).\n");
  const auto e3 = parse_clause("defective(A) :- num_hps(A,B), num_leq(cnt_1,B), num_leq(B,cnt_2).");
  CHECK(emit_facts(make_dummy_example(e3, kb)) == "num_hps(dummy_1,cnt_1).\n");
  const auto e4 = parse_clause("defective(A) :- has_hp(A,B), has_size(B,C).");
  CHECK(emit_facts(make_dummy_example(e4, kb)) == "has_hp(dummy_1,dummy_1_hp1).\nhas_size(dummy_1_hp1,dummy_1_v1).\n");

  const auto empty = make_dummy_example(parse_clause("defective(A)."), kb);
  CHECK(empty.facts.empty());
  CHECK(empty.label == Label::ok);

  for (const auto& e : {e1, e2, e3, e4}) {
    const auto d = make_dummy_example(e, kb);
    CHECK(clause_covers(e, d, kb.background()).covered);
    std::set<std::string> body_preds;
    for (const auto& a : e.body) body_preds.insert(a.predicate);
    for (const auto& f : d.facts) CHECK(body_preds.count(f.predicate) == 1);
  }

  const auto bad = parse_clause("defective(A) :- total_volume(A,B), num_leq(B,tvol_small), num_leq(tvol_large,B).");
  CHECK_THROWS_AS(make_dummy_example(bad, kb), ConstructionError);
}

TEST_CASE("dummies built from learned clauses are always covered") {
  std::mt19937 rng(41);
  KnowledgeBase kb;
  kb.set_background(fixture::background());
  for (int trial = 0; trial < 200; ++trial) {
    const auto seed = fixture::random_example(rng, "s" + std::to_string(trial), 3);
    const auto bottom = build_bottom_clause(seed, kb.background(), default_modes(), LearnerConfig{});
    std::vector<int> picked;
    for (int i = 0; i < static_cast<int>(bottom.literals.size()); ++i) {
      if (rng() % 4 == 0) picked.push_back(i);
    }
    const HornClause c = canonicalize(clause_from_literals(bottom, picked));
    if (!is_linked(c)) continue;
    const auto d = make_dummy_example(c, kb);
    CHECK(clause_covers(c, d, kb.background()).covered);
  }
}

TEST_CASE("case 1 adds the example with its inferred label") {
  KnowledgeBase kb = planted_kb(5, 40, 10);
  const auto [ex, shown] = pick(kb, Label::defective);
  const auto before = kb.revision();
  const auto n = kb.examples().size();
  const auto r = submit_feedback(kb, accept_all(kb, shown), shown, FeedbackPolicy{});
  CHECK(r.feedback_case == 1);
  CHECK_FALSE(r.retrained);
  CHECK(r.new_revision == before + 1);
  REQUIRE(kb.examples().size() == n + 1);
  CHECK(kb.examples().back().label == Label::defective);
  CHECK(kb.examples().back().provenance == Provenance::user_feedback);
  CHECK(kb.examples().back().facts == ex.facts);

  FeedbackPolicy eager;
  eager.retrain_on_accept = true;
  const auto [ex2, shown2] = pick(kb, Label::ok);
  (void)ex2;
  const auto r2 = submit_feedback(kb, accept_all(kb, shown2), shown2, eager);
  CHECK(r2.retrained);
  CHECK(r2.new_revision == before + 3);
}

TEST_CASE("case 2 adds the opposite label and retrains") {
  KnowledgeBase kb = planted_kb(6, 40, 10);
  const auto [ex, shown] = pick(kb, Label::defective);
  Verdict v = accept_all(kb, shown);
  v.classification_accepted = false;
  const auto before = kb.revision();
  const auto r = submit_feedback(kb, v, shown, FeedbackPolicy{});
  CHECK(r.feedback_case == 2);
  CHECK(r.retrained);
  CHECK(r.new_revision == before + 2);
  CHECK(kb.examples().back().label == Label::ok);
  CHECK(kb.theory().train_stats.negatives_total + kb.theory().train_stats.positives_total ==
        static_cast<int>(kb.labeled_examples().size()));
  CHECK(theory_accuracy(kb.theory(), kb.labeled_examples(), kb.background()) ==
        doctest::Approx(kb.theory().train_stats.accuracy));
  CHECK(load_kb(save_kb(kb)) == kb);
}

TEST_CASE("case 3 on a defective prediction creates a dummy the new theory rejects") {
  KnowledgeBase kb = planted_kb(7, 60, 10);
  const auto [ex, shown] = pick(kb, Label::defective);
  REQUIRE(shown.justifications.size() >= 1);
  Verdict v = accept_all(kb, shown);
  std::size_t rejected = 0;
  for (std::size_t i = 0; i < v.justification_accepted.size(); ++i) {
    if (shown.justifications[i].satisfied) {
      v.justification_accepted[i] = false;
      rejected = i;
      break;
    }
  }
  const HornClause rejected_clause = kb.theory().clauses[shown.justifications[rejected].clause_index];
  const auto before = kb.revision();
  const auto r = submit_feedback(kb, v, shown, FeedbackPolicy{});
  CHECK(r.feedback_case == 3);
  CHECK(r.retrained);
  REQUIRE(r.dummy_ids.size() == 1);
  CHECK(r.new_revision == before + 3);
  const SymbolicExample* dummy = nullptr;
  for (const auto& e : kb.examples()) {
    if (e.image_id == r.dummy_ids[0]) dummy = &e;
  }
  REQUIRE(dummy != nullptr);
  CHECK(dummy->label == Label::ok);
  CHECK(clause_covers(rejected_clause, *dummy, kb.background()).covered);
  CHECK_FALSE(entails(kb.theory(), *dummy, kb.background()));
  CHECK(kb.examples().back().image_id == ex.image_id);
  CHECK(kb.examples().back().label == Label::defective);
}

TEST_CASE("case 3 on an ok prediction records a coverage gap") {
  KnowledgeBase kb = planted_kb(8, 40, 10);
  const auto [ex, shown] = pick(kb, Label::ok);
  REQUIRE_FALSE(shown.justifications.empty());
  Verdict v = accept_all(kb, shown);
  v.justification_accepted[0] = false;
  const auto before = kb.revision();
  const auto r = submit_feedback(kb, v, shown, FeedbackPolicy{});
  CHECK(r.feedback_case == 3);
  CHECK_FALSE(r.retrained);
  CHECK(r.gaps_recorded == 1);
  CHECK(r.new_revision == before + 2);
  REQUIRE(kb.coverage_gaps().size() == 1);
  CHECK(kb.coverage_gaps()[0] == CoverageGap{ex.image_id, shown.justifications[0].clause_index});
  CHECK(kb.examples().back().label == Label::ok);
}

TEST_CASE("rejected verdicts leave the KB untouched") {
  KnowledgeBase kb = planted_kb(9, 30, 5);
  const auto [ex, shown] = pick(kb, Label::ok);
  const std::string snapshot = save_kb(kb);
  Verdict stale = accept_all(kb, shown);
  stale.revision -= 1;
  try {
    submit_feedback(kb, stale, shown, FeedbackPolicy{});
    FAIL("expected StaleVerdictError");
  } catch (const StaleVerdictError& e) {
    CHECK(e.current_revision() == static_cast<long long>(kb.revision()));
  }
  Verdict unknown = accept_all(kb, shown);
  unknown.image_id = "nope";
  CHECK_THROWS_AS(submit_feedback(kb, unknown, shown, FeedbackPolicy{}), NotFoundError);
  Verdict short_flags = accept_all(kb, shown);
  short_flags.justification_accepted.push_back(true);
  CHECK_THROWS_AS(submit_feedback(kb, short_flags, shown, FeedbackPolicy{}), PreconditionError);
  CHECK(save_kb(kb) == snapshot);
}

TEST_CASE("retrain needs labeled examples") {
  KnowledgeBase kb;
  kb.set_background(fixture::background());
  CHECK_THROWS_AS(retrain(kb, FeedbackPolicy{}), PreconditionError);
  CHECK(kb.revision() == 1);
}

TEST_CASE("event log round trips") {
  CHECK(load_kb(save_kb(KnowledgeBase{})) == KnowledgeBase{});
  CHECK(save_kb(KnowledgeBase{}).empty());

  KnowledgeBase kb = planted_kb(10, 30, 6);
  for (int i = 0; i < 3; ++i) {
    const auto [ex, shown] = pick(kb, i == 1 ? Label::ok : Label::defective);
    Verdict v = accept_all(kb, shown);
    v.classification_accepted = i != 0;
    if (i == 2 && !v.justification_accepted.empty()) v.justification_accepted[0] = false;
    submit_feedback(kb, v, shown, FeedbackPolicy{});
  }
  const std::string bytes = save_kb(kb);
  const KnowledgeBase back = load_kb(bytes);
  CHECK(back == kb);
  CHECK(back.revision() == kb.revision());
  CHECK(save_kb(back) == bytes);

  // Replaying and retraining with the same config reproduces the theory.
  KnowledgeBase replay = load_kb(bytes);
  FeedbackPolicy policy;
  const Theory a = retrain(replay, policy);
  KnowledgeBase replay2 = load_kb(bytes);
  CHECK(retrain(replay2, policy) == a);
}

TEST_CASE("corrupted logs name the failing record") {
  KnowledgeBase kb = planted_kb(11, 10, 2);
  const std::string bytes = save_kb(kb);
  const auto records = static_cast<long long>(kb.events().size());

  const std::string truncated = bytes.substr(0, bytes.size() - 5);
  try {
    load_kb(truncated);
    FAIL("expected LogError");
  } catch (const LogError& e) {
    CHECK(e.record_index() == records - 1);
    CHECK(e.last_valid_index() == records - 2);
    CHECK(std::string(e.what()).find("last valid record index " + std::to_string(records - 2)) != std::string::npos);
  }

  std::string flipped = bytes;
  const auto second = flipped.find('\n') + 1;
  flipped[second + 4] = flipped[second + 4] == 'x' ? 'y' : 'x';
  try {
    load_kb(flipped);
    FAIL("expected LogError");
  } catch (const LogError& e) {
    CHECK(e.record_index() == 1);
  }

  const auto first_end = bytes.find('\n') + 1;
  const std::string reordered = bytes.substr(first_end, bytes.find('\n', first_end) + 1 - first_end);
  CHECK_THROWS_AS(load_kb(reordered), LogError);
}

TEST_CASE("theory statistics survive the log exactly") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    KnowledgeBase kb;
    Theory t;
    t.clauses.push_back(parse_clause(kTarget));
    t.train_stats = TrainStats{1, 2, 3, 4, u(rng)};
    kb.replace_theory(t);
    CHECK(load_kb(save_kb(kb)).theory() == t);
  }
}
