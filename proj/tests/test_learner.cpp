#include <doctest.h>

#include <functional>
#include <random>
#include <string>

#include "dtriage/errors.hpp"
#include "dtriage/learner.hpp"
#include "fixtures.hpp"

using namespace dtriage;

namespace {

const char* kTarget = "defective(A) :- has_hp(A,B), has_size(B,vol_large), distance_from_center(B,outer_rim).";

SymbolicExample one_hp(const std::string& id, const std::string& size, Label label) {
  const std::string img = image_constant(id);
  const std::string hp = "hp_" + id + "_1";
  return SymbolicExample{id,
                         {make_fact("total_volume", {img, "tvol_medium"}), make_fact("num_hps", {img, "cnt_1"}),
                          make_fact("has_hp", {img, hp}), make_fact("has_size", {hp, size}),
                          make_fact("distance_from_center", {hp, "outer_rim"}),
                          make_fact("eccentricity", {hp, "round"})},
                         label,
                         Provenance::annotated};
}

struct Split {
  std::vector<SymbolicExample> pos, neg;
};

Split planted(unsigned seed, int count, const HornClause& target) {
  std::mt19937 rng(seed);
  Split s;
  for (int i = 0; i < count; ++i) {
    auto ex = fixture::random_example(rng, std::to_string(1000 + i), 3);
    if (clause_covers(target, ex, fixture::background()).covered) {
      ex.label = Label::defective;
      s.pos.push_back(ex);
    } else {
      ex.label = Label::ok;
      s.neg.push_back(ex);
    }
  }
  return s;
}

int count_covered(const HornClause& c, const std::vector<SymbolicExample>& xs) {
  int n = 0;
  for (const auto& x : xs) n += clause_covers(c, x, fixture::background()).covered ? 1 : 0;
  return n;
}

}  // namespace

TEST_CASE("mode declarations parse and format") {
  const auto m = parse_mode("has_hp(+image,-hp)");
  CHECK(m.predicate == "has_hp");
  REQUIRE(m.args.size() == 2);
  CHECK(m.args[0].role == ArgRole::input_var);
  CHECK(m.args[1].role == ArgRole::output_var);
  CHECK(m.args[1].sort == "hp");
  CHECK(format_mode(m) == "has_hp(+image,-hp)");
  CHECK_THROWS_AS(parse_mode("has_hp(image,-hp)"), ConfigError);
  CHECK_THROWS_AS(parse_mode("has_hp"), ConfigError);
  CHECK(default_modes().size() == 8);
}

TEST_CASE("learner config") {
  CHECK(LearnerConfig{} == LearnerConfig::parse_json("{}"));
  const auto c = LearnerConfig::parse_json(R"({"noise": 0, "beam_width": 3})");
  CHECK(c.noise == 0);
  CHECK(c.beam_width == 3);
  CHECK(c.search_depth == 50);
  CHECK_THROWS_AS(LearnerConfig::parse_json(R"({"noise": -1})"), ConfigError);
  CHECK_THROWS_AS(LearnerConfig::parse_json(R"({"depth": 3})"), ConfigError);
  CHECK_THROWS_AS(LearnerConfig::parse_json(R"({"noise": "x"})"), ConfigError);
}

TEST_CASE("clause_covers on cast_6858") {
  const auto ex = fixture::cast_6858();
  const auto& bg = fixture::background();
  const auto hit = clause_covers(fixture::clause("defective(A) :- has_hp(A,B), has_size(B,vol_large)."), ex, bg);
  CHECK(hit.covered);
  CHECK(hit.binding == Substitution{{"A", "cast_6858"}, {"B", "hp_6858_2"}});
  CHECK(clause_covers(fixture::clause("defective(A)."), ex, bg).covered);
  const auto miss =
      clause_covers(fixture::clause("defective(A) :- has_hp(A,B), distance_from_center(B,inner_rim)."), ex, bg);
  CHECK_FALSE(miss.covered);
  CHECK(miss.binding.empty());
  CHECK(clause_covers(fixture::clause("defective(A) :- total_volume(A,B), num_leq(tvol_medium,B)."), ex, bg).covered);
  CHECK_FALSE(
      clause_covers(fixture::clause("defective(A) :- total_volume(A,B), num_leq(B,tvol_medium)."), ex, bg).covered);
}

TEST_CASE("bottom clause contains the seed's chained literals") {
  const auto bottom = build_bottom_clause(fixture::cast_6858(), fixture::background(), default_modes(), LearnerConfig{});
  std::vector<std::string> text;
  for (const auto& l : bottom.literals) text.push_back(format_atom(l));
  auto has = [&](const std::string& s) { return std::find(text.begin(), text.end(), s) != text.end(); };
  CHECK(has("has_hp(V0,V1)"));
  CHECK(has("has_size(V1,vol_large)"));
  CHECK(has("distance_from_center(V1,outer_rim)"));
  CHECK(has("num_leq(V3,tvol_large)"));
  CHECK(has("num_leq(tvol_small,V3)"));
  CHECK_FALSE(has("num_leq(V3,vol_large)"));
  CHECK(bottom.literals.size() == bottom.inputs.size());
  LearnerConfig one;
  one.max_body_atoms = 1;
  const auto shallow = build_bottom_clause(fixture::cast_6858(), fixture::background(), default_modes(), one);
  for (const auto& l : shallow.literals) {
    CHECK(l.args[0] == Term::var("V0"));
  }
}

TEST_CASE("noise threshold decides whether a contaminated pattern is accepted") {
  std::vector<SymbolicExample> pos, neg;
  for (int i = 0; i < 5; ++i) pos.push_back(one_hp("p" + std::to_string(i), "vol_large", Label::defective));
  for (int i = 0; i < 4; ++i) neg.push_back(one_hp("n" + std::to_string(i), "vol_small", Label::ok));
  neg.push_back(one_hp("flip", "vol_large", Label::ok));
  const auto pattern = fixture::clause("defective(A) :- has_hp(A,B), has_size(B,vol_large).");
  CHECK(count_covered(pattern, pos) == 5);
  CHECK(count_covered(pattern, neg) == 1);

  LearnerConfig cfg;
  cfg.noise = 1;
  const Theory t1 = learn_theory(pos, neg, fixture::background(), default_modes(), cfg);
  REQUIRE(t1.clauses.size() == 1);
  CHECK(count_covered(t1.clauses[0], pos) == 5);
  CHECK(count_covered(t1.clauses[0], neg) == 1);
  for (const auto& x : pos) CHECK(clause_covers(t1.clauses[0], x, fixture::background()).covered);
  for (const auto& x : neg) {
    CHECK(clause_covers(t1.clauses[0], x, fixture::background()).covered ==
          clause_covers(pattern, x, fixture::background()).covered);
  }
  CHECK(t1.train_stats.accuracy == doctest::Approx(0.9));

  cfg.noise = 0;
  const Theory t0 = learn_theory(pos, neg, fixture::background(), default_modes(), cfg);
  CHECK(t0.clauses.empty());
  CHECK(t0.train_stats.accuracy == doctest::Approx(0.5));
}

TEST_CASE("degenerate inputs") {
  std::vector<SymbolicExample> neg;
  for (int i = 0; i < 4; ++i) neg.push_back(one_hp("n" + std::to_string(i), "vol_small", Label::ok));
  const Theory t = learn_theory({}, neg, fixture::background(), default_modes(), LearnerConfig{});
  CHECK(t.clauses.empty());
  CHECK(t.train_stats.accuracy == 1.0);
  CHECK_THROWS_AS(learn_theory({}, neg, fixture::background(), {}, LearnerConfig{}), ConfigError);
  CHECK_THROWS_AS(learn_theory({}, {}, fixture::background(), {parse_mode("has_hp(-image,-hp)")}, LearnerConfig{}),
                  ConfigError);
  CHECK_THROWS_AS(learn_theory(neg, {}, fixture::background(), default_modes(), LearnerConfig{}), PreconditionError);
}

TEST_CASE("theory_accuracy") {
  std::vector<SymbolicExample> xs;
  for (int i = 0; i < 40; ++i) xs.push_back(one_hp("o" + std::to_string(i), "vol_small", Label::ok));
  for (int i = 0; i < 60; ++i) xs.push_back(one_hp("d" + std::to_string(i), "vol_large", Label::defective));
  CHECK(theory_accuracy(Theory{}, xs, fixture::background()) == doctest::Approx(0.4));
  Theory exact;
  exact.clauses.push_back(fixture::clause("defective(A) :- has_hp(A,B), has_size(B,vol_large)."));
  CHECK(theory_accuracy(exact, xs, fixture::background()) == 1.0);
  xs.push_back(one_hp("u", "vol_small", Label::unlabeled));
  CHECK_THROWS_AS(theory_accuracy(exact, xs, fixture::background()), PreconditionError);
}

TEST_CASE("planted rule is recovered and accepted clauses are sound") {
  const auto target = fixture::clause(kTarget);
  for (unsigned seed : {1u, 2u, 3u}) {
    const Split s = planted(seed, 86, target);
    REQUIRE(s.pos.size() >= 2);
    LearnerConfig cfg;
    cfg.noise = 0;
    const Theory t = learn_theory(s.pos, s.neg, fixture::background(), default_modes(), cfg);
    CHECK(t.train_stats.accuracy == 1.0);
    CHECK(t.clauses.size() <= 3);
    for (const auto& c : t.clauses) {
      CHECK(is_linked(c));
      CHECK(count_covered(c, s.pos) >= cfg.min_pos);
      CHECK(count_covered(c, s.neg) <= cfg.noise);
    }
    const Theory again = learn_theory(s.pos, s.neg, fixture::background(), default_modes(), cfg);
    CHECK(format_theory(again) == format_theory(t));
    CHECK(again == t);
  }
}

TEST_CASE("soundness and subsumption with label noise") {
  const auto target = fixture::clause(kTarget);
  Split s = planted(7, 120, target);
  std::mt19937 rng(70);
  for (int i = 0; i < 4; ++i) {
    std::swap(s.pos[rng() % s.pos.size()].label, s.neg[rng() % s.neg.size()].label);
  }
  std::vector<SymbolicExample> pos, neg;
  for (auto& x : s.pos) (x.label == Label::defective ? pos : neg).push_back(x);
  for (auto& x : s.neg) (x.label == Label::defective ? pos : neg).push_back(x);
  LearnerConfig cfg;
  cfg.noise = 3;
  const Theory t = learn_theory(pos, neg, fixture::background(), default_modes(), cfg);
  CHECK_FALSE(t.clauses.empty());
  for (const auto& c : t.clauses) {
    CHECK(count_covered(c, neg) <= cfg.noise);
    CHECK(count_covered(c, pos) >= cfg.min_pos);
    // Dropping the last literal keeps the clause linked and never loses coverage.
    if (c.body.empty()) continue;
    HornClause shorter = c;
    shorter.body.pop_back();
    CHECK(is_linked(shorter));
    CHECK(count_covered(shorter, pos) >= count_covered(c, pos));
    CHECK(count_covered(shorter, neg) >= count_covered(c, neg));
  }
}

TEST_CASE("unbounded beam search matches exhaustive subset enumeration") {
  std::mt19937 rng(21);
  for (int trial = 0; trial < 12; ++trial) {
    std::vector<SymbolicExample> pos, neg;
    for (int i = 0; i < 6; ++i) {
      const Label l = rng() % 2 ? Label::defective : Label::ok;
      auto ex = fixture::random_example(rng, "t" + std::to_string(i), 2, l);
      (l == Label::defective ? pos : neg).push_back(ex);
    }
    if (pos.empty()) continue;
    LearnerConfig cfg;
    cfg.noise = static_cast<int>(rng() % 2);
    cfg.min_pos = 1;
    cfg.max_body_atoms = 3;
    cfg.beam_width = 1'000'000;
    cfg.search_depth = 1'000'000;
    const auto bottom = build_bottom_clause(pos[0], fixture::background(), default_modes(), cfg);
    const int n = static_cast<int>(bottom.literals.size());
    REQUIRE(n <= 40);

    // Enumerate every index-sorted subset of at most max_body_atoms literals.
    std::optional<std::vector<int>> best;
    int best_p = 0, best_n = 0;
    auto better = [&](const std::vector<int>& b, int p, int q) {
      if (!best) return true;
      if (p - q != best_p - best_n) return p - q > best_p - best_n;
      if (b.size() != best->size()) return b.size() < best->size();
      return b < *best;
    };
    std::vector<int> cur;
    std::function<void(int)> rec = [&](int from) {
      const HornClause c = clause_from_literals(bottom, cur);
      if (is_linked(c)) {
        const int p = count_covered(c, pos), q = count_covered(c, neg);
        if (q <= cfg.noise && p >= cfg.min_pos && better(cur, p, q)) {
          best = cur;
          best_p = p;
          best_n = q;
        }
      }
      if (static_cast<int>(cur.size()) == cfg.max_body_atoms) return;
      for (int j = from; j < n; ++j) {
        cur.push_back(j);
        rec(j + 1);
        cur.pop_back();
      }
    };
    rec(0);

    const auto found = search_clause(bottom, pos, neg, fixture::background(), cfg);
    REQUIRE(found.best.has_value() == best.has_value());
    if (best) {
      CHECK(*found.best == *best);
      CHECK(found.positives == best_p);
      CHECK(found.negatives == best_n);
    }
  }
}

TEST_CASE("search budget bounds node expansions") {
  const Split s = planted(4, 60, fixture::clause(kTarget));
  const auto bottom = build_bottom_clause(s.pos[0], fixture::background(), default_modes(), LearnerConfig{});
  for (int depth : {1, 5, 50}) {
    LearnerConfig cfg;
    cfg.search_depth = depth;
    CHECK(search_clause(bottom, s.pos, s.neg, fixture::background(), cfg).nodes_expanded <= depth);
  }
}
