#pragma once

// Function-free first-order terms, atoms and Horn clauses, plus their text
// form ("pred(a,B)." / "defective(A) :- p(A,B), q(B,c).").

#include <compare>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dtriage {

struct Term {
  enum class Kind { variable, constant };

  Kind kind = Kind::constant;
  std::string name;

  static Term var(std::string name) { return {Kind::variable, std::move(name)}; }
  static Term constant(std::string name) { return {Kind::constant, std::move(name)}; }

  bool is_variable() const noexcept { return kind == Kind::variable; }
  bool is_constant() const noexcept { return kind == Kind::constant; }

  auto operator<=>(const Term&) const = default;
  bool operator==(const Term&) const = default;
};

struct Atom {
  std::string predicate;
  std::vector<Term> args;

  bool is_ground() const noexcept;
  std::size_t arity() const noexcept { return args.size(); }

  auto operator<=>(const Atom&) const = default;
  bool operator==(const Atom&) const = default;
};

// Variable -> constant, in the clause's first-occurrence variable order.
using Substitution = std::vector<std::pair<std::string, std::string>>;

Atom apply_substitution(const Atom& atom, const Substitution& sub);

// Convenience for ground atoms: make_fact("has_hp", {"cast_1", "hp_1_1"}).
Atom make_fact(std::string predicate, std::vector<std::string> constants);

bool is_constant_name(std::string_view s) noexcept;  // [a-z][a-zA-Z0-9_]*
bool is_variable_name(std::string_view s) noexcept;  // [A-Z][a-zA-Z0-9_]*

// "pred(a,B)" with no spaces and no trailing period.
std::string format_atom(const Atom& atom);

// Parses a single atom (no trailing period). Whitespace between tokens is
// tolerated. Line/column in errors are relative to `text` unless offsets are
// supplied.
Atom parse_atom(std::string_view text, std::size_t line = 1, std::size_t column_offset = 0);

inline constexpr std::string_view kTargetPredicate = "defective";

struct HornClause {
  Atom head;
  std::vector<Atom> body;

  bool operator==(const HornClause&) const = default;
};

// Variables in first-occurrence order (head first, then body left to right).
std::vector<std::string> clause_variables(const HornClause& clause);

// Head is defective/1 over a variable, and every body variable is reachable
// from the head variable through variables of preceding atoms.
bool is_linked(const HornClause& clause);

// Renames variables to A, B, C, ... in first-occurrence order.
HornClause canonicalize(const HornClause& clause);

// "defective(A) :- p(A,B), q(B,c)." or "defective(A)." for an empty body.
// Variables are canonicalized before printing.
std::string format_clause(const HornClause& clause);

HornClause parse_clause(std::string_view text, std::size_t line = 1);

struct TrainStats {
  int positives_covered = 0;
  int negatives_covered = 0;
  int positives_total = 0;
  int negatives_total = 0;
  double accuracy = 0.0;

  bool operator==(const TrainStats&) const = default;
};

struct Theory {
  std::vector<HornClause> clauses;
  TrainStats train_stats;

  bool empty() const noexcept { return clauses.empty(); }
  bool operator==(const Theory&) const = default;
};

// One clause per line, trailing newline after each; empty theory -> "".
std::string format_theory(const Theory& theory);

// Reads clauses back; blank lines and lines starting with '%' are skipped.
// train_stats are left zeroed.
Theory parse_theory(std::string_view text);

}  // namespace dtriage
