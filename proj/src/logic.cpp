#include "dtriage/logic.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <unordered_map>

#include "dtriage/errors.hpp"

namespace dtriage {
namespace {

bool is_name_char(char c) noexcept {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

bool all_name_chars(std::string_view s) noexcept {
  return std::all_of(s.begin(), s.end(), is_name_char);
}

// Cursor over one line of text; columns are 1-based.
class Cursor {
 public:
  Cursor(std::string_view text, std::size_t line, std::size_t column_offset)
      : text_(text), line_(line), column_offset_(column_offset) {}

  void skip_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r')) {
      ++pos_;
    }
  }

  bool at_end() const noexcept { return pos_ >= text_.size(); }
  char peek() const noexcept { return at_end() ? '\0' : text_[pos_]; }
  std::size_t pos() const noexcept { return pos_; }

  bool consume(char c) {
    skip_space();
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!consume(c)) {
      fail(std::string("expected '") + c + "'" + (at_end() ? " but reached end of input" : ""));
    }
  }

  bool consume_literal(std::string_view lit) {
    skip_space();
    if (text_.substr(pos_, lit.size()) == lit) {
      pos_ += lit.size();
      return true;
    }
    return false;
  }

  std::string name() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_name_char(text_[pos_])) {
      ++pos_;
    }
    if (start == pos_) {
      fail("expected a name");
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what, line_, column_offset_ + pos_ + 1);
  }
  [[noreturn]] void fail_at(const std::string& what, std::size_t pos) const {
    throw ParseError(what, line_, column_offset_ + pos + 1);
  }

 private:
  std::string_view text_;
  std::size_t line_;
  std::size_t column_offset_;
  std::size_t pos_ = 0;
};

Atom read_atom(Cursor& cur) {
  cur.skip_space();
  const std::size_t pred_pos = cur.pos();
  Atom atom;
  atom.predicate = cur.name();
  if (!is_constant_name(atom.predicate)) {
    cur.fail_at("predicate '" + atom.predicate + "' must start with a lowercase letter", pred_pos);
  }
  cur.expect('(');
  do {
    cur.skip_space();
    const std::size_t arg_pos = cur.pos();
    std::string name = cur.name();
    if (is_variable_name(name)) {
      atom.args.push_back(Term::var(std::move(name)));
    } else if (is_constant_name(name)) {
      atom.args.push_back(Term::constant(std::move(name)));
    } else {
      cur.fail_at("'" + name + "' is neither a constant nor a variable", arg_pos);
    }
  } while (cur.consume(','));
  cur.expect(')');
  return atom;
}

std::string variable_name(std::size_t index) {
  std::string name(1, static_cast<char>('A' + index % 26));
  if (index >= 26) {
    name += std::to_string(index / 26);
  }
  return name;
}

}  // namespace

bool Atom::is_ground() const noexcept {
  return std::none_of(args.begin(), args.end(), [](const Term& t) { return t.is_variable(); });
}

Atom apply_substitution(const Atom& atom, const Substitution& sub) {
  Atom out = atom;
  for (Term& t : out.args) {
    if (!t.is_variable()) continue;
    for (const auto& [var, value] : sub) {
      if (var == t.name) {
        t = Term::constant(value);
        break;
      }
    }
  }
  return out;
}

Atom make_fact(std::string predicate, std::vector<std::string> constants) {
  Atom atom{std::move(predicate), {}};
  atom.args.reserve(constants.size());
  for (auto& c : constants) {
    atom.args.push_back(Term::constant(std::move(c)));
  }
  return atom;
}

bool is_constant_name(std::string_view s) noexcept {
  return !s.empty() && s[0] >= 'a' && s[0] <= 'z' && all_name_chars(s);
}

bool is_variable_name(std::string_view s) noexcept {
  return !s.empty() && s[0] >= 'A' && s[0] <= 'Z' && all_name_chars(s);
}

std::string format_atom(const Atom& atom) {
  std::string out = atom.predicate;
  out += '(';
  for (std::size_t i = 0; i < atom.args.size(); ++i) {
    if (i > 0) {
      out += ',';
    }
    out += atom.args[i].name;
  }
  out += ')';
  return out;
}

Atom parse_atom(std::string_view text, std::size_t line, std::size_t column_offset) {
  Cursor cur(text, line, column_offset);
  Atom atom = read_atom(cur);
  cur.skip_space();
  if (!cur.at_end()) {
    cur.fail("unexpected trailing input");
  }
  return atom;
}

std::vector<std::string> clause_variables(const HornClause& clause) {
  std::vector<std::string> vars;
  auto visit = [&vars](const Atom& a) {
    for (const Term& t : a.args) {
      if (t.is_variable() && std::find(vars.begin(), vars.end(), t.name) == vars.end()) {
        vars.push_back(t.name);
      }
    }
  };
  visit(clause.head);
  for (const Atom& a : clause.body) {
    visit(a);
  }
  return vars;
}

bool is_linked(const HornClause& clause) {
  if (clause.head.predicate != kTargetPredicate || clause.head.args.size() != 1 ||
      !clause.head.args[0].is_variable()) {
    return false;
  }
  // An atom is linked when at least one of its variables is already known;
  // all of its variables then become known.
  const std::string& head_var = clause.head.args[0].name;
  const bool head_used = std::any_of(clause.body.begin(), clause.body.end(), [&](const Atom& a) {
    return std::find(a.args.begin(), a.args.end(), Term::var(head_var)) != a.args.end();
  });
  if (!clause.body.empty() && !head_used) {
    return false;
  }
  std::set<std::string> known{head_var};
  for (const Atom& atom : clause.body) {
    bool touches = false;
    bool has_var = false;
    for (const Term& t : atom.args) {
      if (t.is_variable()) {
        has_var = true;
        touches = touches || known.count(t.name) > 0;
      }
    }
    if (has_var && !touches) {
      return false;
    }
    for (const Term& t : atom.args) {
      if (t.is_variable()) {
        known.insert(t.name);
      }
    }
  }
  return true;
}

HornClause canonicalize(const HornClause& clause) {
  std::unordered_map<std::string, std::string> rename;
  const auto vars = clause_variables(clause);
  for (std::size_t i = 0; i < vars.size(); ++i) {
    rename.emplace(vars[i], variable_name(i));
  }
  auto apply = [&rename](Atom a) {
    for (Term& t : a.args) {
      if (t.is_variable()) {
        t.name = rename.at(t.name);
      }
    }
    return a;
  };
  HornClause out{apply(clause.head), {}};
  out.body.reserve(clause.body.size());
  for (const Atom& a : clause.body) {
    out.body.push_back(apply(a));
  }
  return out;
}

std::string format_clause(const HornClause& clause) {
  const HornClause c = canonicalize(clause);
  std::string out = format_atom(c.head);
  if (!c.body.empty()) {
    out += " :- ";
    for (std::size_t i = 0; i < c.body.size(); ++i) {
      if (i > 0) {
        out += ", ";
      }
      out += format_atom(c.body[i]);
    }
  }
  out += '.';
  return out;
}

HornClause parse_clause(std::string_view text, std::size_t line) {
  Cursor cur(text, line, 0);
  HornClause clause;
  clause.head = read_atom(cur);
  if (clause.head.predicate != kTargetPredicate || clause.head.args.size() != 1 ||
      !clause.head.args[0].is_variable()) {
    cur.fail_at("clause head must be defective/1 over a variable", 0);
  }
  if (cur.consume_literal(":-")) {
    do {
      clause.body.push_back(read_atom(cur));
    } while (cur.consume(','));
  }
  cur.expect('.');
  cur.skip_space();
  if (!cur.at_end()) {
    cur.fail("unexpected trailing input");
  }
  return clause;
}

std::string format_theory(const Theory& theory) {
  std::string out;
  for (const HornClause& c : theory.clauses) {
    out += format_clause(c);
    out += '\n';
  }
  return out;
}

Theory parse_theory(std::string_view text) {
  Theory theory;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    std::string_view line = text.substr(start, end - start);
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first != std::string_view::npos && line[first] != '%') {
      theory.clauses.push_back(parse_clause(line, line_no));
    }
    if (end == text.size()) {
      break;
    }
    start = end + 1;
  }
  return theory;
}

}  // namespace dtriage
