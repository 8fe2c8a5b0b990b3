#include "dtriage/prover.hpp"

#include <algorithm>

namespace dtriage {
namespace {

const std::vector<Tuple> kNoTuples;

// Plain recursive matcher. Solutions are reported through Sink::operator(),
// which returns false to stop the search.
template <typename Sink>
bool match(const CompiledClause& clause, const FactBase& facts, std::size_t index, Binding& binding,
           Sink& sink) {
  if (index == clause.body.size()) {
    return !sink(binding);
  }
  const CompiledAtom& atom = clause.body[index];
  const auto& candidates = facts.tuples(atom.predicate);
  std::vector<int> newly_bound;
  newly_bound.reserve(atom.args.size());
  for (const Tuple& tuple : candidates) {
    if (tuple.size() != atom.args.size()) {
      continue;
    }
    bool ok = true;
    for (std::size_t i = 0; i < tuple.size() && ok; ++i) {
      const CompiledArg& arg = atom.args[i];
      if (!arg.is_variable) {
        ok = arg.id == tuple[i];
      } else if (binding[static_cast<std::size_t>(arg.id)] < 0) {
        binding[static_cast<std::size_t>(arg.id)] = tuple[i];
        newly_bound.push_back(arg.id);
      } else {
        ok = binding[static_cast<std::size_t>(arg.id)] == tuple[i];
      }
    }
    if (ok && match(clause, facts, index + 1, binding, sink)) {
      return true;
    }
    for (int v : newly_bound) {
      binding[static_cast<std::size_t>(v)] = -1;
    }
    newly_bound.clear();
  }
  return false;
}

}  // namespace

int SymbolTable::intern(std::string_view name) {
  auto it = ids_.find(std::string(name));
  if (it != ids_.end()) {
    return it->second;
  }
  const int id = static_cast<int>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(std::string(name), id);
  return id;
}

int SymbolTable::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  return it == ids_.end() ? -1 : it->second;
}

FactBase::FactBase(SymbolTable& symbols, std::span<const Atom> facts, std::span<const Atom> background) {
  for (const Atom& a : facts) {
    add(symbols, a);
    for (const Term& t : a.args) {
      const int id = symbols.intern(t.name);
      if (std::find(example_constants_.begin(), example_constants_.end(), id) == example_constants_.end()) {
        example_constants_.push_back(id);
      }
    }
  }
  for (const Atom& a : background) {
    add(symbols, a);
  }
}

void FactBase::add(SymbolTable& symbols, const Atom& atom) {
  const int pred = symbols.intern(atom.predicate);
  Tuple tuple;
  tuple.reserve(atom.args.size());
  for (const Term& t : atom.args) {
    tuple.push_back(symbols.intern(t.name));
  }
  if (lookup_[pred].insert(tuple).second) {
    by_predicate_[pred].push_back(std::move(tuple));
  }
}

const std::vector<Tuple>& FactBase::tuples(int predicate) const {
  auto it = by_predicate_.find(predicate);
  return it == by_predicate_.end() ? kNoTuples : it->second;
}

bool FactBase::contains(int predicate, const Tuple& args) const {
  auto it = lookup_.find(predicate);
  return it != lookup_.end() && it->second.count(args) > 0;
}

CompiledClause compile_clause(const HornClause& clause, SymbolTable& symbols) {
  CompiledClause out;
  out.variable_names = clause_variables(clause);
  auto var_index = [&out](const std::string& name) {
    return static_cast<int>(std::find(out.variable_names.begin(), out.variable_names.end(), name) -
                            out.variable_names.begin());
  };
  out.head_variable = var_index(clause.head.args.at(0).name);
  for (const Atom& a : clause.body) {
    CompiledAtom ca;
    ca.predicate = symbols.intern(a.predicate);
    for (const Term& t : a.args) {
      ca.args.push_back(t.is_variable() ? CompiledArg{true, var_index(t.name)}
                                        : CompiledArg{false, symbols.intern(t.name)});
    }
    out.body.push_back(std::move(ca));
  }
  return out;
}

bool for_each_solution(const CompiledClause& clause, const FactBase& facts, int image_constant,
                       const std::function<bool(const Binding&)>& visit) {
  Binding binding(clause.num_variables(), -1);
  binding[static_cast<std::size_t>(clause.head_variable)] = image_constant;
  auto sink = [&visit](const Binding& b) { return visit(b); };
  return match(clause, facts, 0, binding, sink);
}

bool solve_first(const CompiledClause& clause, const FactBase& facts, int image_constant, Binding& out) {
  Binding binding(clause.num_variables(), -1);
  binding[static_cast<std::size_t>(clause.head_variable)] = image_constant;
  auto sink = [&out](const Binding& b) {
    out = b;
    return false;
  };
  return match(clause, facts, 0, binding, sink);
}

bool has_solution(const CompiledClause& clause, const FactBase& facts, int image_constant) {
  Binding binding(clause.num_variables(), -1);
  binding[static_cast<std::size_t>(clause.head_variable)] = image_constant;
  auto sink = [](const Binding&) { return false; };
  return match(clause, facts, 0, binding, sink);
}

}  // namespace dtriage
