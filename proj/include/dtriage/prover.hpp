#pragma once

// Ground-fact store and backtracking solver for function-free Horn clause
// bodies. Symbols are interned so inner loops compare integers.

#include <functional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dtriage/logic.hpp"

namespace dtriage {

class SymbolTable {
 public:
  int intern(std::string_view name);
  // -1 when the name was never interned.
  int find(std::string_view name) const;
  const std::string& name(int id) const { return names_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return names_.size(); }

 private:
  std::unordered_map<std::string, int> ids_;
  std::vector<std::string> names_;
};

using Tuple = std::vector<int>;

// Facts of one example followed by the shared background, in that order.
class FactBase {
 public:
  FactBase() = default;
  FactBase(SymbolTable& symbols, std::span<const Atom> facts, std::span<const Atom> background);

  const std::vector<Tuple>& tuples(int predicate) const;
  bool contains(int predicate, const Tuple& args) const;

  // Constants of the example facts (background excluded), first-appearance order.
  const std::vector<int>& example_constants() const noexcept { return example_constants_; }

 private:
  void add(SymbolTable& symbols, const Atom& atom);

  std::unordered_map<int, std::vector<Tuple>> by_predicate_;
  std::unordered_map<int, std::set<Tuple>> lookup_;
  std::vector<int> example_constants_;
};

struct CompiledArg {
  bool is_variable = false;
  int id = -1;  // variable index, or symbol id for constants
};

struct CompiledAtom {
  int predicate = -1;
  std::vector<CompiledArg> args;
};

struct CompiledClause {
  int head_variable = 0;
  std::vector<std::string> variable_names;  // index -> name
  std::vector<CompiledAtom> body;

  std::size_t num_variables() const noexcept { return variable_names.size(); }
};

CompiledClause compile_clause(const HornClause& clause, SymbolTable& symbols);

// Binding vector indexed by variable; -1 marks unbound.
using Binding = std::vector<int>;

// Depth-first search over body atoms left to right, trying facts in store
// order. `visit` receives each complete solution and returns false to stop.
// Returns true if stopped by the visitor.
bool for_each_solution(const CompiledClause& clause, const FactBase& facts, int image_constant,
                       const std::function<bool(const Binding&)>& visit);

// First solution in the order above; nullopt-like via empty vector.
bool solve_first(const CompiledClause& clause, const FactBase& facts, int image_constant, Binding& out);

// Cheaper existence check for hot loops (no std::function).
bool has_solution(const CompiledClause& clause, const FactBase& facts, int image_constant);

}  // namespace dtriage
