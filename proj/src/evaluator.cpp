#include "dtriage/evaluator.hpp"

#include <algorithm>

#include "dtriage/prover.hpp"

namespace dtriage {
namespace {

// Branch and bound over groundings of the non-head variables. Variables are
// assigned in clause order, each over the domain in order; an atom is decided
// once its last variable is assigned.
class NearestMiss {
 public:
  NearestMiss(const CompiledClause& clause, const FactBase& facts, const std::vector<int>& domain, int image)
      : clause_(clause), facts_(facts), domain_(domain) {
    binding_.assign(clause.num_variables(), -1);
    binding_[static_cast<std::size_t>(clause.head_variable)] = image;
    for (std::size_t v = 0; v < clause.num_variables(); ++v) {
      if (static_cast<int>(v) != clause.head_variable) order_.push_back(static_cast<int>(v));
    }
    decided_at_.assign(order_.size() + 1, {});
    for (std::size_t a = 0; a < clause.body.size(); ++a) {
      std::size_t depth = 0;
      for (const CompiledArg& arg : clause.body[a].args) {
        if (!arg.is_variable || arg.id == clause.head_variable) continue;
        const auto pos = static_cast<std::size_t>(std::find(order_.begin(), order_.end(), arg.id) - order_.begin());
        depth = std::max(depth, pos + 1);
      }
      decided_at_[depth].push_back(a);
    }
  }

  Binding run() {
    best_ = -1;
    int true_now = 0;
    for (std::size_t a : decided_at_[0]) true_now += holds(a) ? 1 : 0;
    search(0, true_now, static_cast<int>(clause_.body.size() - decided_at_[0].size()));
    return best_binding_;
  }

 private:
  bool holds(std::size_t a) const {
    const CompiledAtom& atom = clause_.body[a];
    Tuple t;
    t.reserve(atom.args.size());
    for (const CompiledArg& arg : atom.args) {
      t.push_back(arg.is_variable ? binding_[static_cast<std::size_t>(arg.id)] : arg.id);
    }
    return facts_.contains(atom.predicate, t);
  }

  void search(std::size_t depth, int true_so_far, int undecided) {
    if (true_so_far + undecided <= best_) return;
    if (depth == order_.size()) {
      best_ = true_so_far;
      best_binding_ = binding_;
      return;
    }
    const auto v = static_cast<std::size_t>(order_[depth]);
    const auto& now = decided_at_[depth + 1];
    for (int c : domain_) {
      binding_[v] = c;
      int t = 0;
      for (std::size_t a : now) t += holds(a) ? 1 : 0;
      search(depth + 1, true_so_far + t, undecided - static_cast<int>(now.size()));
      if (best_ == static_cast<int>(clause_.body.size())) break;
    }
    binding_[v] = -1;
  }

  const CompiledClause& clause_;
  const FactBase& facts_;
  const std::vector<int>& domain_;
  std::vector<int> order_;
  std::vector<std::vector<std::size_t>> decided_at_;
  Binding binding_;
  Binding best_binding_;
  int best_ = -1;
};

Justification trace(std::size_t index, const HornClause& clause, const CompiledClause& cc, const Binding& binding,
                    const SymbolTable& symbols, const FactBase& facts) {
  Justification j;
  j.clause_index = index;
  for (std::size_t v = 0; v < cc.num_variables(); ++v) {
    j.binding.emplace_back(cc.variable_names[v], symbols.name(binding[v]));
  }
  j.satisfied = true;
  for (std::size_t a = 0; a < clause.body.size(); ++a) {
    AtomEvaluation e{clause.body[a], apply_substitution(clause.body[a], j.binding), false};
    Tuple t;
    for (const CompiledArg& arg : cc.body[a].args) {
      t.push_back(arg.is_variable ? binding[static_cast<std::size_t>(arg.id)] : arg.id);
    }
    e.truth = facts.contains(cc.body[a].predicate, t);
    j.satisfied = j.satisfied && e.truth;
    j.atom_evals.push_back(std::move(e));
  }
  return j;
}

}  // namespace

Classification evaluate(const Theory& theory, const SymbolicExample& example, const std::vector<Atom>& background,
                        const EvaluatorOptions& options) {
  SymbolTable symbols;
  const FactBase facts(symbols, example.facts, background);
  const int image = symbols.intern(image_constant(example.image_id));

  std::vector<int> domain{image};
  auto add_domain = [&domain](int id) {
    if (std::find(domain.begin(), domain.end(), id) == domain.end()) domain.push_back(id);
  };
  for (int c : facts.example_constants()) add_domain(c);
  for (const Atom& a : background) {
    for (const Term& t : a.args) add_domain(symbols.intern(t.name));
  }

  Classification out;
  out.image_id = example.image_id;
  out.label = Label::ok;
  for (std::size_t i = 0; i < theory.clauses.size(); ++i) {
    const HornClause& clause = theory.clauses[i];
    const CompiledClause cc = compile_clause(clause, symbols);
    bool any = false;
    for_each_solution(cc, facts, image, [&](const Binding& b) {
      out.justifications.push_back(trace(i, clause, cc, b, symbols, facts));
      any = true;
      return options.all_bindings;
    });
    if (any) {
      out.label = Label::defective;
      continue;
    }
    NearestMiss miss(cc, facts, domain, image);
    out.justifications.push_back(trace(i, clause, cc, miss.run(), symbols, facts));
  }
  return out;
}

bool entails(const Theory& theory, const SymbolicExample& example, const std::vector<Atom>& background) {
  SymbolTable symbols;
  const FactBase facts(symbols, example.facts, background);
  const int image = symbols.intern(image_constant(example.image_id));
  return std::any_of(theory.clauses.begin(), theory.clauses.end(), [&](const HornClause& c) {
    return has_solution(compile_clause(c, symbols), facts, image);
  });
}

}  // namespace dtriage
