#include "dtriage/feedback.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "dtriage/errors.hpp"

namespace dtriage {
namespace {

Label opposite(Label l) { return l == Label::defective ? Label::ok : Label::defective; }

}  // namespace

SymbolicExample make_dummy_example(const HornClause& clause, const KnowledgeBase& kb) {
  const std::string image = "dummy_" + std::to_string(kb.revision());
  const std::string& head = clause.head.args.at(0).name;
  const std::set<Atom> background(kb.background().begin(), kb.background().end());

  std::map<std::string, std::string> value{{head, image}};
  int entities = 0;
  for (const Atom& a : clause.body) {
    if (a.predicate == pred::has_hp && a.arity() == 2 && a.args[1].is_variable() && !value.count(a.args[1].name)) {
      value[a.args[1].name] = image + "_hp" + std::to_string(++entities);
    }
  }

  // Bounded variables: candidates are the bounding constants in body order.
  std::map<std::string, std::vector<const Atom*>> bounds;
  for (const Atom& a : clause.body) {
    if (a.predicate != pred::num_leq || a.arity() != 2) continue;
    for (const Term& t : a.args) {
      if (t.is_variable() && !value.count(t.name)) bounds[t.name].push_back(&a);
    }
  }
  for (const auto& [var, atoms] : bounds) {
    for (const Atom* cand : atoms) {
      const Term& c = cand->args[0].is_constant() ? cand->args[0] : cand->args[1];
      if (c.is_variable()) continue;
      const bool fits = std::all_of(atoms.begin(), atoms.end(), [&](const Atom* b) {
        return background.count(apply_substitution(*b, {{var, c.name}})) > 0;
      });
      if (fits) {
        value[var] = c.name;
        break;
      }
    }
    if (!value.count(var)) {
      throw ConstructionError("no constant satisfies every bound on variable " + var + " in " +
                              format_clause(clause));
    }
  }

  int others = 0;
  for (const auto& var : clause_variables(clause)) {
    if (!value.count(var)) value[var] = image + "_v" + std::to_string(++others);
  }
  const Substitution sub(value.begin(), value.end());

  SymbolicExample dummy{image, {}, Label::ok, Provenance::dummy};
  for (const Atom& a : clause.body) {
    Atom g = apply_substitution(a, sub);
    if (a.predicate == pred::num_leq) {
      if (!background.count(g)) {
        throw ConstructionError("order atom " + format_atom(g) + " is false in the background");
      }
      continue;
    }
    if (std::find(dummy.facts.begin(), dummy.facts.end(), g) == dummy.facts.end()) {
      dummy.facts.push_back(std::move(g));
    }
  }
  return dummy;
}

const Theory& retrain(KnowledgeBase& kb, const FeedbackPolicy& policy) {
  std::vector<SymbolicExample> pos, neg;
  for (const auto& ex : kb.examples()) {
    if (ex.label == Label::defective) pos.push_back(ex);
    if (ex.label == Label::ok) neg.push_back(ex);
  }
  if (pos.empty() && neg.empty()) {
    throw PreconditionError("cannot retrain without labeled examples");
  }
  kb.replace_theory(learn_theory(pos, neg, kb.background(), policy.modes, policy.learner));
  return kb.theory();
}

FeedbackResult submit_feedback(KnowledgeBase& kb, const Verdict& verdict, const Classification& shown,
                               const FeedbackPolicy& policy) {
  if (verdict.revision != kb.revision()) {
    throw StaleVerdictError(static_cast<long long>(verdict.revision), static_cast<long long>(kb.revision()));
  }
  const SymbolicExample* found = kb.find_example(verdict.image_id);
  if (!found) throw NotFoundError("unknown image '" + verdict.image_id + "'");
  if (shown.image_id != verdict.image_id) {
    throw PreconditionError("verdict for " + verdict.image_id + " does not match shown image " + shown.image_id);
  }
  if (verdict.justification_accepted.size() != shown.justifications.size()) {
    throw PreconditionError("verdict has " + std::to_string(verdict.justification_accepted.size()) +
                            " justification flags for " + std::to_string(shown.justifications.size()) +
                            " shown justifications");
  }
  SymbolicExample example = *found;
  example.provenance = Provenance::user_feedback;

  // All mutations go to a copy that replaces the KB only once everything,
  // including retraining, has succeeded.
  KnowledgeBase next = kb;
  FeedbackResult result;
  const bool all_accepted = std::all_of(verdict.justification_accepted.begin(),
                                        verdict.justification_accepted.end(), [](bool b) { return b; });
  if (!verdict.classification_accepted) {
    result.feedback_case = 2;
    example.label = opposite(shown.label);
    next.add_example(std::move(example));
    result.retrained = true;
  } else if (all_accepted) {
    result.feedback_case = 1;
    example.label = shown.label;
    next.add_example(std::move(example));
    result.retrained = policy.retrain_on_accept;
  } else if (shown.label == Label::defective) {
    result.feedback_case = 3;
    for (std::size_t i = 0; i < shown.justifications.size(); ++i) {
      const Justification& j = shown.justifications[i];
      if (verdict.justification_accepted[i] || !j.satisfied) continue;
      if (j.clause_index >= kb.theory().clauses.size()) {
        throw PreconditionError("justification refers to clause " + std::to_string(j.clause_index) +
                                " outside the current theory");
      }
      SymbolicExample dummy = make_dummy_example(kb.theory().clauses[j.clause_index], next);
      result.dummy_ids.push_back(dummy.image_id);
      next.add_example(std::move(dummy));
    }
    example.label = Label::defective;
    next.add_example(std::move(example));
    result.retrained = true;
  } else {
    result.feedback_case = 3;
    for (std::size_t i = 0; i < shown.justifications.size(); ++i) {
      if (!verdict.justification_accepted[i]) {
        next.record_gap(CoverageGap{verdict.image_id, shown.justifications[i].clause_index});
        ++result.gaps_recorded;
      }
    }
    example.label = Label::ok;
    next.add_example(std::move(example));
  }
  if (result.retrained) retrain(next, policy);
  kb = std::move(next);
  result.new_revision = kb.revision();
  return result;
}

}  // namespace dtriage
