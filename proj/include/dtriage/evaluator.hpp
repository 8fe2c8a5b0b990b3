#pragma once

// Theory evaluation with per-atom truth traces. Satisfied clauses report their
// first solution; unsatisfied ones report a nearest miss (the grounding with
// the most true body atoms).

#include <cstddef>
#include <string>
#include <vector>

#include "dtriage/facts.hpp"
#include "dtriage/logic.hpp"

namespace dtriage {

struct AtomEvaluation {
  Atom atom;        // as written in the clause
  Atom bound_atom;  // ground after substitution
  bool truth = false;

  bool operator==(const AtomEvaluation&) const = default;
};

struct Justification {
  std::size_t clause_index = 0;
  Substitution binding;  // clause variables in first-occurrence order
  std::vector<AtomEvaluation> atom_evals;
  bool satisfied = false;

  bool operator==(const Justification&) const = default;
};

struct Classification {
  std::string image_id;
  Label label = Label::ok;
  std::vector<Justification> justifications;

  bool operator==(const Classification&) const = default;
};

struct EvaluatorOptions {
  // Emit one justification per satisfying binding instead of only the first.
  bool all_bindings = false;
};

// Nearest misses range over the example's constants followed by those of the
// background, in first-appearance order; ties keep the earliest grounding.
Classification evaluate(const Theory& theory, const SymbolicExample& example, const std::vector<Atom>& background,
                        const EvaluatorOptions& options = {});

bool entails(const Theory& theory, const SymbolicExample& example, const std::vector<Atom>& background);

}  // namespace dtriage
