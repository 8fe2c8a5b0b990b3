#pragma once

// User verdicts on shown classifications and their effect on the knowledge
// base: plain additions, opposite-label additions, dummy counterexamples for
// rejected justifications, coverage gaps and retraining.

#include <cstdint>
#include <string>
#include <vector>

#include "dtriage/evaluator.hpp"
#include "dtriage/knowledge_base.hpp"
#include "dtriage/learner.hpp"

namespace dtriage {

struct Verdict {
  std::string image_id;
  std::uint64_t revision = 0;  // KB revision the classification was shown at
  bool classification_accepted = true;
  // Aligned with every justification that was shown. When the classification
  // is rejected all entries are treated as false.
  std::vector<bool> justification_accepted;

  bool operator==(const Verdict&) const = default;
};

struct FeedbackPolicy {
  LearnerConfig learner;
  std::vector<ModeDeclaration> modes = default_modes();
  bool retrain_on_accept = false;
};

struct FeedbackResult {
  int feedback_case = 0;  // 1 all accepted, 2 classification rejected, 3 justification rejected
  bool retrained = false;
  std::uint64_t new_revision = 0;
  std::vector<std::string> dummy_ids;
  std::size_t gaps_recorded = 0;
};

// Ground example that instantiates exactly the clause body (order atoms are
// satisfied through the background and not emitted). Image constant
// "dummy_<rev>", entity constants "dummy_<rev>_hp<k>", other free variables
// "dummy_<rev>_v<k>". A variable bounded by order atoms takes the first
// bounding constant that satisfies all of its bounds. Throws
// ConstructionError when no constant does.
SymbolicExample make_dummy_example(const HornClause& clause, const KnowledgeBase& kb);

// Learns over all labeled examples (dummies included as negatives) and
// replaces the theory. Throws PreconditionError without labeled examples.
const Theory& retrain(KnowledgeBase& kb, const FeedbackPolicy& policy);

// Throws StaleVerdictError on a revision mismatch, NotFoundError for an
// unknown image and PreconditionError for a malformed verdict; the KB is left
// untouched in all three cases.
FeedbackResult submit_feedback(KnowledgeBase& kb, const Verdict& verdict, const Classification& shown,
                               const FeedbackPolicy& policy);

}  // namespace dtriage
