#pragma once

// Sequential-covering Horn clause learner: bottom clauses built from mode
// declarations, then a coverage-scored beam search over their literals.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dtriage/facts.hpp"
#include "dtriage/logic.hpp"

namespace dtriage {

struct LearnerConfig {
  int noise = 10;          // max negatives an accepted clause may cover
  int max_body_atoms = 4;  // also bounds variable-chaining depth of bottom clauses
  int search_depth = 50;   // node expansions per clause search
  int beam_width = 5;
  int min_pos = 2;

  void validate() const;  // throws ConfigError

  // {"noise": 10, "max_body_atoms": 4, ...}; missing keys keep defaults.
  static LearnerConfig parse_json(std::string_view text);
  static LearnerConfig load_file(const std::string& path);

  bool operator==(const LearnerConfig&) const = default;
};

enum class ArgRole { input_var, output_var, constant };

struct ModeArg {
  ArgRole role = ArgRole::input_var;
  std::string sort;  // "const" or "any" on an input matches every sort
};

struct ModeDeclaration {
  std::string predicate;
  std::vector<ModeArg> args;
};

// "has_hp(+image,-hp)", "has_size(+hp,#size)".
ModeDeclaration parse_mode(std::string_view text);
std::string format_mode(const ModeDeclaration& mode);
const std::vector<ModeDeclaration>& default_modes();

struct CoverResult {
  bool covered = false;
  Substitution binding;  // first solution, empty when not covered
};

CoverResult clause_covers(const HornClause& clause, const SymbolicExample& example, const std::vector<Atom>& background);

// Most specific clause for one seed. Variables are named V0 (head), V1, ...
struct BottomClause {
  std::vector<Atom> literals;
  std::vector<std::vector<int>> inputs;  // input variable indices per literal
  int num_variables = 1;
};

BottomClause build_bottom_clause(const SymbolicExample& seed, const std::vector<Atom>& background,
                                 const std::vector<ModeDeclaration>& modes, const LearnerConfig& config);

struct ClauseSearchResult {
  std::optional<std::vector<int>> best;  // sorted literal indices into the bottom clause
  int positives = 0;
  int negatives = 0;
  int nodes_expanded = 0;
};

ClauseSearchResult search_clause(const BottomClause& bottom, const std::vector<SymbolicExample>& positives,
                                 const std::vector<SymbolicExample>& negatives, const std::vector<Atom>& background,
                                 const LearnerConfig& config);

HornClause clause_from_literals(const BottomClause& bottom, const std::vector<int>& literal_indices);

Theory learn_theory(const std::vector<SymbolicExample>& positives, const std::vector<SymbolicExample>& negatives,
                    const std::vector<Atom>& background, const std::vector<ModeDeclaration>& modes,
                    const LearnerConfig& config);

// Classifies each example as defective iff some clause covers it.
double theory_accuracy(const Theory& theory, const std::vector<SymbolicExample>& examples,
                       const std::vector<Atom>& background);

TrainStats compute_train_stats(const Theory& theory, const std::vector<SymbolicExample>& positives,
                               const std::vector<SymbolicExample>& negatives, const std::vector<Atom>& background);

}  // namespace dtriage
