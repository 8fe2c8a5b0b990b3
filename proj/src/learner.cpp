#include "dtriage/learner.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "dtriage/errors.hpp"
#include "dtriage/prover.hpp"

namespace dtriage {
namespace {

bool sort_matches(const std::string& variable_sort, const std::string& wanted) {
  return wanted == "const" || wanted == "any" || variable_sort == wanted;
}

std::string var_name(int index) { return "V" + std::to_string(index); }

// Interned facts for every example taking part in one learning run.
class Workspace {
 public:
  explicit Workspace(const std::vector<Atom>& background) : background_(background) {}

  int add(const SymbolicExample& ex) {
    bases_.emplace_back(symbols_, ex.facts, background_);
    images_.push_back(symbols_.intern(image_constant(ex.image_id)));
    return static_cast<int>(bases_.size()) - 1;
  }

  SymbolTable& symbols() { return symbols_; }
  const FactBase& base(int i) const { return bases_[static_cast<std::size_t>(i)]; }
  int image(int i) const { return images_[static_cast<std::size_t>(i)]; }

 private:
  const std::vector<Atom>& background_;
  SymbolTable symbols_;
  std::vector<FactBase> bases_;
  std::vector<int> images_;
};

BottomClause build_bottom(Workspace& ws, int seed, const std::vector<ModeDeclaration>& modes,
                          const LearnerConfig& config) {
  SymbolTable& symbols = ws.symbols();
  const FactBase& facts = ws.base(seed);
  BottomClause bottom;
  std::unordered_map<int, int> var_of{{ws.image(seed), 0}};
  std::vector<std::string> var_sort{"image"};
  std::set<std::vector<int>> seen;  // encoded literals

  for (int layer = 0; layer < config.max_body_atoms; ++layer) {
    const int known_before = static_cast<int>(var_sort.size());
    bool added = false;
    for (const ModeDeclaration& mode : modes) {
      const int pred = symbols.find(mode.predicate);
      if (pred < 0) continue;
      for (const Tuple& tuple : facts.tuples(pred)) {
        if (tuple.size() != mode.args.size()) continue;
        bool ok = true;
        std::vector<int> inputs;
        for (std::size_t k = 0; k < tuple.size() && ok; ++k) {
          if (mode.args[k].role != ArgRole::input_var) continue;
          auto it = var_of.find(tuple[k]);
          ok = it != var_of.end() && it->second < known_before &&
               sort_matches(var_sort[static_cast<std::size_t>(it->second)], mode.args[k].sort);
          if (ok) inputs.push_back(it->second);
        }
        if (!ok) continue;

        // Encoding: predicate, then per argument (+var+1) or -(const+1).
        std::vector<int> key{pred};
        Atom literal{mode.predicate, {}};
        std::vector<std::pair<int, std::string>> fresh;
        for (std::size_t k = 0; k < tuple.size(); ++k) {
          if (mode.args[k].role == ArgRole::constant) {
            key.push_back(-(tuple[k] + 1));
            literal.args.push_back(Term::constant(symbols.name(tuple[k])));
            continue;
          }
          int v;
          auto it = var_of.find(tuple[k]);
          if (it != var_of.end()) {
            v = it->second;
          } else {
            v = static_cast<int>(var_sort.size());
            var_of.emplace(tuple[k], v);
            var_sort.push_back(mode.args[k].sort);
          }
          key.push_back(v + 1);
          literal.args.push_back(Term::var(var_name(v)));
        }
        if (!seen.insert(key).second) continue;
        bottom.literals.push_back(std::move(literal));
        bottom.inputs.push_back(std::move(inputs));
        added = true;
      }
    }
    if (!added) break;
  }
  bottom.num_variables = static_cast<int>(var_sort.size());
  return bottom;
}

struct Candidate {
  std::vector<int> body;
  int pos = 0;
  int neg = 0;
  int score() const { return pos - neg; }
};

// Higher P - N first, then shorter bodies, then lexicographic literal indices.
bool ranks_before(const Candidate& a, const Candidate& b) {
  if (a.score() != b.score()) return a.score() > b.score();
  if (a.body.size() != b.body.size()) return a.body.size() < b.body.size();
  return a.body < b.body;
}

class ClauseSearch {
 public:
  ClauseSearch(Workspace& ws, const BottomClause& bottom, std::vector<int> positives, std::vector<int> negatives,
               const LearnerConfig& config)
      : ws_(ws), bottom_(bottom), positives_(std::move(positives)), negatives_(std::move(negatives)), config_(config) {
    SymbolTable& symbols = ws.symbols();
    for (const Atom& lit : bottom.literals) {
      CompiledAtom ca;
      ca.predicate = symbols.intern(lit.predicate);
      std::vector<int> vars;
      for (const Term& t : lit.args) {
        if (t.is_variable()) {
          const int v = std::stoi(t.name.substr(1));
          ca.args.push_back({true, v});
          vars.push_back(v);
        } else {
          ca.args.push_back({false, symbols.intern(t.name)});
        }
      }
      compiled_.push_back(std::move(ca));
      literal_vars_.push_back(std::move(vars));
    }
  }

  ClauseSearchResult run() {
    ClauseSearchResult result;
    std::optional<Candidate> best;
    std::set<std::vector<int>> visited{{}};
    auto consider = [&](const Candidate& c) {
      if (c.neg <= config_.noise && c.pos >= config_.min_pos && (!best || ranks_before(c, *best))) {
        best = c;
      }
    };

    Candidate root = evaluate({});
    consider(root);
    std::vector<Candidate> beam;
    if (root.pos >= config_.min_pos && root.neg > 0) beam.push_back(root);

    while (!beam.empty() && result.nodes_expanded < config_.search_depth) {
      std::vector<Candidate> children;
      for (const Candidate& node : beam) {
        if (result.nodes_expanded >= config_.search_depth) break;
        ++result.nodes_expanded;
        if (static_cast<int>(node.body.size()) >= config_.max_body_atoms) continue;
        for (int j = 0; j < static_cast<int>(compiled_.size()); ++j) {
          if (std::binary_search(node.body.begin(), node.body.end(), j) || !linkable(node.body, j)) continue;
          std::vector<int> body = node.body;
          body.insert(std::upper_bound(body.begin(), body.end(), j), j);
          if (!visited.insert(body).second) continue;
          Candidate child = evaluate(std::move(body));
          // Specialization only removes coverage: a child below min_pos can
          // never become acceptable, and one with no negatives cannot be
          // outscored by its own refinements.
          if (child.pos < config_.min_pos) continue;
          consider(child);
          if (child.neg > 0) children.push_back(std::move(child));
        }
      }
      std::sort(children.begin(), children.end(), ranks_before);
      if (children.size() > static_cast<std::size_t>(config_.beam_width)) {
        children.resize(static_cast<std::size_t>(config_.beam_width));
      }
      beam = std::move(children);
    }

    if (best) {
      result.best = best->body;
      result.positives = best->pos;
      result.negatives = best->neg;
    }
    return result;
  }

  CompiledClause compile(const std::vector<int>& body) const {
    CompiledClause cc;
    cc.head_variable = 0;
    cc.variable_names.resize(static_cast<std::size_t>(bottom_.num_variables));
    for (int i : body) {
      cc.body.push_back(compiled_[static_cast<std::size_t>(i)]);
    }
    return cc;
  }

 private:
  bool linkable(const std::vector<int>& body, int j) const {
    for (int v : bottom_.inputs[static_cast<std::size_t>(j)]) {
      if (v == 0) continue;
      const bool produced = std::any_of(body.begin(), body.end(), [&](int i) {
        const auto& vars = literal_vars_[static_cast<std::size_t>(i)];
        return i < j && std::find(vars.begin(), vars.end(), v) != vars.end();
      });
      if (!produced) return false;
    }
    return true;
  }

  Candidate evaluate(std::vector<int> body) const {
    Candidate c{std::move(body), 0, 0};
    const CompiledClause cc = compile(c.body);
    for (int p : positives_) {
      if (has_solution(cc, ws_.base(p), ws_.image(p))) ++c.pos;
    }
    for (int n : negatives_) {
      if (has_solution(cc, ws_.base(n), ws_.image(n))) ++c.neg;
    }
    return c;
  }

  Workspace& ws_;
  const BottomClause& bottom_;
  std::vector<int> positives_;
  std::vector<int> negatives_;
  const LearnerConfig& config_;
  std::vector<CompiledAtom> compiled_;
  std::vector<std::vector<int>> literal_vars_;
};

void check_modes(const std::vector<ModeDeclaration>& modes) {
  if (modes.empty()) {
    throw ConfigError("no mode declarations given");
  }
  for (const auto& m : modes) {
    if (std::none_of(m.args.begin(), m.args.end(), [](const ModeArg& a) { return a.role == ArgRole::input_var; })) {
      throw ConfigError("mode " + format_mode(m) + " has no input argument");
    }
  }
}

void check_labels(const std::vector<SymbolicExample>& examples, Label expected, const char* what) {
  for (const auto& ex : examples) {
    if (ex.label != expected) {
      throw PreconditionError(std::string(what) + " example " + ex.image_id + " is labeled " +
                              std::string(to_string(ex.label)));
    }
  }
}

}  // namespace

void LearnerConfig::validate() const {
  if (noise < 0) throw ConfigError("noise must be non-negative");
  if (max_body_atoms < 1) throw ConfigError("max_body_atoms must be positive");
  if (search_depth < 1) throw ConfigError("search_depth must be positive");
  if (beam_width < 1) throw ConfigError("beam_width must be positive");
  if (min_pos < 1) throw ConfigError("min_pos must be positive");
}

LearnerConfig LearnerConfig::parse_json(std::string_view text) {
  LearnerConfig config;
  try {
    const auto doc = nlohmann::json::parse(text);
    if (!doc.is_object()) throw ConfigError("learner config must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
      if (key == "noise") {
        config.noise = value.get<int>();
      } else if (key == "max_body_atoms") {
        config.max_body_atoms = value.get<int>();
      } else if (key == "search_depth") {
        config.search_depth = value.get<int>();
      } else if (key == "beam_width") {
        config.beam_width = value.get<int>();
      } else if (key == "min_pos") {
        config.min_pos = value.get<int>();
      } else {
        throw ConfigError("unknown learner config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("learner config: ") + e.what());
  }
  config.validate();
  return config;
}

LearnerConfig LearnerConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open learner config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_json(buf.str());
}

ModeDeclaration parse_mode(std::string_view text) {
  const auto open = text.find('(');
  if (open == std::string_view::npos || text.empty() || text.back() != ')') {
    throw ConfigError("malformed mode declaration '" + std::string(text) + "'");
  }
  ModeDeclaration mode;
  mode.predicate = std::string(text.substr(0, open));
  if (!is_constant_name(mode.predicate)) {
    throw ConfigError("malformed mode predicate in '" + std::string(text) + "'");
  }
  std::string_view rest = text.substr(open + 1, text.size() - open - 2);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    std::string_view arg = rest.substr(0, comma);
    if (arg.size() < 2) throw ConfigError("malformed mode argument in '" + std::string(text) + "'");
    ModeArg m;
    switch (arg[0]) {
      case '+':
        m.role = ArgRole::input_var;
        break;
      case '-':
        m.role = ArgRole::output_var;
        break;
      case '#':
        m.role = ArgRole::constant;
        break;
      default:
        throw ConfigError("mode argument must start with +, - or # in '" + std::string(text) + "'");
    }
    m.sort = std::string(arg.substr(1));
    mode.args.push_back(std::move(m));
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
  }
  if (mode.args.empty()) throw ConfigError("mode without arguments '" + std::string(text) + "'");
  return mode;
}

std::string format_mode(const ModeDeclaration& mode) {
  std::string out = mode.predicate + "(";
  for (std::size_t i = 0; i < mode.args.size(); ++i) {
    if (i > 0) out += ',';
    out += mode.args[i].role == ArgRole::input_var ? '+' : mode.args[i].role == ArgRole::output_var ? '-' : '#';
    out += mode.args[i].sort;
  }
  return out + ")";
}

const std::vector<ModeDeclaration>& default_modes() {
  static const std::vector<ModeDeclaration> modes = [] {
    std::vector<ModeDeclaration> m;
    for (const char* text : {"has_hp(+image,-hp)", "has_size(+hp,#size)", "distance_from_center(+hp,#distance)",
                             "eccentricity(+hp,#eccentricity)", "num_hps(+image,-count)",
                             "total_volume(+image,-tvol)", "num_leq(+const,#const)", "num_leq(#const,+const)"}) {
      m.push_back(parse_mode(text));
    }
    return m;
  }();
  return modes;
}

CoverResult clause_covers(const HornClause& clause, const SymbolicExample& example,
                          const std::vector<Atom>& background) {
  SymbolTable symbols;
  const FactBase facts(symbols, example.facts, background);
  const CompiledClause cc = compile_clause(clause, symbols);
  Binding binding;
  CoverResult result;
  result.covered = solve_first(cc, facts, symbols.intern(image_constant(example.image_id)), binding);
  if (result.covered) {
    for (std::size_t v = 0; v < cc.variable_names.size(); ++v) {
      if (binding[v] >= 0) result.binding.emplace_back(cc.variable_names[v], symbols.name(binding[v]));
    }
  }
  return result;
}

BottomClause build_bottom_clause(const SymbolicExample& seed, const std::vector<Atom>& background,
                                 const std::vector<ModeDeclaration>& modes, const LearnerConfig& config) {
  config.validate();
  check_modes(modes);
  Workspace ws(background);
  const int s = ws.add(seed);
  return build_bottom(ws, s, modes, config);
}

ClauseSearchResult search_clause(const BottomClause& bottom, const std::vector<SymbolicExample>& positives,
                                 const std::vector<SymbolicExample>& negatives, const std::vector<Atom>& background,
                                 const LearnerConfig& config) {
  config.validate();
  Workspace ws(background);
  std::vector<int> pos, neg;
  for (const auto& ex : positives) pos.push_back(ws.add(ex));
  for (const auto& ex : negatives) neg.push_back(ws.add(ex));
  return ClauseSearch(ws, bottom, pos, neg, config).run();
}

HornClause clause_from_literals(const BottomClause& bottom, const std::vector<int>& literal_indices) {
  HornClause clause{Atom{std::string(kTargetPredicate), {Term::var(var_name(0))}}, {}};
  for (int i : literal_indices) {
    clause.body.push_back(bottom.literals.at(static_cast<std::size_t>(i)));
  }
  return clause;
}

Theory learn_theory(const std::vector<SymbolicExample>& positives, const std::vector<SymbolicExample>& negatives,
                    const std::vector<Atom>& background, const std::vector<ModeDeclaration>& modes,
                    const LearnerConfig& config) {
  config.validate();
  check_modes(modes);
  check_labels(positives, Label::defective, "positive");
  check_labels(negatives, Label::ok, "negative");

  Theory theory;
  Workspace ws(background);
  std::vector<int> pos, neg;
  for (const auto& ex : positives) pos.push_back(ws.add(ex));
  for (const auto& ex : negatives) neg.push_back(ws.add(ex));

  std::vector<bool> covered(pos.size(), false);
  std::vector<bool> tried(pos.size(), false);
  while (true) {
    std::size_t seed = 0;
    while (seed < pos.size() && (covered[seed] || tried[seed])) ++seed;
    if (seed == pos.size()) break;
    tried[seed] = true;

    const BottomClause bottom = build_bottom(ws, pos[seed], modes, config);
    std::vector<int> remaining;
    for (std::size_t i = 0; i < pos.size(); ++i) {
      if (!covered[i]) remaining.push_back(pos[i]);
    }
    ClauseSearch search(ws, bottom, remaining, neg, config);
    const ClauseSearchResult found = search.run();
    if (!found.best) continue;

    const CompiledClause cc = search.compile(*found.best);
    for (std::size_t i = 0; i < pos.size(); ++i) {
      if (!covered[i] && has_solution(cc, ws.base(pos[i]), ws.image(pos[i]))) covered[i] = true;
    }
    theory.clauses.push_back(canonicalize(clause_from_literals(bottom, *found.best)));
  }
  theory.train_stats = compute_train_stats(theory, positives, negatives, background);
  return theory;
}

TrainStats compute_train_stats(const Theory& theory, const std::vector<SymbolicExample>& positives,
                               const std::vector<SymbolicExample>& negatives, const std::vector<Atom>& background) {
  Workspace ws(background);
  std::vector<CompiledClause> compiled;
  for (const auto& c : theory.clauses) compiled.push_back(compile_clause(c, ws.symbols()));
  auto entailed = [&](const SymbolicExample& ex) {
    const int i = ws.add(ex);
    return std::any_of(compiled.begin(), compiled.end(),
                       [&](const CompiledClause& cc) { return has_solution(cc, ws.base(i), ws.image(i)); });
  };
  TrainStats stats;
  stats.positives_total = static_cast<int>(positives.size());
  stats.negatives_total = static_cast<int>(negatives.size());
  for (const auto& ex : positives) stats.positives_covered += entailed(ex) ? 1 : 0;
  for (const auto& ex : negatives) stats.negatives_covered += entailed(ex) ? 1 : 0;
  const int total = stats.positives_total + stats.negatives_total;
  stats.accuracy = total == 0 ? 0.0
                              : static_cast<double>(stats.positives_covered + stats.negatives_total -
                                                    stats.negatives_covered) /
                                    total;
  return stats;
}

double theory_accuracy(const Theory& theory, const std::vector<SymbolicExample>& examples,
                       const std::vector<Atom>& background) {
  std::vector<SymbolicExample> pos, neg;
  for (const auto& ex : examples) {
    if (ex.label == Label::unlabeled) {
      throw PreconditionError("theory_accuracy: example " + ex.image_id + " is unlabeled");
    }
    (ex.label == Label::defective ? pos : neg).push_back(ex);
  }
  return compute_train_stats(theory, pos, neg, background).accuracy;
}

}  // namespace dtriage
