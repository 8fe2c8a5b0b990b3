#include "dtriage/facts.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dtriage/errors.hpp"

namespace dtriage {

std::string_view to_string(Label label) noexcept {
  switch (label) {
    case Label::ok:
      return "ok";
    case Label::defective:
      return "defective";
    case Label::unlabeled:
      return "unlabeled";
  }
  return "unlabeled";
}

std::string_view to_string(Provenance provenance) noexcept {
  switch (provenance) {
    case Provenance::annotated:
      return "annotated";
    case Provenance::inferred:
      return "inferred";
    case Provenance::user_feedback:
      return "user_feedback";
    case Provenance::dummy:
      return "dummy";
  }
  return "inferred";
}

Label parse_label(std::string_view text) {
  if (text == "ok") return Label::ok;
  if (text == "defective") return Label::defective;
  if (text == "unlabeled") return Label::unlabeled;
  throw ConfigError("unknown label '" + std::string(text) + "'");
}

Provenance parse_provenance(std::string_view text) {
  if (text == "annotated") return Provenance::annotated;
  if (text == "inferred") return Provenance::inferred;
  if (text == "user_feedback") return Provenance::user_feedback;
  if (text == "dummy") return Provenance::dummy;
  throw ConfigError("unknown provenance '" + std::string(text) + "'");
}

std::string image_constant(std::string_view image_id) {
  if (is_constant_name(image_id)) {
    return std::string(image_id);
  }
  return "cast_" + std::string(image_id);
}

void validate_example(const SymbolicExample& example) {
  for (const Atom& fact : example.facts) {
    if (!fact.is_ground()) {
      throw PreconditionError("fact " + format_atom(fact) + " of " + example.image_id + " is not ground");
    }
  }
  if (example.provenance == Provenance::dummy) {
    return;
  }
  std::map<std::string, int> image_level;
  std::set<std::string> declared;
  std::map<std::string, std::map<std::string, int>> per_hp;
  for (const Atom& f : example.facts) {
    if (f.arity() != 2) continue;
    if (f.predicate == pred::total_volume || f.predicate == pred::num_hps) {
      ++image_level[f.predicate];
    } else if (f.predicate == pred::has_hp) {
      declared.insert(f.args[1].name);
    } else if (f.predicate == pred::has_size || f.predicate == pred::distance_from_center ||
               f.predicate == pred::eccentricity) {
      ++per_hp[f.args[0].name][f.predicate];
    }
  }
  if (image_level[std::string(pred::total_volume)] != 1 || image_level[std::string(pred::num_hps)] != 1) {
    throw PreconditionError(example.image_id + ": expected exactly one total_volume and one num_hps fact");
  }
  for (const auto& hp : declared) {
    for (auto p : {pred::has_size, pred::distance_from_center, pred::eccentricity}) {
      if (per_hp[hp][std::string(p)] != 1) {
        throw PreconditionError(example.image_id + ": superpixel " + hp + " needs exactly one " + std::string(p) +
                                " fact");
      }
    }
  }
  for (const auto& [hp, counts] : per_hp) {
    if (!declared.count(hp)) {
      throw PreconditionError(example.image_id + ": superpixel " + hp + " has no has_hp fact");
    }
  }
}

void IntervalScheme::validate() const {
  if (constants.empty()) {
    throw ConfigError("interval scheme '" + sort_name + "' has no constants");
  }
  if (thresholds.size() + 1 != constants.size()) {
    throw ConfigError("interval scheme '" + sort_name + "' needs " + std::to_string(constants.size() - 1) +
                      " thresholds");
  }
  for (std::size_t i = 1; i < thresholds.size(); ++i) {
    if (!(thresholds[i - 1] < thresholds[i])) {
      throw ConfigError("interval scheme '" + sort_name + "' thresholds must be strictly ascending");
    }
  }
  std::set<std::string> seen;
  for (const auto& c : constants) {
    if (!is_constant_name(c) || !seen.insert(c).second) {
      throw ConfigError("interval scheme '" + sort_name + "' has invalid or duplicate constant '" + c + "'");
    }
  }
}

std::size_t IntervalScheme::index_of(double x) const {
  return static_cast<std::size_t>(std::upper_bound(thresholds.begin(), thresholds.end(), x) - thresholds.begin());
}

SchemeRegistry::SchemeRegistry(std::vector<IntervalScheme> schemes) : schemes_(std::move(schemes)) {
  std::set<std::string> sorts;
  std::set<std::string> constants;
  for (const auto& s : schemes_) {
    s.validate();
    if (!sorts.insert(s.sort_name).second) {
      throw ConfigError("duplicate interval scheme '" + s.sort_name + "'");
    }
    for (const auto& c : s.constants) {
      if (!constants.insert(c).second) {
        throw ConfigError("constant '" + c + "' belongs to more than one sort");
      }
    }
  }
}

const SchemeRegistry& SchemeRegistry::defaults() {
  static const SchemeRegistry registry({
      {std::string(sort::size), {"vol_small", "vol_medium", "vol_large"}, {200.0, 900.0}},
      {std::string(sort::total_volume), {"tvol_small", "tvol_medium", "tvol_large"}, {300.0, 1800.0}},
      {std::string(sort::distance), {"center", "inner_rim", "outer_rim"}, {0.35, 0.75}},
      {std::string(sort::eccentricity), {"round", "elongated", "very_elongated"}, {0.6, 0.9}},
      {std::string(sort::count), {"cnt_0", "cnt_1", "cnt_2", "cnt_many"}, {1.0, 2.0, 3.0}},
  });
  return registry;
}

SchemeRegistry SchemeRegistry::parse_json(std::string_view text) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("interval scheme file: ") + e.what());
  }
  if (!doc.is_object()) {
    throw ConfigError("interval scheme file must hold a JSON object");
  }
  std::vector<IntervalScheme> schemes;
  try {
    for (const auto& [sort_name, body] : doc.items()) {
      IntervalScheme s;
      s.sort_name = sort_name;
      s.constants = body.at("constants").get<std::vector<std::string>>();
      s.thresholds = body.at("thresholds").get<std::vector<double>>();
      schemes.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("interval scheme file: ") + e.what());
  }
  return SchemeRegistry(std::move(schemes));
}

SchemeRegistry SchemeRegistry::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open interval scheme file '" + path + "'");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_json(buf.str());
}

const IntervalScheme& SchemeRegistry::at(std::string_view sort_name) const {
  for (const auto& s : schemes_) {
    if (s.sort_name == sort_name) {
      return s;
    }
  }
  throw ConfigError("no interval scheme registered for sort '" + std::string(sort_name) + "'");
}

std::string SchemeRegistry::discretize(std::string_view sort_name, double x) const {
  const IntervalScheme& s = at(sort_name);
  if (!(x >= 0.0) || std::isinf(x)) {
    throw PreconditionError("cannot discretize " + std::to_string(x) + " for sort '" + std::string(sort_name) + "'");
  }
  return s.constants[s.index_of(x)];
}

std::optional<std::string> SchemeRegistry::sort_of_constant(std::string_view constant) const {
  for (const auto& s : schemes_) {
    if (std::find(s.constants.begin(), s.constants.end(), constant) != s.constants.end()) {
      return s.sort_name;
    }
  }
  return std::nullopt;
}

std::string discretize(std::string_view sort_name, double x) {
  return SchemeRegistry::defaults().discretize(sort_name, x);
}

SymbolicExample compile_example(const FeatureRecord& record, Label label, const SchemeRegistry& schemes,
                                Provenance provenance) {
  SymbolicExample ex;
  ex.image_id = record.image_id;
  ex.label = label;
  ex.provenance = provenance;
  const std::string image = image_constant(record.image_id);
  auto fact = [&ex](std::string_view p, const std::string& a, std::string b) {
    ex.facts.push_back(make_fact(std::string(p), {a, std::move(b)}));
  };
  fact(pred::total_volume, image, schemes.discretize(sort::total_volume, record.total_volume));
  fact(pred::num_hps, image, schemes.discretize(sort::count, record.num_hps));
  for (const Superpixel& sp : record.superpixels) {
    if (!is_constant_name(sp.superpixel_id)) {
      throw PreconditionError("superpixel id '" + sp.superpixel_id + "' is not a valid constant");
    }
    fact(pred::has_hp, image, sp.superpixel_id);
    fact(pred::has_size, sp.superpixel_id, schemes.discretize(sort::size, sp.mass));
    fact(pred::distance_from_center, sp.superpixel_id, schemes.discretize(sort::distance, sp.center_distance));
    fact(pred::eccentricity, sp.superpixel_id, schemes.discretize(sort::eccentricity, sp.eccentricity));
  }
  return ex;
}

std::string emit_atoms(const std::vector<Atom>& atoms) {
  std::string out;
  for (const Atom& a : atoms) {
    out += format_atom(a);
    out += ".\n";
  }
  return out;
}

std::string emit_facts(const SymbolicExample& example) { return emit_atoms(example.facts); }

std::vector<Atom> parse_facts(std::string_view text) {
  std::vector<Atom> atoms;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    std::string_view line = text.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '%') {
      continue;
    }
    const auto last = line.find_last_not_of(" \t");
    if (line[last] != '.') {
      throw ParseError("expected '.' at end of fact", line_no, last + 2);
    }
    Atom atom = parse_atom(line.substr(first, last - first), line_no, first);
    if (!atom.is_ground()) {
      const auto var = std::find_if(atom.args.begin(), atom.args.end(), [](const Term& t) { return t.is_variable(); });
      throw ParseError("facts must be ground (variable " + var->name + ")", line_no,
                       line.find(var->name, first + atom.predicate.size()) + 1);
    }
    atoms.push_back(std::move(atom));
  }
  return atoms;
}

std::vector<Atom> background_facts(const std::vector<IntervalScheme>& schemes) {
  std::vector<Atom> out;
  for (const auto& s : schemes) {
    for (std::size_t i = 0; i < s.constants.size(); ++i) {
      for (std::size_t j = i; j < s.constants.size(); ++j) {
        out.push_back(make_fact(std::string(pred::num_leq), {s.constants[i], s.constants[j]}));
      }
    }
  }
  return out;
}

}  // namespace dtriage
