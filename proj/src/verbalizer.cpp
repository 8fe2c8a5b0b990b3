#include "dtriage/verbalizer.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "default_templates.hpp"
#include "dtriage/errors.hpp"

namespace dtriage {
namespace {

constexpr std::string_view kDefectiveSuffix = "so the part is classified as defective";

std::string fill(const std::string& pattern, const std::string& value) {
  const auto slot = pattern.find("{}");
  if (slot == std::string::npos) return pattern;
  return pattern.substr(0, slot) + value + pattern.substr(slot + 2);
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

const std::string& lookup(const std::map<std::string, std::string>& values, const std::string& constant,
                          const std::string& predicate) {
  auto it = values.find(constant);
  if (it == values.end()) {
    throw RenderError("no phrase for constant '" + constant + "' of predicate '" + predicate + "'");
  }
  return it->second;
}

// num_leq(V,c) / num_leq(c,V) attached to the variable V.
struct Bound {
  std::size_t atom;
  bool upper;  // V <= c
  std::string constant;
};

struct Property {
  std::size_t atom;
  const PropertyTemplate* tmpl;
  std::vector<Bound> bounds;  // only when the value is a variable
};

struct Group {
  enum class Kind { entity, measure, order };
  Kind kind;
  std::size_t owner;  // has_hp / total_volume / num_leq atom index
  const EntityTemplate* entity = nullptr;
  const MeasureTemplate* measure = nullptr;
  std::vector<Property> properties;
  std::vector<Bound> bounds;
};

class ClauseShape {
 public:
  ClauseShape(const HornClause& clause, const TemplateRegistry& reg) : clause_(clause), reg_(reg) {
    const std::string& head = clause.head.args.at(0).name;
    for (std::size_t i = 0; i < clause.body.size(); ++i) {
      const Atom& a = clause.body[i];
      if (const auto* e = reg.entity(a.predicate)) {
        require(a.arity() == 2 && a.args[0] == Term::var(head) && a.args[1].is_variable(), a);
        require(!owner_of_.count(a.args[1].name), a);
        owner_of_[a.args[1].name] = groups_.size();
        groups_.push_back(Group{Group::Kind::entity, i, e, nullptr, {}, {}});
      } else if (const auto* m = reg.measure(a.predicate)) {
        require(a.arity() == 2 && a.args[0] == Term::var(head), a);
        if (a.args[1].is_variable()) {
          require(!owner_of_.count(a.args[1].name), a);
          owner_of_[a.args[1].name] = groups_.size();
        }
        groups_.push_back(Group{Group::Kind::measure, i, nullptr, m, {}, {}});
      } else if (const auto* p = reg.property(a.predicate)) {
        require(a.arity() == 2 && a.args[0].is_variable(), a);
        auto it = owner_of_.find(a.args[0].name);
        require(it != owner_of_.end() && groups_[it->second].kind == Group::Kind::entity, a);
        Group& g = groups_[it->second];
        if (a.args[1].is_variable()) {
          require(!value_of_.count(a.args[1].name), a);
          value_of_[a.args[1].name] = {it->second, g.properties.size()};
        }
        g.properties.push_back(Property{i, p, {}});
      } else if (a.predicate == reg.order_predicate()) {
        require(a.arity() == 2, a);
        if (a.args[0].is_constant() && a.args[1].is_constant()) {
          groups_.push_back(Group{Group::Kind::order, i, nullptr, nullptr, {}, {}});
          continue;
        }
        require(a.args[0].is_constant() != a.args[1].is_constant(), a);
        const bool upper = a.args[0].is_variable();
        const std::string& var = a.args[upper ? 0 : 1].name;
        const Bound b{i, upper, a.args[upper ? 1 : 0].name};
        if (auto it = value_of_.find(var); it != value_of_.end()) {
          groups_[it->second.first].properties[it->second.second].bounds.push_back(b);
        } else if (auto ot = owner_of_.find(var);
                   ot != owner_of_.end() && groups_[ot->second].kind == Group::Kind::measure) {
          groups_[ot->second].bounds.push_back(b);
        } else {
          throw RenderError("cannot attach '" + format_atom(a) + "' to a described value");
        }
      } else {
        throw RenderError("no template for predicate '" + a.predicate + "'");
      }
    }
  }

  const std::vector<Group>& groups() const { return groups_; }

  // "at most small and at least large"
  std::string bounds_phrase(const std::vector<Bound>& bounds, const std::map<std::string, std::string>& values,
                            const std::string& predicate) const {
    std::vector<std::string> parts;
    for (const Bound& b : bounds) parts.push_back(bound_phrase(b, values, predicate));
    return join(parts, " and ");
  }

  std::string bound_phrase(const Bound& b, const std::map<std::string, std::string>& values,
                           const std::string& predicate) const {
    return (b.upper ? reg_.at_most() : reg_.at_least()) + " " + lookup(values, b.constant, predicate);
  }

  std::string property_phrase(const Property& p, bool negated) const {
    const Atom& a = clause_.body[p.atom];
    const std::string& pattern = negated ? p.tmpl->negated : p.tmpl->pattern;
    if (a.args[1].is_constant()) return fill(pattern, lookup(p.tmpl->values, a.args[1].name, a.predicate));
    if (p.bounds.empty()) return negated ? p.tmpl->unconstrained_negated : p.tmpl->unconstrained;
    return fill(pattern, bounds_phrase(p.bounds, p.tmpl->values, a.predicate));
  }

  std::string measure_value(const Group& g) const {
    const Atom& a = clause_.body[g.owner];
    if (a.args[1].is_constant()) return lookup(g.measure->values, a.args[1].name, a.predicate);
    return bounds_phrase(g.bounds, g.measure->values, a.predicate);
  }

  bool measure_unconstrained(const Group& g) const {
    return clause_.body[g.owner].args[1].is_variable() && g.bounds.empty();
  }

  std::string order_phrase(const Group& g, bool negated) const {
    const Atom& a = clause_.body[g.owner];
    return reg_.phrase(a.args[0].name) + (negated ? " is not " : " is ") + reg_.at_most() + " " +
           reg_.phrase(a.args[1].name);
  }

  std::string clause_phrase(const Group& g) const {
    switch (g.kind) {
      case Group::Kind::entity: {
        std::string out = "there is a " + g.entity->noun;
        std::vector<std::string> props;
        for (const auto& p : g.properties) props.push_back(property_phrase(p, false));
        if (!props.empty()) out += " which " + join(props, " and ");
        return out;
      }
      case Group::Kind::measure:
        return g.measure->noun + (measure_unconstrained(g) ? " is known" : " is " + measure_value(g));
      case Group::Kind::order:
        return order_phrase(g, false);
    }
    return {};
  }

 private:
  void require(bool ok, const Atom& a) const {
    if (!ok) throw RenderError("cannot verbalize atom '" + format_atom(a) + "' in this position");
  }

  const HornClause& clause_;
  const TemplateRegistry& reg_;
  std::map<std::string, std::size_t> owner_of_;
  std::map<std::string, std::pair<std::size_t, std::size_t>> value_of_;
  std::vector<Group> groups_;
};

std::vector<PropertyTemplate> read_properties(const nlohmann::json& arr) {
  std::vector<PropertyTemplate> out;
  for (const auto& p : arr) {
    out.push_back(PropertyTemplate{p.at("predicate").get<std::string>(), p.at("sort").get<std::string>(),
                                   p.at("pattern").get<std::string>(), p.at("negated").get<std::string>(),
                                   p.at("unconstrained").get<std::string>(),
                                   p.at("unconstrained_negated").get<std::string>(),
                                   p.at("values").get<std::map<std::string, std::string>>()});
  }
  return out;
}

}  // namespace

const TemplateRegistry& TemplateRegistry::defaults() {
  static const TemplateRegistry registry = [] {
    TemplateRegistry r = parse_json(kDefaultTemplatesJson);
    r.check_total(SchemeRegistry::defaults());
    return r;
  }();
  return registry;
}

TemplateRegistry TemplateRegistry::parse_json(std::string_view text) {
  TemplateRegistry r;
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.contains("order")) {
      const auto& o = doc.at("order");
      r.order_predicate_ = o.value("predicate", r.order_predicate_);
      r.at_most_ = o.value("at_most", r.at_most_);
      r.at_least_ = o.value("at_least", r.at_least_);
    }
    for (const auto& e : doc.value("entities", nlohmann::json::array())) {
      r.entities_.push_back(EntityTemplate{e.at("predicate").get<std::string>(), e.at("noun").get<std::string>()});
    }
    r.properties_ = read_properties(doc.value("properties", nlohmann::json::array()));
    for (const auto& m : doc.value("measures", nlohmann::json::array())) {
      r.measures_.push_back(MeasureTemplate{m.at("predicate").get<std::string>(), m.at("sort").get<std::string>(),
                                            m.at("noun").get<std::string>(),
                                            m.at("values").get<std::map<std::string, std::string>>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("template file: ") + e.what());
  }
  for (const auto& p : r.properties_) {
    if (p.pattern.find("{}") == std::string::npos || p.negated.find("{}") == std::string::npos) {
      throw ConfigError("template for '" + p.predicate + "' needs a {} slot in pattern and negated");
    }
  }
  return r;
}

TemplateRegistry TemplateRegistry::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open template file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_json(buf.str());
}

void TemplateRegistry::check_total(const SchemeRegistry& schemes) const {
  auto check = [&](const std::string& predicate, const std::string& sort,
                   const std::map<std::string, std::string>& values) {
    for (const auto& c : schemes.at(sort).constants) {
      if (!values.count(c)) {
        throw ConfigError("template for '" + predicate + "' has no phrase for '" + c + "'");
      }
    }
  };
  for (const auto& p : properties_) check(p.predicate, p.sort, p.values);
  for (const auto& m : measures_) check(m.predicate, m.sort, m.values);
}

const EntityTemplate* TemplateRegistry::entity(std::string_view predicate) const {
  for (const auto& e : entities_) {
    if (e.predicate == predicate) return &e;
  }
  return nullptr;
}

const PropertyTemplate* TemplateRegistry::property(std::string_view predicate) const {
  for (const auto& p : properties_) {
    if (p.predicate == predicate) return &p;
  }
  return nullptr;
}

const MeasureTemplate* TemplateRegistry::measure(std::string_view predicate) const {
  for (const auto& m : measures_) {
    if (m.predicate == predicate) return &m;
  }
  return nullptr;
}

const std::string& TemplateRegistry::phrase(std::string_view constant) const {
  const std::string key(constant);
  for (const auto& p : properties_) {
    if (auto it = p.values.find(key); it != p.values.end()) return it->second;
  }
  for (const auto& m : measures_) {
    if (auto it = m.values.find(key); it != m.values.end()) return it->second;
  }
  throw RenderError("no phrase for constant '" + key + "'");
}

std::string verbalize_clause(const HornClause& clause, const TemplateRegistry& reg) {
  if (clause.body.empty()) return "The part is always classified as defective.";
  const ClauseShape shape(clause, reg);
  std::vector<std::string> parts;
  for (const auto& g : shape.groups()) parts.push_back(shape.clause_phrase(g));
  return "The part is classified as defective if " + join(parts, ", and ") + ".";
}

std::string verbalize_theory(const Theory& theory, const TemplateRegistry& reg) {
  if (theory.clauses.empty()) return "No rules learned yet.";
  std::vector<std::string> lines;
  for (const auto& c : theory.clauses) lines.push_back(verbalize_clause(c, reg));
  return join(lines, "\n");
}

std::string verbalize_justification(const Justification& justification, const HornClause& clause,
                                    const SymbolicExample& example, const TemplateRegistry& reg) {
  const auto& evals = justification.atom_evals;
  if (evals.size() != clause.body.size()) {
    throw RenderError("justification has " + std::to_string(evals.size()) + " atoms but the clause has " +
                      std::to_string(clause.body.size()));
  }
  for (std::size_t i = 0; i < evals.size(); ++i) {
    if (evals[i].atom != clause.body[i]) {
      throw RenderError("justification atom " + format_atom(evals[i].atom) + " does not match clause atom " +
                        format_atom(clause.body[i]));
    }
  }
  if (clause.body.empty()) return "The part is always classified as defective.";

  const std::string image = image_constant(example.image_id);
  std::vector<std::string> defects;
  for (const Atom& f : example.facts) {
    if (f.predicate == pred::has_hp && f.arity() == 2 && f.args[0].name == image) defects.push_back(f.args[1].name);
  }
  auto ordinal = [&](const std::string& c) -> std::optional<std::size_t> {
    auto it = std::find(defects.begin(), defects.end(), c);
    if (it == defects.end()) return std::nullopt;
    return static_cast<std::size_t>(it - defects.begin()) + 1;
  };
  auto truth = [&](std::size_t atom) { return evals[atom].truth; };

  const ClauseShape shape(clause, reg);
  std::vector<std::string> parts;
  for (const auto& g : shape.groups()) {
    switch (g.kind) {
      case Group::Kind::entity: {
        const auto k = ordinal(evals[g.owner].bound_atom.args[1].name);
        if (!truth(g.owner) || !k) {
          std::string out = "there is no " + g.entity->noun;
          std::vector<std::string> props;
          for (const auto& p : g.properties) props.push_back(shape.property_phrase(p, false));
          if (!props.empty()) out += " which " + join(props, " and ");
          parts.push_back(out);
          break;
        }
        std::vector<std::string> held, failed;
        for (const auto& p : g.properties) {
          bool ok = truth(p.atom);
          for (const auto& b : p.bounds) ok = ok && truth(b.atom);
          (ok ? held : failed).push_back(shape.property_phrase(p, !ok));
        }
        std::string out = g.entity->noun + " " + std::to_string(*k);
        if (held.empty() && failed.empty()) out += " is present";
        if (!held.empty()) out += " " + join(held, " and ");
        if (!failed.empty()) out += (held.empty() ? " " : ", but it ") + join(failed, " and ");
        parts.push_back(out);
        break;
      }
      case Group::Kind::measure: {
        const Atom& owner = clause.body[g.owner];
        if (owner.args[1].is_variable() && !truth(g.owner)) {
          parts.push_back(g.measure->noun + " is unknown");
        } else if (owner.args[1].is_constant()) {
          parts.push_back(g.measure->noun + (truth(g.owner) ? " is " : " is not ") + shape.measure_value(g));
        } else if (g.bounds.empty()) {
          parts.push_back(g.measure->noun + " is known");
        } else {
          std::vector<std::string> held, failed;
          for (const auto& b : g.bounds) {
            (truth(b.atom) ? held : failed).push_back(shape.bound_phrase(b, g.measure->values, owner.predicate));
          }
          std::string out = g.measure->noun;
          if (!held.empty()) out += " is " + join(held, " and ");
          if (!failed.empty()) out += (held.empty() ? " is not " : ", but it is not ") + join(failed, " and ");
          parts.push_back(out);
        }
        break;
      }
      case Group::Kind::order:
        parts.push_back(shape.order_phrase(g, !truth(g.owner)));
        break;
    }
  }
  std::string text = capitalize(join(parts, ", and "));
  if (justification.satisfied) text += ", " + std::string(kDefectiveSuffix);
  return text + ".";
}

std::string verbalize_defects(const FeatureRecord& record, const SymbolicExample& example,
                              const TemplateRegistry& reg) {
  if (record.superpixels.empty()) return "No defects detected.";
  auto value_of = [&](std::string_view predicate, const std::string& hp) -> const std::string& {
    const PropertyTemplate* t = reg.property(predicate);
    if (!t) throw RenderError("no template for predicate '" + std::string(predicate) + "'");
    for (const Atom& f : example.facts) {
      if (f.predicate == predicate && f.arity() == 2 && f.args[0].name == hp) {
        return lookup(t->values, f.args[1].name, f.predicate);
      }
    }
    throw RenderError("example has no " + std::string(predicate) + " fact for " + hp);
  };
  std::vector<std::string> lines;
  for (std::size_t k = 0; k < record.superpixels.size(); ++k) {
    const std::string& hp = record.superpixels[k].superpixel_id;
    lines.push_back("Defect " + std::to_string(k + 1) + ": " + value_of(pred::has_size, hp) + ", " +
                    value_of(pred::eccentricity, hp) + ", " + value_of(pred::distance_from_center, hp) + ".");
  }
  return join(lines, "\n");
}

}  // namespace dtriage
