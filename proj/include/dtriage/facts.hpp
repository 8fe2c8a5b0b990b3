#pragma once

// Symbolic image representation: interval discretization of numeric
// features and the Prolog-style fact text format.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dtriage/logic.hpp"
#include "dtriage/mask.hpp"

namespace dtriage {

namespace pred {
inline constexpr std::string_view has_hp = "has_hp";
inline constexpr std::string_view has_size = "has_size";
inline constexpr std::string_view distance_from_center = "distance_from_center";
inline constexpr std::string_view eccentricity = "eccentricity";
inline constexpr std::string_view num_hps = "num_hps";
inline constexpr std::string_view total_volume = "total_volume";
inline constexpr std::string_view num_leq = "num_leq";
}  // namespace pred

namespace sort {
inline constexpr std::string_view size = "size";
inline constexpr std::string_view total_volume = "total_volume";
inline constexpr std::string_view distance = "distance";
inline constexpr std::string_view eccentricity = "eccentricity";
inline constexpr std::string_view count = "count";
}  // namespace sort

enum class Label { ok, defective, unlabeled };
enum class Provenance { annotated, inferred, user_feedback, dummy };

std::string_view to_string(Label label) noexcept;
std::string_view to_string(Provenance provenance) noexcept;
Label parse_label(std::string_view text);            // throws ConfigError
Provenance parse_provenance(std::string_view text);  // throws ConfigError

struct SymbolicExample {
  std::string image_id;
  std::vector<Atom> facts;
  Label label = Label::unlabeled;
  Provenance provenance = Provenance::inferred;

  bool operator==(const SymbolicExample&) const = default;
};

// Constant naming the image inside facts: the id itself when it is already a
// valid constant ("dummy_3", "cast_6858"), otherwise "cast_<id>".
std::string image_constant(std::string_view image_id);

// Checks groundness and, except for dummies, the per-image fact structure.
void validate_example(const SymbolicExample& example);

struct IntervalScheme {
  std::string sort_name;
  std::vector<std::string> constants;  // ascending
  std::vector<double> thresholds;      // ascending, constants.size() - 1 entries

  void validate() const;
  // Number of thresholds <= x; boundary values go to the upper interval.
  std::size_t index_of(double x) const;
};

class SchemeRegistry {
 public:
  SchemeRegistry() = default;
  explicit SchemeRegistry(std::vector<IntervalScheme> schemes);

  static const SchemeRegistry& defaults();
  // {"size": {"constants": [...], "thresholds": [...]}, ...}
  static SchemeRegistry parse_json(std::string_view text);
  static SchemeRegistry load_file(const std::string& path);

  const IntervalScheme& at(std::string_view sort_name) const;  // throws ConfigError
  std::string discretize(std::string_view sort_name, double x) const;
  std::optional<std::string> sort_of_constant(std::string_view constant) const;
  const std::vector<IntervalScheme>& schemes() const noexcept { return schemes_; }

 private:
  std::vector<IntervalScheme> schemes_;
};

std::string discretize(std::string_view sort_name, double x);  // default registry

SymbolicExample compile_example(const FeatureRecord& record, Label label,
                                const SchemeRegistry& schemes = SchemeRegistry::defaults(),
                                Provenance provenance = Provenance::inferred);

// "pred(a,b)." per line with a trailing newline; no facts -> "".
std::string emit_atoms(const std::vector<Atom>& atoms);
std::string emit_facts(const SymbolicExample& example);

// Inverse of emit_atoms; skips blank lines and '%' comments.
std::vector<Atom> parse_facts(std::string_view text);

// num_leq(ci,cj) for i <= j within each sort.
std::vector<Atom> background_facts(const std::vector<IntervalScheme>& schemes);

}  // namespace dtriage
