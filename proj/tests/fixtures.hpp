#pragma once

// Shared test data: the cast_6858 example and random symbolic examples drawn
// directly over the default vocabulary.

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dtriage/facts.hpp"
#include "dtriage/logic.hpp"

namespace fixture {

inline const char* kCast6858Text =
    "total_volume(cast_6858,tvol_large).\n"
    "has_hp(cast_6858,hp_6858_2).\n"
    "\n"
    "has_size(hp_6858_2,vol_large).\n"
    "distance_from_center(hp_6858_2,outer_rim).\n"
    "eccentricity(hp_6858_2,very_elongated).\n";

inline dtriage::FeatureRecord cast_6858_record() {
  dtriage::Superpixel sp;
  sp.superpixel_id = "hp_6858_2";
  sp.pixels = {{0, 0}};
  sp.mass = 2000.0;
  sp.center_distance = 0.91;
  sp.eccentricity = 0.97;
  return dtriage::FeatureRecord{"6858", {sp}, 1, 2000.0};
}

inline dtriage::SymbolicExample cast_6858(dtriage::Label label = dtriage::Label::defective) {
  return dtriage::compile_example(cast_6858_record(), label);
}

inline const std::vector<dtriage::Atom>& background() {
  static const auto bg = dtriage::background_facts(dtriage::SchemeRegistry::defaults().schemes());
  return bg;
}

inline dtriage::HornClause clause(const std::string& text) { return dtriage::parse_clause(text); }

// Example with `n` superpixels and uniformly drawn interval constants.
inline dtriage::SymbolicExample random_example(std::mt19937& rng, const std::string& id, int max_hps,
                                               dtriage::Label label = dtriage::Label::unlabeled) {
  const auto& schemes = dtriage::SchemeRegistry::defaults();
  auto pick = [&](std::string_view sort) {
    const auto& c = schemes.at(sort).constants;
    return c[rng() % c.size()];
  };
  const int n = static_cast<int>(rng() % static_cast<unsigned>(max_hps + 1));
  dtriage::SymbolicExample ex;
  ex.image_id = id;
  ex.label = label;
  const std::string img = dtriage::image_constant(id);
  ex.facts.push_back(dtriage::make_fact("total_volume", {img, pick("total_volume")}));
  ex.facts.push_back(dtriage::make_fact("num_hps", {img, schemes.discretize("count", n)}));
  for (int k = 1; k <= n; ++k) {
    const std::string hp = "hp_" + id + "_" + std::to_string(k);
    ex.facts.push_back(dtriage::make_fact("has_hp", {img, hp}));
    ex.facts.push_back(dtriage::make_fact("has_size", {hp, pick("size")}));
    ex.facts.push_back(dtriage::make_fact("distance_from_center", {hp, pick("distance")}));
    ex.facts.push_back(dtriage::make_fact("eccentricity", {hp, pick("eccentricity")}));
  }
  return ex;
}

}  // namespace fixture

namespace fixture {

// Random clause over the default vocabulary with variables A (head), B, C.
// Not necessarily linked; may mention a predicate absent from every fact base.
inline dtriage::HornClause random_clause(std::mt19937& rng, int max_body) {
  using dtriage::Term;
  const auto& schemes = dtriage::SchemeRegistry::defaults();
  auto var = [&] { return Term::var(std::string(1, "ABC"[rng() % 3])); };
  auto constant = [&](std::string_view sort) {
    const auto& c = schemes.at(sort).constants;
    return Term::constant(c[rng() % c.size()]);
  };
  auto value = [&](std::string_view sort) { return rng() % 3 == 0 ? var() : constant(sort); };
  dtriage::HornClause c{dtriage::Atom{"defective", {Term::var("A")}}, {}};
  const int n = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_body));
  for (int i = 0; i < n; ++i) {
    switch (rng() % 9) {
      case 0:
      case 1:
        c.body.push_back({"has_hp", {var(), var()}});
        break;
      case 2:
        c.body.push_back({"has_size", {var(), value("size")}});
        break;
      case 3:
        c.body.push_back({"distance_from_center", {var(), value("distance")}});
        break;
      case 4:
        c.body.push_back({"eccentricity", {var(), value("eccentricity")}});
        break;
      case 5:
        c.body.push_back({"total_volume", {var(), value("total_volume")}});
        break;
      case 6:
        c.body.push_back({"num_hps", {var(), value("count")}});
        break;
      case 7:
        c.body.push_back(rng() % 2 ? dtriage::Atom{"num_leq", {var(), constant("total_volume")}}
                                   : dtriage::Atom{"num_leq", {constant("count"), var()}});
        break;
      default:
        c.body.push_back({"scratch", {var()}});
        break;
    }
  }
  return c;
}

}  // namespace fixture

#include <filesystem>
#include <fstream>
#include <sstream>

namespace fixture {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("dtriage_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(++counter));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline const char* kTargetRule =
    "defective(A) :- has_hp(A,B), has_size(B,vol_large), distance_from_center(B,outer_rim).";

}  // namespace fixture

namespace fixture {

// Random mask up to max_side x max_side; a random share of pixels gets a
// uniform certainty, the rest stays 0.
inline dtriage::CertaintyMask random_mask(std::mt19937& rng, int max_side, const std::string& id = "r") {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  dtriage::CertaintyMask m;
  m.image_id = id;
  m.width = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_side));
  m.height = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_side));
  const double density = u(rng);
  m.values.resize(static_cast<std::size_t>(m.width) * m.height);
  for (double& v : m.values) v = u(rng) < density ? u(rng) : 0.0;
  return m;
}

// Random pixel set inside an n x n grid.
inline std::vector<dtriage::PixelCoord> random_pixels(std::mt19937& rng, int n) {
  std::set<dtriage::PixelCoord> s;
  const int count = 1 + static_cast<int>(rng() % static_cast<unsigned>(n * n));
  for (int i = 0; i < count; ++i) s.insert({static_cast<int>(rng() % n), static_cast<int>(rng() % n)});
  return {s.begin(), s.end()};
}

// 90 degree rotation about the center of an n x n grid.
inline std::vector<dtriage::PixelCoord> rotate90(const std::vector<dtriage::PixelCoord>& px, int n) {
  std::vector<dtriage::PixelCoord> out;
  for (const auto& p : px) out.push_back({p.col, n - 1 - p.row});
  std::sort(out.begin(), out.end());
  return out;
}

inline dtriage::Point2 centroid(const std::vector<dtriage::PixelCoord>& px) {
  dtriage::Point2 c;
  for (const auto& p : px) {
    c.row += p.row;
    c.col += p.col;
  }
  c.row /= static_cast<double>(px.size());
  c.col /= static_cast<double>(px.size());
  return c;
}

}  // namespace fixture
