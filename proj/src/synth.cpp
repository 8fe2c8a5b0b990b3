#include "dtriage/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "dtriage/errors.hpp"
#include "dtriage/evaluator.hpp"

namespace dtriage {
namespace {

// Gaussian falloff that crosses the default cutoff at the nominal radius:
// exp(-r^2 / (2 sigma^2)) = 0.3  <=>  sigma = r / 1.552.
constexpr double kRadiusToSigma = 1.0 / 1.552;
constexpr std::uint64_t kNoiseStream = 0x9e3779b97f4a7c15ULL;

// Distribution helpers with a fixed algorithm, unlike the std:: ones.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return lo + static_cast<int>(x % span);
  }
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

struct Defect {
  double row = 0.0;
  double col = 0.0;
  double sigma = 1.0;
  double half_length = 0.0;  // 0 for round blobs
  double dir_row = 0.0;
  double dir_col = 1.0;

  double value(double r, double c) const {
    const double dr = r - row;
    const double dc = c - col;
    const double along = dr * dir_row + dc * dir_col;
    const double across = -dr * dir_col + dc * dir_row;
    const double overshoot = std::max(0.0, std::abs(along) - half_length);
    return std::exp(-(across * across + overshoot * overshoot) / (2.0 * sigma * sigma));
  }
};

Defect draw_defect(Rng& rng, const SynthConfig& cfg) {
  const double ch = (cfg.height - 1) / 2.0;
  const double cw = (cfg.width - 1) / 2.0;
  const double half_diag = std::hypot(ch, cw);
  const double radius = rng.uniform(cfg.min_radius, cfg.max_radius);
  const double distance = rng.uniform(cfg.min_distance, cfg.max_distance) * half_diag;

  Defect d;
  // Rejection-sample a direction that keeps the center inside the image;
  // far bands only fit near the diagonals.
  bool placed = false;
  for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    d.row = ch + distance * std::sin(angle);
    d.col = cw + distance * std::cos(angle);
    placed = d.row >= 0 && d.row <= cfg.height - 1 && d.col >= 0 && d.col <= cfg.width - 1;
  }
  if (!placed) {
    const double t = half_diag > 0 ? std::min(1.0, distance / half_diag) : 0.0;
    d.row = ch + t * ch;
    d.col = cw + t * cw;
  }

  d.sigma = radius * kRadiusToSigma;
  if (rng.bernoulli(cfg.elongation_probability)) {
    const double angle = rng.uniform(0.0, std::numbers::pi);
    d.dir_row = std::sin(angle);
    d.dir_col = std::cos(angle);
    d.half_length = radius * rng.uniform(1.5, 3.0);
    d.sigma /= 2.5;
  }
  return d;
}

CertaintyMask render(const std::string& id, const std::vector<Defect>& defects, const SynthConfig& cfg) {
  CertaintyMask mask;
  mask.image_id = id;
  mask.width = cfg.width;
  mask.height = cfg.height;
  std::vector<double> raw(static_cast<std::size_t>(cfg.width) * cfg.height, 0.0);
  for (const auto& d : defects) {
    // Beyond 4 sigma the profile quantizes to 0 at 8 bits.
    const double reach = d.half_length + 4.0 * d.sigma;
    const int r0 = std::max(0, static_cast<int>(std::floor(d.row - reach)));
    const int r1 = std::min(cfg.height - 1, static_cast<int>(std::ceil(d.row + reach)));
    const int c0 = std::max(0, static_cast<int>(std::floor(d.col - reach)));
    const int c1 = std::min(cfg.width - 1, static_cast<int>(std::ceil(d.col + reach)));
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        double& v = raw[static_cast<std::size_t>(r) * cfg.width + c];
        v = std::max(v, d.value(r, c));
      }
    }
  }
  // Stored at 8-bit precision so the written PGM reloads to the same mask.
  mask.values.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    mask.values[i] = static_cast<double>(std::lround(std::clamp(raw[i], 0.0, 1.0) * 255.0)) / 255.0;
  }
  return mask;
}

std::pair<double, double> read_range(const nlohmann::json& v, const std::string& key) {
  if (!v.is_array() || v.size() != 2) throw ConfigError("synth config '" + key + "' must be a [min, max] pair");
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

void SynthConfig::validate() const {
  if (count < 0) throw ConfigError("count must be non-negative");
  if (width < 1 || height < 1) throw ConfigError("image_size must be positive");
  if (min_defects < 0 || min_defects > max_defects) throw ConfigError("defect_count_range must satisfy 0 <= min <= max");
  if (!(min_radius > 0.0) || min_radius > max_radius) throw ConfigError("blob_radius_range must satisfy 0 < min <= max");
  if (!(min_distance >= 0.0) || min_distance > max_distance || max_distance > 1.0) {
    throw ConfigError("distance_range must lie in [0,1] with min <= max");
  }
  if (!(elongation_probability >= 0.0 && elongation_probability <= 1.0)) {
    throw ConfigError("elongation_probability must lie in [0,1]");
  }
  if (!(label_noise >= 0.0 && label_noise <= 1.0)) throw ConfigError("label_noise must lie in [0,1]");
  if (!(cutoff >= 0.0 && cutoff <= 1.0)) throw ConfigError("cutoff must lie in [0,1]");
  if (ground_truth.clauses.empty()) throw ConfigError("ground_truth_theory must not be empty");
}

SynthConfig SynthConfig::parse_json(std::string_view text) {
  SynthConfig config;
  try {
    const auto doc = nlohmann::json::parse(text);
    if (!doc.is_object()) throw ConfigError("synth config must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
      if (key == "seed") {
        config.seed = value.get<std::uint64_t>();
      } else if (key == "count") {
        config.count = value.get<int>();
      } else if (key == "image_size") {
        const auto [w, h] = read_range(value, key);
        config.width = static_cast<int>(w);
        config.height = static_cast<int>(h);
      } else if (key == "defect_count_range") {
        const auto [lo, hi] = read_range(value, key);
        config.min_defects = static_cast<int>(lo);
        config.max_defects = static_cast<int>(hi);
      } else if (key == "blob_radius_range") {
        std::tie(config.min_radius, config.max_radius) = read_range(value, key);
      } else if (key == "distance_range") {
        std::tie(config.min_distance, config.max_distance) = read_range(value, key);
      } else if (key == "elongation_probability") {
        config.elongation_probability = value.get<double>();
      } else if (key == "ground_truth_theory") {
        config.ground_truth = parse_theory(value.get<std::string>());
      } else if (key == "label_noise") {
        config.label_noise = value.get<double>();
      } else if (key == "cutoff") {
        config.cutoff = value.get<double>();
      } else {
        throw ConfigError("unknown synth config key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth config: ") + e.what());
  } catch (const ParseError& e) {
    throw ConfigError(std::string("synth config ground_truth_theory: ") + e.what());
  }
  config.validate();
  return config;
}

SynthConfig SynthConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open synth config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_json(buf.str());
}

std::string synth_id(int index, int count) {
  const std::size_t width = std::max<std::size_t>(4, std::to_string(count).size());
  std::string s = std::to_string(index);
  return std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

std::vector<SynthItem> generate_dataset(const SynthConfig& config) {
  config.validate();
  const auto& schemes = SchemeRegistry::defaults();
  const auto background = background_facts(schemes.schemes());
  // Flips come from their own stream so the masks do not depend on label_noise.
  Rng rng(config.seed);
  Rng flips(config.seed ^ kNoiseStream);

  std::vector<SynthItem> items;
  items.reserve(static_cast<std::size_t>(config.count));
  for (int i = 1; i <= config.count; ++i) {
    const std::string id = synth_id(i, config.count);
    std::vector<Defect> defects(static_cast<std::size_t>(rng.uniform_int(config.min_defects, config.max_defects)));
    for (auto& d : defects) d = draw_defect(rng, config);

    SynthItem item;
    item.mask = render(id, defects, config);
    item.example = compile_example(build_feature_record(item.mask, config.cutoff), Label::unlabeled, schemes,
                                   Provenance::annotated);
    const bool positive = entails(config.ground_truth, item.example, background);
    item.label_flipped = flips.bernoulli(config.label_noise);
    item.example.label = positive != item.label_flipped ? Label::defective : Label::ok;
    items.push_back(std::move(item));
  }
  return items;
}

CertaintyMask render_photo(const CertaintyMask& mask) {
  CertaintyMask photo = mask;
  const double ch = (mask.height - 1) / 2.0;
  const double cw = (mask.width - 1) / 2.0;
  const double part_radius = 0.97 * std::hypot(ch, cw);
  for (int r = 0; r < mask.height; ++r) {
    for (int c = 0; c < mask.width; ++c) {
      const double d = std::hypot(r - ch, c - cw) / part_radius;
      double v = d <= 1.0 ? 0.75 - 0.15 * d * d : 0.2;
      v -= 0.5 * mask.at(r, c);
      photo.values[static_cast<std::size_t>(r) * mask.width + c] =
          static_cast<double>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)) / 255.0;
    }
  }
  return photo;
}

void write_dataset(const std::vector<SynthItem>& items, const std::filesystem::path& out_dir, int review_count) {
  namespace fs = std::filesystem;
  for (const char* sub : {"masks", "images"}) {
    std::error_code ec;
    fs::create_directories(out_dir / sub, ec);
    if (ec) throw ConfigError("cannot create " + (out_dir / sub).string() + ": " + ec.message());
  }
  auto write_pgm = [](const fs::path& path, const CertaintyMask& m) {
    const auto bytes = encode_pgm(m, 255);
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ConfigError("cannot write " + path.string());
  };

  std::string labels;
  std::string manifest;
  const std::size_t first_review = items.size() - std::min<std::size_t>(items.size(), std::max(0, review_count));
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& item = items[i];
    write_pgm(out_dir / "masks" / (item.mask.image_id + ".pgm"), item.mask);
    write_pgm(out_dir / "images" / (item.mask.image_id + ".pgm"), render_photo(item.mask));
    const std::string label(to_string(item.example.label));
    if (i < first_review) labels += item.mask.image_id + "\t" + label + "\n";
    const Provenance provenance = i < first_review ? item.example.provenance : Provenance::inferred;
    manifest += item.mask.image_id + "\t" + label + "\t" + std::string(to_string(provenance)) + "\n";
  }
  for (const auto& [name, text] : {std::pair{"labels.tsv", &labels}, std::pair{"manifest.tsv", &manifest}}) {
    std::ofstream out(out_dir / name, std::ios::binary);
    out << *text;
    if (!out) throw ConfigError("cannot write " + (out_dir / name).string());
  }
}

}  // namespace dtriage
