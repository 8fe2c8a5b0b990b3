#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>

#include "dtriage/errors.hpp"
#include "dtriage/evaluator.hpp"
#include "dtriage/facts.hpp"
#include "dtriage/learner.hpp"
#include "dtriage/service.hpp"
#include "dtriage/synth.hpp"
#include "dtriage/verbalizer.hpp"

namespace dtriage::cli {
namespace {

namespace fs = std::filesystem;

// Raised for anything the learner rejects, so it maps to its own exit code.
struct LearnerFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw NotFoundError("cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw NotFoundError("cannot write " + p.string());
}

TemplateRegistry load_templates(const std::string& path) {
  return path.empty() ? TemplateRegistry::defaults() : TemplateRegistry::load_file(path);
}

// Wraps a file-level error with the file name.
template <typename F>
auto in_file(const fs::path& p, F&& f) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw ParseError(p.string() + ": " + e.what(), e.line(), e.column());
  }
}

SymbolicExample read_example(const fs::path& p, Label label) {
  const std::string id = p.stem().string();
  if (!is_valid_image_id(id)) throw PreconditionError("file name " + p.string() + " is not a valid image id");
  SymbolicExample ex{id, in_file(p, [&] { return parse_facts(read_file(p)); }), label, Provenance::annotated};
  validate_example(ex);
  return ex;
}

std::map<std::string, Label> read_labels(const fs::path& p) {
  std::map<std::string, Label> labels;
  std::istringstream in(read_file(p));
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    const std::string label_text = tab == std::string::npos ? "" : line.substr(tab + 1);
    if (tab == std::string::npos || (label_text != "ok" && label_text != "defective")) {
      throw ParseError(p.string() + ": expected id<TAB>ok|defective", static_cast<std::size_t>(n), 1);
    }
    if (!labels.emplace(line.substr(0, tab), parse_label(label_text)).second) {
      throw ParseError(p.string() + ": duplicate id " + line.substr(0, tab), static_cast<std::size_t>(n), 1);
    }
  }
  return labels;
}

void cmd_extract(const std::string& mask_path, std::string id, double cutoff, double mass_scale, std::ostream& out) {
  if (id.empty()) id = fs::path(mask_path).stem().string();
  if (!is_valid_image_id(id)) throw PreconditionError("image id '" + id + "' must match [A-Za-z0-9_]+");
  if (!fs::exists(mask_path)) throw NotFoundError("no such mask file " + mask_path);
  const auto mask = load_mask_file(mask_path, id, mass_scale);
  out << emit_facts(compile_example(build_feature_record(mask, cutoff), Label::unlabeled));
}

void cmd_train(const std::string& facts_dir, const std::string& labels_path, const std::string& learner_path,
               const std::string& templates_path, const std::string& theory_out, std::ostream& out,
               std::ostream& err) {
  if (!fs::is_directory(facts_dir)) throw NotFoundError("no such facts directory " + facts_dir);
  LearnerConfig config;
  try {
    if (!learner_path.empty()) config = LearnerConfig::load_file(learner_path);
  } catch (const ConfigError& e) {
    throw LearnerFailure(e.what());
  }
  const auto templates = load_templates(templates_path);
  auto labels = read_labels(labels_path);

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(facts_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<SymbolicExample> pos, neg;
  for (const auto& f : files) {
    const auto it = labels.find(f.stem().string());
    if (it == labels.end()) continue;
    auto ex = read_example(f, it->second);
    (ex.label == Label::defective ? pos : neg).push_back(std::move(ex));
    labels.erase(it);
  }
  if (!labels.empty()) throw NotFoundError("no facts file for labeled image " + labels.begin()->first);

  const auto background = background_facts(SchemeRegistry::defaults().schemes());
  const auto start = std::chrono::steady_clock::now();
  Theory theory;
  try {
    theory = learn_theory(pos, neg, background, default_modes(), config);
  } catch (const ConfigError& e) {
    throw LearnerFailure(e.what());
  } catch (const PreconditionError& e) {
    throw LearnerFailure(e.what());
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const std::string serialized = format_theory(theory);
  if (!theory_out.empty()) write_file(theory_out, serialized);
  out << serialized << "\n" << verbalize_theory(theory, templates) << "\n";
  const auto& s = theory.train_stats;
  err << "learned " << theory.clauses.size() << " clause(s) from " << pos.size() << " positive and " << neg.size()
      << " negative examples in " << seconds << " s; training accuracy " << s.accuracy << "\n";
}

void cmd_eval(const std::string& theory_path, const std::string& facts_path, const std::string& templates_path,
              std::ostream& out) {
  const Theory theory = in_file(theory_path, [&] { return parse_theory(read_file(theory_path)); });
  const auto templates = load_templates(templates_path);
  const SymbolicExample ex = read_example(facts_path, Label::unlabeled);
  const auto background = background_facts(SchemeRegistry::defaults().schemes());
  const Classification c = evaluate(theory, ex, background);
  out << to_string(c.label) << "\n";
  for (const auto& j : c.justifications) {
    out << j.clause_index << "\t" << (j.satisfied ? "satisfied" : "nearest_miss") << "\t"
        << verbalize_justification(j, theory.clauses.at(j.clause_index), ex, templates) << "\n";
  }
}

void cmd_synth(const std::string& config_path, const std::string& out_dir, int review, std::ostream& out) {
  const auto config = SynthConfig::load_file(config_path);
  const auto items = generate_dataset(config);
  write_dataset(items, out_dir, review);
  int positives = 0;
  for (const auto& item : items) positives += item.example.label == Label::defective;
  out << "wrote " << items.size() << " items (" << positives << " defective) to " << out_dir << "\n";
}

struct ServeOptions {
  std::string data_dir;
  std::string listen;
  std::string learner;
  std::string templates;
  std::string static_dir;
  bool retrain_on_accept = false;
};

void cmd_serve(const ServeOptions& opt, std::ostream& out) {
  ServiceConfig config = ServiceConfig::from_env([](const char* key) -> const char* { return std::getenv(key); });
  if (!opt.data_dir.empty()) config.data_dir = opt.data_dir;
  if (!opt.listen.empty()) std::tie(config.host, config.port) = parse_listen_address(opt.listen);
  if (!opt.learner.empty()) config.learner_config = fs::path(opt.learner);
  if (!opt.templates.empty()) config.templates = fs::path(opt.templates);
  if (!opt.static_dir.empty()) config.static_dir = fs::path(opt.static_dir);
  if (opt.retrain_on_accept) config.retrain_on_accept = true;
  if (config.data_dir.empty()) throw ConfigError("no data directory given");
  if (!fs::is_directory(config.data_dir)) throw NotFoundError("no such data directory " + config.data_dir.string());
  if (config.learner_config) {
    try {
      LearnerConfig::load_file(config.learner_config->string());
    } catch (const ConfigError& e) {
      throw LearnerFailure(e.what());
    }
  }

  TriageService service(config);
  httplib::Server server;
  service.mount(server);
  if (!server.bind_to_port(config.host, config.port)) {
    throw ConfigError("cannot listen on " + config.host + ":" + std::to_string(config.port));
  }
  out << "serving " << config.data_dir.string() << " on http://" << config.host << ":" << config.port << "/"
      << std::endl;
  server.listen_after_bind();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Defect triage: mask facts, rule learning, explanations and review."};
  app.name("dtriage");
  app.require_subcommand(1);

  std::string mask_path, extract_id;
  double cutoff = kDefaultCutoff, mass_scale = 1.0;
  auto* extract = app.add_subcommand("extract", "Print the facts for one mask");
  extract->add_option("mask", mask_path, "PGM mask file")->required();
  extract->add_option("--id", extract_id, "Image id (default: file stem)");
  extract->add_option("--cutoff", cutoff, "Certainty cutoff")->check(CLI::Range(0.0, 1.0));
  extract->add_option("--mass-scale", mass_scale, "Mass calibration factor")->check(CLI::PositiveNumber);

  std::string facts_dir, labels_path, learner_path, templates_path, theory_out;
  auto* train = app.add_subcommand("train", "Learn a theory from fact files and labels");
  train->add_option("facts-dir", facts_dir, "Directory of <id>.pl fact files")->required();
  train->add_option("labels", labels_path, "Labels file, id<TAB>ok|defective per line")->required();
  train->add_option("--learner-config", learner_path, "Learner JSON config");
  train->add_option("--templates", templates_path, "Verbalization templates JSON");
  train->add_option("--out", theory_out, "Also write the serialized theory here");

  std::string theory_path, facts_path;
  auto* eval = app.add_subcommand("eval", "Classify one fact file and explain");
  eval->add_option("theory", theory_path, "Theory file")->required();
  eval->add_option("facts", facts_path, "Fact file named <id>.pl")->required();
  eval->add_option("--templates", templates_path, "Verbalization templates JSON");

  std::string synth_config, synth_out;
  int review = 0;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic labeled dataset");
  synth->add_option("config", synth_config, "Synth JSON config")->required();
  synth->add_option("out-dir", synth_out, "Output directory")->required();
  synth->add_option("--review", review, "Leave the last N items unlabeled for review")->check(CLI::NonNegativeNumber);

  ServeOptions serve_opt;
  auto* serve = app.add_subcommand("serve", "Run the review service");
  serve->add_option("kb-dir", serve_opt.data_dir, "Data directory (or DTRIAGE_DATA_DIR)");
  serve->add_option("--listen", serve_opt.listen, "host:port (or DTRIAGE_LISTEN)");
  serve->add_option("--learner-config", serve_opt.learner, "Learner JSON config (or DTRIAGE_LEARNER_CONFIG)");
  serve->add_option("--templates", serve_opt.templates, "Templates JSON (or DTRIAGE_TEMPLATES)");
  serve->add_option("--static-dir", serve_opt.static_dir, "UI bundle directory (or DTRIAGE_STATIC_DIR)");
  serve->add_flag("--retrain-on-accept", serve_opt.retrain_on_accept, "Retrain after accepted verdicts too");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*extract) cmd_extract(mask_path, extract_id, cutoff, mass_scale, out);
    if (*train) cmd_train(facts_dir, labels_path, learner_path, templates_path, theory_out, out, err);
    if (*eval) cmd_eval(theory_path, facts_path, templates_path, out);
    if (*synth) cmd_synth(synth_config, synth_out, review, out);
    if (*serve) cmd_serve(serve_opt, out);
  } catch (const LearnerFailure& e) {
    err << "dtriage: learner error: " << e.what() << "\n";
    return kExitLearner;
  } catch (const std::exception& e) {
    err << "dtriage: error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace dtriage::cli
