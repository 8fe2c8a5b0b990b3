#include "dtriage/service.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "dtriage/errors.hpp"
#include "dtriage/facts.hpp"

namespace dtriage {

namespace fs = std::filesystem;
using nlohmann::json;

struct TriageService::Media {
  fs::path masks;
  fs::path photos;
};

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void append_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::app);
  out << text;
  out.flush();
  if (!out) throw ConfigError("cannot append to " + p.string());
}

void write_atomically(const fs::path& p, const std::string& text) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw ConfigError("cannot write " + tmp.string());
  }
  fs::rename(tmp, p);
}

HttpResponse json_response(int status, const json& body) { return {status, body.dump()}; }

HttpResponse error_response(int status, const std::string& message) {
  return json_response(status, json{{"error", message}});
}

std::map<std::string, Label> read_labels(const fs::path& p) {
  std::map<std::string, Label> labels;
  if (!fs::exists(p)) return labels;
  std::istringstream in(read_text(p));
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ConfigError(p.string() + ":" + std::to_string(n) + ": expected id<TAB>label");
    Label label;
    try {
      label = parse_label(line.substr(tab + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(p.string() + ":" + std::to_string(n) + ": " + e.what());
    }
    if (label == Label::unlabeled) {
      throw ConfigError(p.string() + ":" + std::to_string(n) + ": label must be ok or defective");
    }
    if (!labels.emplace(line.substr(0, tab), label).second) {
      throw ConfigError(p.string() + ":" + std::to_string(n) + ": duplicate id " + line.substr(0, tab));
    }
  }
  return labels;
}

KnowledgeBase initial_kb(const ServiceConfig& config, const FeedbackPolicy& policy) {
  const fs::path masks = config.data_dir / "masks";
  if (!fs::is_directory(masks)) throw ConfigError("missing mask directory " + masks.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(masks)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  auto labels = read_labels(config.data_dir / "labels.tsv");

  KnowledgeBase kb;
  kb.set_background(background_facts(SchemeRegistry::defaults().schemes()));
  bool any_labeled = false;
  for (const auto& file : files) {
    const std::string id = file.stem().string();
    if (!is_valid_image_id(id)) throw ConfigError("mask file name " + file.string() + " is not a valid image id");
    const auto mask = load_mask_file(file.string(), id);
    const auto it = labels.find(id);
    const Label label = it == labels.end() ? Label::unlabeled : it->second;
    const Provenance provenance = it == labels.end() ? Provenance::inferred : Provenance::annotated;
    kb.add_example(compile_example(build_feature_record(mask, config.cutoff), label, SchemeRegistry::defaults(),
                                   provenance));
    any_labeled = any_labeled || it != labels.end();
    if (it != labels.end()) labels.erase(it);
  }
  if (!labels.empty()) throw ConfigError("labels.tsv names image " + labels.begin()->first + " without a mask");
  if (any_labeled) retrain(kb, policy);
  return kb;
}

json stats_json(const TrainStats& s) {
  return {{"positives_covered", s.positives_covered},
          {"negatives_covered", s.negatives_covered},
          {"positives_total", s.positives_total},
          {"negatives_total", s.negatives_total},
          {"accuracy", s.accuracy}};
}

json png_json(const std::optional<std::string>& data) {
  if (!data) return nullptr;
  return {{"format", "png"}, {"encoding", "base64"}, {"data", *data}};
}

json item_json(const ReviewItem& item) {
  json regions = json::array();
  for (const auto& r : item.overlay_regions) {
    regions.push_back({{"ordinal", r.ordinal},
                       {"superpixel_id", r.superpixel_id},
                       {"bbox", {{"min_row", r.min_row}, {"min_col", r.min_col}, {"max_row", r.max_row}, {"max_col", r.max_col}}}});
  }
  json justifications = json::array();
  for (const auto& j : item.justification_texts) {
    justifications.push_back({{"text", j.text}, {"satisfied", j.satisfied}, {"clause_index", j.clause_index}});
  }
  return {{"image_id", item.image_id},
          {"revision", item.revision},
          {"width", item.width},
          {"height", item.height},
          {"image", png_json(item.image_png_base64)},
          {"mask", png_json(item.mask_png_base64)},
          {"overlay_regions", regions},
          {"defect_text", item.defect_text},
          {"classification", to_string(item.classification.label)},
          {"justification_texts", justifications},
          {"theory_text", item.theory_text}};
}

Verdict parse_verdict(const std::string& body) {
  const json doc = json::parse(body);
  if (!doc.is_object()) throw PreconditionError("feedback body must be a JSON object");
  auto field = [&doc](const char* name) -> const json& {
    if (!doc.contains(name)) throw PreconditionError(std::string("feedback body lacks '") + name + "'");
    return doc.at(name);
  };
  Verdict v;
  const json& id = field("image_id");
  const json& revision = field("revision");
  const json& accepted = field("classification_accepted");
  const json& flags = field("justification_accepted");
  if (!id.is_string()) throw PreconditionError("image_id must be a string");
  if (!revision.is_number_unsigned()) throw PreconditionError("revision must be a non-negative integer");
  if (!accepted.is_boolean()) throw PreconditionError("classification_accepted must be a boolean");
  if (!flags.is_array()) throw PreconditionError("justification_accepted must be an array");
  v.image_id = id.get<std::string>();
  v.revision = revision.get<std::uint64_t>();
  v.classification_accepted = accepted.get<bool>();
  for (const auto& f : flags) {
    if (!f.is_boolean()) throw PreconditionError("justification_accepted entries must be booleans");
    v.justification_accepted.push_back(f.get<bool>());
  }
  return v;
}

}  // namespace

std::pair<std::string, int> parse_listen_address(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0) throw ConfigError("listen address must be host:port, got '" + text + "'");
  int port = 0;
  const char* begin = text.data() + colon + 1;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(begin, end, port);
  if (res.ec != std::errc{} || res.ptr != end || port < 0 || port > 65535) {
    throw ConfigError("bad port in listen address '" + text + "'");
  }
  return {text.substr(0, colon), port};
}

ServiceConfig ServiceConfig::from_env(const std::function<const char*(const char*)>& lookup) {
  ServiceConfig c;
  if (const char* v = lookup("DTRIAGE_DATA_DIR")) c.data_dir = v;
  if (const char* v = lookup("DTRIAGE_LISTEN")) std::tie(c.host, c.port) = parse_listen_address(v);
  if (const char* v = lookup("DTRIAGE_LEARNER_CONFIG")) c.learner_config = fs::path(v);
  if (const char* v = lookup("DTRIAGE_TEMPLATES")) c.templates = fs::path(v);
  if (const char* v = lookup("DTRIAGE_STATIC_DIR")) c.static_dir = fs::path(v);
  if (const char* v = lookup("DTRIAGE_RETRAIN_ON_ACCEPT")) {
    const std::string s = v;
    if (s != "0" && s != "1") throw ConfigError("DTRIAGE_RETRAIN_ON_ACCEPT must be 0 or 1");
    c.retrain_on_accept = s == "1";
  }
  return c;
}

TriageService::TriageService(ServiceConfig config)
    : config_(std::move(config)),
      templates_(config_.templates ? TemplateRegistry::load_file(config_.templates->string())
                                   : TemplateRegistry::defaults()),
      media_(std::make_unique<Media>(Media{config_.data_dir / "masks", config_.data_dir / "images"})) {
  if (config_.learner_config) policy_.learner = LearnerConfig::load_file(config_.learner_config->string());
  policy_.retrain_on_accept = config_.retrain_on_accept;

  const fs::path log = config_.data_dir / "kb.log";
  std::shared_ptr<const KnowledgeBase> kb;
  if (fs::exists(log)) {
    kb = std::make_shared<const KnowledgeBase>(load_kb(read_text(log)));
  } else {
    kb = std::make_shared<const KnowledgeBase>(initial_kb(config_, policy_));
    write_atomically(log, save_kb(*kb));
  }
  const fs::path hist = config_.data_dir / "history.jsonl";
  if (fs::exists(hist)) {
    std::istringstream in(read_text(hist));
    for (std::string line; std::getline(in, line);) {
      if (!line.empty()) history_.push_back(line);
    }
  }
  publish(std::move(kb));
}

TriageService::~TriageService() = default;

std::shared_ptr<const KnowledgeBase> TriageService::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return kb_;
}

void TriageService::publish(std::shared_ptr<const KnowledgeBase> kb) {
  std::lock_guard lock(snapshot_mutex_);
  kb_ = std::move(kb);
}

HttpResponse TriageService::render(const KnowledgeBase& kb, const SymbolicExample& example) const {
  const fs::path mask_path = media_->masks / (example.image_id + ".pgm");
  if (!fs::exists(mask_path)) return error_response(404, "no mask on disk for image " + example.image_id);
  const auto mask = load_mask_file(mask_path.string(), example.image_id);
  std::optional<CertaintyMask> photo;
  const fs::path photo_path = media_->photos / (example.image_id + ".pgm");
  if (fs::exists(photo_path)) photo = load_mask_file(photo_path.string(), example.image_id);
  const ReviewItem item = build_review_item(kb, example, mask, photo ? &*photo : nullptr, templates_, config_.cutoff);
  return json_response(200, item_json(item));
}

HttpResponse TriageService::next_item() const {
  const auto kb = snapshot();
  std::set<std::string> reviewed;
  for (const auto& ex : kb->examples()) {
    if (ex.provenance == Provenance::user_feedback) reviewed.insert(ex.image_id);
  }
  for (const auto& ex : kb->examples()) {
    if (ex.provenance == Provenance::inferred && ex.label == Label::unlabeled && !reviewed.count(ex.image_id)) {
      return render(*kb, ex);
    }
  }
  return {204, ""};
}

HttpResponse TriageService::item(const std::string& image_id) const {
  const auto kb = snapshot();
  const SymbolicExample* ex = kb->find_example(image_id);
  if (!ex) return error_response(404, "unknown image '" + image_id + "'");
  return render(*kb, *ex);
}

HttpResponse TriageService::theory() const {
  const auto kb = snapshot();
  json clauses = json::array();
  for (const auto& c : kb->theory().clauses) clauses.push_back(format_clause(c));
  return json_response(200, {{"revision", kb->revision()},
                             {"clauses", clauses},
                             {"verbalization", verbalize_theory(kb->theory(), templates_)},
                             {"stats", stats_json(kb->theory().train_stats)}});
}

HttpResponse TriageService::history() const {
  json entries = json::array();
  std::lock_guard lock(snapshot_mutex_);
  for (const auto& line : history_) entries.push_back(json::parse(line));
  return json_response(200, {{"entries", entries}});
}

HttpResponse TriageService::feedback(const std::string& request_body) {
  Verdict verdict;
  try {
    verdict = parse_verdict(request_body);
  } catch (const json::exception& e) {
    return error_response(400, std::string("malformed JSON: ") + e.what());
  } catch (const PreconditionError& e) {
    return error_response(400, e.what());
  }

  std::lock_guard writer(writer_);
  const auto current = snapshot();
  if (verdict.revision != current->revision()) {
    return json_response(409, {{"error", "stale revision"}, {"current_revision", current->revision()}});
  }
  const SymbolicExample* ex = current->find_example(verdict.image_id);
  if (!ex) return error_response(404, "unknown image '" + verdict.image_id + "'");

  auto next = std::make_shared<KnowledgeBase>(*current);
  FeedbackResult result;
  try {
    const Classification shown = evaluate(current->theory(), *ex, current->background());
    result = submit_feedback(*next, verdict, shown, policy_);
  } catch (const PreconditionError& e) {
    return error_response(400, e.what());
  } catch (const ConstructionError& e) {
    return error_response(422, e.what());
  }

  json dummies = json::array();
  for (const auto& d : result.dummy_ids) dummies.push_back(d);
  const json response{{"retrained", result.retrained},
                      {"new_revision", result.new_revision},
                      {"feedback_case", result.feedback_case},
                      {"dummy_ids", dummies},
                      {"gaps_recorded", result.gaps_recorded}};
  const json entry{{"image_id", verdict.image_id},
                   {"revision", verdict.revision},
                   {"classification_accepted", verdict.classification_accepted},
                   {"justification_accepted", verdict.justification_accepted},
                   {"feedback_case", result.feedback_case},
                   {"retrained", result.retrained},
                   {"new_revision", result.new_revision}};

  std::string appended;
  for (std::size_t i = current->events().size(); i < next->events().size(); ++i) {
    appended += encode_event(next->events()[i]);
  }
  append_text(config_.data_dir / "kb.log", appended);
  append_text(config_.data_dir / "history.jsonl", entry.dump() + "\n");
  {
    std::lock_guard lock(snapshot_mutex_);
    history_.push_back(entry.dump());
    kb_ = std::move(next);
  }
  return json_response(200, response);
}

void TriageService::mount(httplib::Server& server) {
  auto reply = [](httplib::Response& res, const HttpResponse& r) {
    res.status = r.status;
    if (!r.body.empty()) res.set_content(r.body, "application/json");
  };
  server.Get("/api/items/next", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, next_item());
  });
  server.Get(R"(/api/items/([A-Za-z0-9_]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, item(req.matches[1]));
  });
  server.Post("/api/feedback", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, feedback(req.body));
  });
  server.Get("/api/theory", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, theory()); });
  server.Get("/api/history", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, history());
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string message = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(json{{"error", message}}.dump(), "application/json");
  });
  if (config_.static_dir && fs::is_directory(*config_.static_dir)) {
    server.set_mount_point("/", config_.static_dir->string());
  } else {
    server.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("UI bundle not installed; the JSON API is under /api/.\n", "text/plain");
    });
  }
}

}  // namespace dtriage
