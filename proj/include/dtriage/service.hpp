#pragma once

// Review service over a data directory:
//   masks/<id>.pgm   certainty masks (required)
//   images/<id>.pgm  photos shown next to the masks (optional)
//   labels.tsv       "id<TAB>ok|defective" for annotated images (optional)
//   kb.log           knowledge base event log, created on first start
//   history.jsonl    one line per accepted verdict
// Images without a label form the review queue in id order.
//
// Handlers are transport independent and thread safe: feedback is
// serialized by a writer lock, reads work on the last committed snapshot.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "dtriage/feedback.hpp"
#include "dtriage/knowledge_base.hpp"
#include "dtriage/review.hpp"
#include "dtriage/verbalizer.hpp"

namespace httplib {
class Server;
}

namespace dtriage {

struct ServiceConfig {
  std::filesystem::path data_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> learner_config;
  std::optional<std::filesystem::path> templates;
  std::optional<std::filesystem::path> static_dir;
  double cutoff = kDefaultCutoff;
  bool retrain_on_accept = false;

  // DTRIAGE_DATA_DIR, DTRIAGE_LISTEN ("host:port"), DTRIAGE_LEARNER_CONFIG,
  // DTRIAGE_TEMPLATES, DTRIAGE_STATIC_DIR, DTRIAGE_RETRAIN_ON_ACCEPT ("1").
  // Throws ConfigError for a malformed value.
  static ServiceConfig from_env(const std::function<const char*(const char*)>& lookup);
};

// Splits "host:port"; throws ConfigError.
std::pair<std::string, int> parse_listen_address(const std::string& text);

struct HttpResponse {
  int status = 200;
  std::string body;  // JSON, empty for 204
};

class TriageService {
 public:
  // Loads kb.log when present, otherwise builds the KB from masks/ and
  // labels.tsv, trains once and writes kb.log.
  explicit TriageService(ServiceConfig config);
  ~TriageService();

  HttpResponse next_item() const;
  HttpResponse item(const std::string& image_id) const;
  HttpResponse feedback(const std::string& request_body);
  HttpResponse theory() const;
  HttpResponse history() const;

  // Registers the API routes and, when configured, the static UI bundle.
  void mount(httplib::Server& server);

  std::shared_ptr<const KnowledgeBase> snapshot() const;
  const ServiceConfig& config() const noexcept { return config_; }

 private:
  struct Media;
  HttpResponse render(const KnowledgeBase& kb, const SymbolicExample& example) const;
  void publish(std::shared_ptr<const KnowledgeBase> kb);

  ServiceConfig config_;
  TemplateRegistry templates_;
  FeedbackPolicy policy_;
  std::unique_ptr<Media> media_;

  std::mutex writer_;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const KnowledgeBase> kb_;
  std::vector<std::string> history_;  // guarded by snapshot_mutex_
};

}  // namespace dtriage
