#pragma once

// Knowledge base state as the fold of an append-only event log. Every
// mutation appends exactly one event and bumps the revision by one.
//
// Log format: one record per line, tab-separated
//   <revision> TAB <kind> TAB <field>... TAB <crc32 hex>
// where fields escape '\\', '\n', '\t' and '\r' and the checksum covers
// everything before its tab. Fact and theory payloads use the Prolog text
// format.

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dtriage/facts.hpp"
#include "dtriage/logic.hpp"

namespace dtriage {

struct CoverageGap {
  std::string image_id;
  std::size_t clause_index = 0;

  bool operator==(const CoverageGap&) const = default;
};

enum class EventKind { background_set, example_added, theory_replaced, gap_recorded };

std::string_view to_string(EventKind kind) noexcept;

struct Event {
  std::uint64_t revision = 0;  // revision after applying
  EventKind kind = EventKind::background_set;
  std::variant<std::vector<Atom>, SymbolicExample, Theory, CoverageGap> payload;

  bool operator==(const Event&) const = default;
};

class KnowledgeBase {
 public:
  const std::vector<SymbolicExample>& examples() const noexcept { return examples_; }
  const std::vector<Atom>& background() const noexcept { return background_; }
  const Theory& theory() const noexcept { return theory_; }
  const std::vector<CoverageGap>& coverage_gaps() const noexcept { return gaps_; }
  std::uint64_t revision() const noexcept { return revision_; }
  const std::vector<Event>& events() const noexcept { return events_; }

  void set_background(std::vector<Atom> background);
  void add_example(SymbolicExample example);  // validates the example
  void replace_theory(Theory theory);
  void record_gap(CoverageGap gap);

  // Replays one event; its revision must be revision() + 1.
  void apply(const Event& event);

  // First non-dummy example with this id, or nullptr.
  const SymbolicExample* find_example(std::string_view image_id) const;
  // Examples whose label is ok or defective.
  std::vector<SymbolicExample> labeled_examples() const;

  bool operator==(const KnowledgeBase&) const = default;

 private:
  void commit(EventKind kind, decltype(Event::payload) payload);

  std::vector<SymbolicExample> examples_;
  std::vector<Atom> background_;
  Theory theory_;
  std::vector<CoverageGap> gaps_;
  std::uint64_t revision_ = 0;
  std::vector<Event> events_;
};

// One log line including the trailing newline.
std::string encode_event(const Event& event);

std::string save_kb(const KnowledgeBase& kb);

// Throws LogError naming the failing record index (0-based) and the last
// valid one.
KnowledgeBase load_kb(std::string_view bytes);

}  // namespace dtriage
