#include "dtriage/knowledge_base.hpp"

#include <charconv>
#include <cstdio>

#include <zlib.h>

#include "dtriage/errors.hpp"

namespace dtriage {
namespace {

std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\t':
        out += "\\t";
        break;
      case '\r':
        out += "\\r";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string unescape(std::string_view s, std::size_t record) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out += s[i];
      continue;
    }
    if (++i == s.size()) throw LogError("dangling escape", record);
    switch (s[i]) {
      case '\\':
        out += '\\';
        break;
      case 'n':
        out += '\n';
        break;
      case 't':
        out += '\t';
        break;
      case 'r':
        out += '\r';
        break;
      default:
        throw LogError(std::string("unknown escape \\") + s[i], record);
    }
  }
  return out;
}

std::uint32_t checksum(std::string_view s) {
  return static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size())));
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(std::string_view s, std::size_t record, const char* what) {
  T value{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw LogError(std::string("bad ") + what + " '" + std::string(s) + "'", record);
  }
  return value;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

Event decode_event(std::string_view line, std::size_t record) {
  const auto last_tab = line.rfind('\t');
  if (last_tab == std::string_view::npos) throw LogError("record has no checksum", record);
  const std::string_view body = line.substr(0, last_tab);
  const std::string_view crc_text = line.substr(last_tab + 1);
  std::uint32_t crc = 0;
  const auto res = std::from_chars(crc_text.data(), crc_text.data() + crc_text.size(), crc, 16);
  if (res.ec != std::errc{} || res.ptr != crc_text.data() + crc_text.size() || crc != checksum(body)) {
    throw LogError("checksum mismatch", record);
  }

  const auto fields = split_tabs(body);
  if (fields.size() < 2) throw LogError("record has too few fields", record);
  Event e;
  e.revision = parse_number<std::uint64_t>(fields[0], record, "revision");
  auto need = [&](std::size_t n) {
    if (fields.size() != n) throw LogError("wrong field count for " + std::string(fields[1]), record);
  };
  auto facts = [&](std::string_view f) {
    try {
      return parse_facts(unescape(f, record));
    } catch (const ParseError& err) {
      throw LogError(std::string("bad fact payload: ") + err.what(), record);
    }
  };
  const std::string_view kind = fields[1];
  if (kind == to_string(EventKind::background_set)) {
    need(3);
    e.kind = EventKind::background_set;
    e.payload = facts(fields[2]);
  } else if (kind == to_string(EventKind::example_added)) {
    need(6);
    e.kind = EventKind::example_added;
    SymbolicExample ex;
    ex.image_id = unescape(fields[2], record);
    try {
      ex.label = parse_label(fields[3]);
      ex.provenance = parse_provenance(fields[4]);
    } catch (const ConfigError& err) {
      throw LogError(err.what(), record);
    }
    ex.facts = facts(fields[5]);
    e.payload = std::move(ex);
  } else if (kind == to_string(EventKind::theory_replaced)) {
    need(8);
    e.kind = EventKind::theory_replaced;
    Theory t;
    try {
      t = parse_theory(unescape(fields[2], record));
    } catch (const ParseError& err) {
      throw LogError(std::string("bad theory payload: ") + err.what(), record);
    }
    t.train_stats.positives_covered = parse_number<int>(fields[3], record, "count");
    t.train_stats.negatives_covered = parse_number<int>(fields[4], record, "count");
    t.train_stats.positives_total = parse_number<int>(fields[5], record, "count");
    t.train_stats.negatives_total = parse_number<int>(fields[6], record, "count");
    t.train_stats.accuracy = parse_number<double>(fields[7], record, "accuracy");
    e.payload = std::move(t);
  } else if (kind == to_string(EventKind::gap_recorded)) {
    need(4);
    e.kind = EventKind::gap_recorded;
    e.payload = CoverageGap{unescape(fields[2], record), parse_number<std::size_t>(fields[3], record, "clause index")};
  } else {
    throw LogError("unknown event kind '" + std::string(kind) + "'", record);
  }
  return e;
}

}  // namespace

std::string_view to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::background_set:
      return "background_set";
    case EventKind::example_added:
      return "example_added";
    case EventKind::theory_replaced:
      return "theory_replaced";
    case EventKind::gap_recorded:
      return "gap_recorded";
  }
  return "?";
}

void KnowledgeBase::commit(EventKind kind, decltype(Event::payload) payload) {
  apply(Event{revision_ + 1, kind, std::move(payload)});
}

void KnowledgeBase::set_background(std::vector<Atom> background) {
  for (const Atom& a : background) {
    if (!a.is_ground()) throw PreconditionError("background fact " + format_atom(a) + " is not ground");
  }
  commit(EventKind::background_set, std::move(background));
}

void KnowledgeBase::add_example(SymbolicExample example) {
  validate_example(example);
  commit(EventKind::example_added, std::move(example));
}

void KnowledgeBase::replace_theory(Theory theory) { commit(EventKind::theory_replaced, std::move(theory)); }

void KnowledgeBase::record_gap(CoverageGap gap) { commit(EventKind::gap_recorded, std::move(gap)); }

void KnowledgeBase::apply(const Event& event) {
  if (event.revision != revision_ + 1) {
    throw PreconditionError("event revision " + std::to_string(event.revision) + " does not follow " +
                            std::to_string(revision_));
  }
  switch (event.kind) {
    case EventKind::background_set:
      background_ = std::get<std::vector<Atom>>(event.payload);
      break;
    case EventKind::example_added:
      examples_.push_back(std::get<SymbolicExample>(event.payload));
      break;
    case EventKind::theory_replaced:
      theory_ = std::get<Theory>(event.payload);
      break;
    case EventKind::gap_recorded:
      gaps_.push_back(std::get<CoverageGap>(event.payload));
      break;
  }
  revision_ = event.revision;
  events_.push_back(event);
}

const SymbolicExample* KnowledgeBase::find_example(std::string_view image_id) const {
  for (const auto& ex : examples_) {
    if (ex.image_id == image_id && ex.provenance != Provenance::dummy) return &ex;
  }
  return nullptr;
}

std::vector<SymbolicExample> KnowledgeBase::labeled_examples() const {
  std::vector<SymbolicExample> out;
  for (const auto& ex : examples_) {
    if (ex.label != Label::unlabeled) out.push_back(ex);
  }
  return out;
}

std::string encode_event(const Event& event) {
  std::string line = std::to_string(event.revision) + "\t" + std::string(to_string(event.kind));
  auto field = [&line](std::string_view f) {
    line += '\t';
    line += escape(f);
  };
  switch (event.kind) {
    case EventKind::background_set:
      field(emit_atoms(std::get<std::vector<Atom>>(event.payload)));
      break;
    case EventKind::example_added: {
      const auto& ex = std::get<SymbolicExample>(event.payload);
      field(ex.image_id);
      field(to_string(ex.label));
      field(to_string(ex.provenance));
      field(emit_facts(ex));
      break;
    }
    case EventKind::theory_replaced: {
      const auto& t = std::get<Theory>(event.payload);
      field(format_theory(t));
      field(std::to_string(t.train_stats.positives_covered));
      field(std::to_string(t.train_stats.negatives_covered));
      field(std::to_string(t.train_stats.positives_total));
      field(std::to_string(t.train_stats.negatives_total));
      field(format_double(t.train_stats.accuracy));
      break;
    }
    case EventKind::gap_recorded: {
      const auto& g = std::get<CoverageGap>(event.payload);
      field(g.image_id);
      field(std::to_string(g.clause_index));
      break;
    }
  }
  char crc[16];
  std::snprintf(crc, sizeof crc, "%08x", checksum(line));
  return line + "\t" + crc + "\n";
}

std::string save_kb(const KnowledgeBase& kb) {
  std::string out;
  for (const Event& e : kb.events()) out += encode_event(e);
  return out;
}

KnowledgeBase load_kb(std::string_view bytes) {
  KnowledgeBase kb;
  std::size_t start = 0;
  std::size_t record = 0;
  while (start < bytes.size()) {
    const auto nl = bytes.find('\n', start);
    if (nl == std::string_view::npos) throw LogError("truncated record (no line terminator)", record);
    const Event e = decode_event(bytes.substr(start, nl - start), record);
    if (e.revision != kb.revision() + 1) {
      throw LogError("revision " + std::to_string(e.revision) + " out of order", record);
    }
    if (e.kind == EventKind::example_added) {
      try {
        validate_example(std::get<SymbolicExample>(e.payload));
      } catch (const PreconditionError& err) {
        throw LogError(err.what(), record);
      }
    }
    kb.apply(e);
    start = nl + 1;
    ++record;
  }
  return kb;
}

}  // namespace dtriage
