#include "ppa/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ppa/text.hpp"

namespace ppa::corpus {

namespace fs = std::filesystem;

std::vector<Segment> segment_lines(std::string_view raw_text) {
  const std::u32string cps = text::decode(raw_text);
  std::vector<Segment> out;
  std::size_t line_start = 0;
  for (std::size_t i = 0; i <= cps.size(); ++i) {
    if (i < cps.size() && cps[i] != U'\n') continue;
    std::size_t b = line_start;
    std::size_t e = i;
    while (b < e && text::is_space(cps[b])) ++b;
    while (e > b && text::is_space(cps[e - 1])) --e;
    if (b < e) {
      Segment seg;
      seg.index = out.size();
      seg.char_start = b;
      seg.char_end = e;
      seg.text = text::encode(std::u32string_view(cps).substr(b, e - b));
      out.push_back(std::move(seg));
    }
    line_start = i + 1;
  }
  return out;
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UnreadableFileError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw UnreadableFileError("read failed for " + path.string());
  std::string data = ss.str();
  if (data.find('\0') != std::string::npos) throw NonTextError(path.string() + " contains NUL bytes");
  if (!text::is_valid_utf8(data)) throw NonTextError(path.string() + " is not valid UTF-8");
  return data;
}

PolicyDocument make_document(std::string raw_text, std::string service_id, std::string source_uri) {
  PolicyDocument doc;
  doc.service_id = std::move(service_id);
  doc.source_uri = std::move(source_uri);
  doc.raw_text = std::move(raw_text);
  doc.segments = segment_lines(doc.raw_text);
  return doc;
}

PolicyDocument load_policy(const fs::path& path, const std::string& service_id) {
  return make_document(read_text_file(path), service_id, "file:" + path.filename().string());
}

// ---------------------------------------------------------------------------

const GoldEntity* GoldAnnotationSet::entity(std::string_view id) const {
  for (const auto& e : entities)
    if (e.id == id) return &e;
  return nullptr;
}

const GoldEvent* GoldAnnotationSet::event(std::string_view id) const {
  for (const auto& e : events)
    if (e.id == id) return &e;
  return nullptr;
}

namespace {

std::string join(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += ", ";
    out += id;
  }
  return out;
}

bool parse_size(std::string_view s, std::size_t& out) {
  if (s.empty()) return false;
  std::size_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<std::size_t>(c - '0');
  }
  out = v;
  return true;
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool is_prefixed_dpv(std::string_view s) {
  for (std::string_view p : {"dpv:", "pd:", "dpv-pd:", "dpv-owl:", "eu-gdpr:"})
    if (text::starts_with_ci(s, p) && s.size() > p.size()) return true;
  return s.find("w3id.org/dpv") != std::string_view::npos;
}

// Strip trailing digits that brat appends to repeated role names (data2 -> data).
std::string base_role(std::string role) {
  while (!role.empty() && role.back() >= '0' && role.back() <= '9') role.pop_back();
  return role;
}

}  // namespace

bool looks_like_dpv_term(std::string_view s) {
  s = text::trim(s);
  if (s.empty()) return false;
  if (is_prefixed_dpv(s)) return s.find(' ') == std::string_view::npos;
  if (!(s.front() >= 'A' && s.front() <= 'Z')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
  });
}

DanglingReferenceError::DanglingReferenceError(std::vector<std::string> ids)
    : BratError("dangling brat reference(s): " + join(ids)), ids_(std::move(ids)) {}

AlignmentError::AlignmentError(std::vector<std::string> ids)
    : CorpusError("annotation(s) start outside every segment: " + join(ids)), ids_(std::move(ids)) {}

GoldAnnotationSet parse_brat_text(std::string_view doc_text, std::string_view ann_text, std::string doc_id,
                                  const BratOptions& options) {
  GoldAnnotationSet gold;
  gold.doc_id = std::move(doc_id);
  const std::u32string doc_cps = text::decode(doc_text);

  struct PendingAttr {
    std::string name, target, value;
    std::size_t line;
  };
  struct PendingNote {
    std::string target, note;
    std::size_t line;
  };
  std::vector<PendingAttr> attrs;
  std::vector<PendingNote> notes;
  std::vector<PendingNote> norms;  // N lines: target + external id

  std::size_t line_no = 0;
  std::istringstream in{std::string(ann_text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, '\t');
    const std::string& id = fields[0];
    const char kind = id.empty() ? '\0' : id[0];
    auto malformed = [&](const std::string& why) { return MalformedLineError(line_no, line, why); };

    switch (kind) {
      case 'T': {
        if (fields.size() < 3) throw malformed("expected 3 tab-separated fields");
        const auto sp = fields[1].find(' ');
        if (sp == std::string::npos) throw malformed("missing offsets");
        GoldEntity ent;
        ent.id = id;
        ent.type = fields[1].substr(0, sp);
        for (const auto& frag : text::split(fields[1].substr(sp + 1), ';')) {
          const auto parts = split_ws(frag);
          Fragment f;
          if (parts.size() != 2 || !parse_size(parts[0], f.start) || !parse_size(parts[1], f.end))
            throw malformed("bad offset pair '" + frag + "'");
          if (f.start >= f.end) throw malformed("empty or inverted span");
          if (f.end > doc_cps.size()) throw malformed("span beyond end of document");
          ent.fragments.push_back(f);
        }
        // Surface text may itself contain tabs; rejoin the remainder.
        ent.text = fields[2];
        for (std::size_t i = 3; i < fields.size(); ++i) ent.text += "\t" + fields[i];
        ent.start = ent.fragments.front().start;
        ent.end = ent.fragments.front().end;
        for (const auto& f : ent.fragments) {
          ent.start = std::min(ent.start, f.start);
          ent.end = std::max(ent.end, f.end);
        }
        if (options.verify_surface_text) {
          std::u32string expected;
          for (std::size_t i = 0; i < ent.fragments.size(); ++i) {
            if (i) expected.push_back(U' ');
            expected += std::u32string_view(doc_cps).substr(ent.fragments[i].start,
                                                            ent.fragments[i].end - ent.fragments[i].start);
          }
          for (auto& c : expected)
            if (c == U'\n' || c == U'\r') c = U' ';
          if (text::encode(expected) != ent.text)
            throw malformed("surface text does not match document text '" + text::encode(expected) + "'");
        }
        gold.entities.push_back(std::move(ent));
        break;
      }
      case 'E': {
        if (fields.size() < 2) throw malformed("expected 2 tab-separated fields");
        const auto parts = split_ws(fields[1]);
        if (parts.empty()) throw malformed("empty event definition");
        GoldEvent ev;
        ev.id = id;
        for (std::size_t i = 0; i < parts.size(); ++i) {
          const auto colon = parts[i].rfind(':');
          if (colon == std::string::npos || colon == 0 || colon + 1 == parts[i].size())
            throw malformed("bad role '" + parts[i] + "'");
          std::string label = parts[i].substr(0, colon);
          std::string target = parts[i].substr(colon + 1);
          if (i == 0) {
            ev.type = std::move(label);
            ev.trigger_id = std::move(target);
          } else {
            ev.roles.emplace_back(base_role(std::move(label)), std::move(target));
          }
        }
        gold.events.push_back(std::move(ev));
        break;
      }
      case 'R': {
        if (fields.size() < 2) throw malformed("expected 2 tab-separated fields");
        const auto parts = split_ws(fields[1]);
        if (parts.size() != 3) throw malformed("relation needs a label and two arguments");
        GoldRelation rel;
        rel.id = id;
        rel.label = parts[0];
        for (int i = 1; i <= 2; ++i) {
          const auto colon = parts[i].find(':');
          if (colon == std::string::npos) throw malformed("bad relation argument '" + parts[i] + "'");
          (i == 1 ? rel.arg1 : rel.arg2) = parts[i].substr(colon + 1);
        }
        gold.relations.push_back(std::move(rel));
        break;
      }
      case 'A':
      case 'M': {
        if (fields.size() < 2) throw malformed("expected 2 tab-separated fields");
        const auto parts = split_ws(fields[1]);
        if (parts.size() < 2 || parts.size() > 3) throw malformed("attribute needs name, target, optional value");
        attrs.push_back({parts[0], parts[1], parts.size() == 3 ? parts[2] : std::string(), line_no});
        break;
      }
      case 'N': {
        if (fields.size() < 2) throw malformed("expected 2 tab-separated fields");
        const auto parts = split_ws(fields[1]);
        if (parts.size() != 3) throw malformed("normalization needs type, target, reference");
        norms.push_back({parts[1], parts[2], line_no});
        break;
      }
      case '#': {
        if (fields.size() < 2) throw malformed("expected 2 tab-separated fields");
        const auto parts = split_ws(fields[1]);
        if (parts.size() < 2) throw malformed("note needs type and target");
        notes.push_back({parts[1], fields.size() > 2 ? fields[2] : std::string(), line_no});
        break;
      }
      case '*':
        break;  // equivalence groups carry nothing we use
      default:
        throw malformed("unknown annotation id prefix");
    }
  }

  // Reference checks.
  std::set<std::string> entity_ids, event_ids;
  for (const auto& e : gold.entities) entity_ids.insert(e.id);
  for (const auto& e : gold.events) event_ids.insert(e.id);
  std::vector<std::string> dangling;
  auto check = [&](const std::string& ref, bool allow_event) {
    if (entity_ids.count(ref) || (allow_event && event_ids.count(ref))) return;
    if (std::find(dangling.begin(), dangling.end(), ref) == dangling.end()) dangling.push_back(ref);
  };
  for (const auto& ev : gold.events) {
    check(ev.trigger_id, false);
    for (const auto& [role, target] : ev.roles) check(target, true);
  }
  for (const auto& r : gold.relations) {
    check(r.arg1, true);
    check(r.arg2, true);
  }
  for (const auto& a : attrs) check(a.target, true);
  for (const auto& n : notes) check(n.target, true);
  for (const auto& n : norms) check(n.target, true);
  if (!dangling.empty()) throw DanglingReferenceError(std::move(dangling));

  auto find_entity = [&](const std::string& id) -> GoldEntity* {
    for (auto& e : gold.entities)
      if (e.id == id) return &e;
    return nullptr;
  };
  for (const auto& a : attrs) {
    GoldEntity* ent = find_entity(a.target);
    if (!ent) continue;
    ent->attributes[a.name] = a.value;
    if (ent->dpv_term || a.value.empty()) continue;
    if (options.grounding_attributes.count(text::normalize_label(a.name)) || is_prefixed_dpv(a.value))
      ent->dpv_term = a.value;
  }
  for (const auto& n : norms) {
    GoldEntity* ent = find_entity(n.target);
    if (ent && !ent->dpv_term && is_prefixed_dpv(n.note)) ent->dpv_term = n.note;
  }
  for (const auto& n : notes) {
    GoldEntity* ent = find_entity(n.target);
    if (!ent) continue;
    ent->notes.push_back(n.note);
    if (!ent->dpv_term && looks_like_dpv_term(n.note)) ent->dpv_term = std::string(text::trim(n.note));
  }
  return gold;
}

GoldAnnotationSet parse_brat(const fs::path& text_file, const fs::path& ann_file, const BratOptions& options) {
  const std::string doc = read_text_file(text_file);
  const std::string ann = read_text_file(ann_file);
  return parse_brat_text(doc, ann, text_file.stem().string(), options);
}

std::string serialize_entity_lines(const GoldAnnotationSet& gold) {
  std::string out;
  for (const auto& e : gold.entities) {
    out += e.id + "\t" + e.type + " ";
    for (std::size_t i = 0; i < e.fragments.size(); ++i) {
      if (i) out += ";";
      out += std::to_string(e.fragments[i].start) + " " + std::to_string(e.fragments[i].end);
    }
    out += "\t" + e.text + "\n";
  }
  return out;
}

BratConfig parse_brat_config(std::string_view conf_text) {
  BratConfig cfg;
  std::set<std::string>* section = nullptr;
  std::istringstream in{std::string(conf_text)};
  std::string line;
  while (std::getline(in, line)) {
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t.front() == '[') {
      const std::string name = text::to_lower_ascii(t);
      if (name == "[entities]") section = &cfg.entities;
      else if (name == "[events]") section = &cfg.events;
      else if (name == "[relations]") section = &cfg.relations;
      else if (name == "[attributes]") section = &cfg.attributes;
      else section = nullptr;
      continue;
    }
    if (!section) continue;
    auto end = t.find_first_of(" \t");
    std::string label(t.substr(0, end));
    if (!label.empty() && label.front() == '!') label.erase(0, 1);
    if (label.empty() || label.front() == '<') continue;  // macros such as <OVERLAP>
    section->insert(label);
  }
  return cfg;
}

BratConfig load_brat_config(const fs::path& path) { return parse_brat_config(read_text_file(path)); }

std::vector<std::string> validate_labels(const GoldAnnotationSet& gold, const BratConfig& config) {
  std::vector<std::string> problems;
  std::set<std::string> trigger_ids;
  for (const auto& ev : gold.events) {
    trigger_ids.insert(ev.trigger_id);
    if (!config.events.count(ev.type)) problems.push_back(ev.id + ": unknown event type '" + ev.type + "'");
  }
  for (const auto& e : gold.entities) {
    if (!config.entities.count(e.type) && !(trigger_ids.count(e.id) && config.events.count(e.type)))
      problems.push_back(e.id + ": unknown entity type '" + e.type + "'");
    for (const auto& [name, value] : e.attributes)
      if (!config.attributes.count(name)) problems.push_back(e.id + ": unknown attribute '" + name + "'");
  }
  for (const auto& r : gold.relations)
    if (!config.relations.count(r.label)) problems.push_back(r.id + ": unknown relation '" + r.label + "'");
  return problems;
}

// ---------------------------------------------------------------------------

std::optional<std::size_t> segment_at(const PolicyDocument& doc, std::size_t offset) {
  auto it = std::upper_bound(doc.segments.begin(), doc.segments.end(), offset,
                             [](std::size_t off, const Segment& s) { return off < s.char_start; });
  if (it == doc.segments.begin()) return std::nullopt;
  --it;
  if (offset < it->char_end) return it->index;
  return std::nullopt;
}

std::map<std::size_t, GoldSlice> align_gold(const GoldAnnotationSet& gold, const PolicyDocument& doc) {
  std::map<std::size_t, GoldSlice> out;
  std::vector<std::string> bad;
  std::map<std::string, std::size_t> placed;
  for (const auto& e : gold.entities) {
    auto seg = segment_at(doc, e.start);
    if (!seg) {
      bad.push_back(e.id);
      continue;
    }
    AlignedEntity ae{e, e.end > doc.segments[*seg].char_end};
    placed[e.id] = *seg;
    out[*seg].entities.push_back(std::move(ae));
  }
  for (const auto& ev : gold.events) {
    auto it = placed.find(ev.trigger_id);
    if (it == placed.end()) {
      bad.push_back(ev.id);
      continue;
    }
    placed[ev.id] = it->second;
    out[it->second].events.push_back(ev);
  }
  for (const auto& r : gold.relations) {
    auto it = placed.find(r.arg1);
    if (it == placed.end()) {
      bad.push_back(r.id);
      continue;
    }
    out[it->second].relations.push_back(r);
  }
  if (!bad.empty()) throw AlignmentError(std::move(bad));
  return out;
}

std::vector<GoldDocument> load_gold_corpus(const fs::path& dir, std::vector<std::string>* warnings,
                                           const BratOptions& options) {
  if (!fs::is_directory(dir)) throw UnreadableFileError(dir.string() + " is not a directory");
  std::optional<BratConfig> conf;
  if (fs::exists(dir / "annotation.conf")) conf = load_brat_config(dir / "annotation.conf");
  std::vector<fs::path> anns;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".ann") anns.push_back(entry.path());
  std::sort(anns.begin(), anns.end());
  std::vector<GoldDocument> out;
  for (const auto& ann : anns) {
    fs::path txt = ann;
    txt.replace_extension(".txt");
    if (!fs::exists(txt)) {
      if (warnings) warnings->push_back(ann.string() + ": no matching .txt file");
      continue;
    }
    GoldDocument g;
    g.doc = make_document(read_text_file(txt), txt.stem().string(), "file:" + txt.filename().string());
    g.gold = parse_brat(txt, ann, options);
    if (conf && warnings)
      for (auto& p : validate_labels(g.gold, *conf)) warnings->push_back(g.gold.doc_id + ": " + p);
    g.slices = align_gold(g.gold, g.doc);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace ppa::corpus
