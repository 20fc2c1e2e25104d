#include "ppa/extraction.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "ppa/parallel.hpp"
#include "ppa/text.hpp"

namespace ppa::extraction {

using nlohmann::json;

const EntitySpan* SegmentExtraction::span(std::string_view local_id) const {
  for (const auto& s : spans)
    if (s.local_id == local_id) return &s;
  return nullptr;
}

prompt::PromptEntity to_prompt_entity(const EntitySpan& span) {
  return prompt::PromptEntity{span.local_id, span.kind, span.subtype, span.text};
}

bool occurs_in(std::string_view needle, std::string_view segment) {
  if (needle.empty()) return false;
  if (segment.find(needle) != std::string_view::npos) return true;
  const auto n = text::normalize_for_match(needle);
  return !n.empty() && text::normalize_for_match(segment).find(n) != std::string::npos;
}

namespace {

json span_json(const EntitySpan& s) {
  json j{{"id", s.local_id}, {"kind", span_kind_name(s.kind)}, {"text", s.text}};
  if (!s.subtype.empty()) j["subtype"] = s.subtype;
  if (s.grounded_term) j["grounded_term"] = *s.grounded_term;
  if (s.unresolved_term) j["unresolved_term"] = *s.unresolved_term;
  if (s.non_leaf) j["non_leaf"] = true;
  if (s.non_verbatim) j["non_verbatim"] = true;
  return j;
}

json call_json(const TaskCall& c) {
  json j{{"task", task_name(c.task)},
         {"key", c.key},
         {"raw", c.raw},
         {"from_cache", c.from_cache},
         {"attempts", c.attempts},
         {"repairs", c.repairs}};
  if (c.error) j["error"] = *c.error;
  return j;
}

json event(std::string_view kind, std::size_t segment, std::string_view reason) {
  return json{{"event", kind}, {"segment", segment}, {"reason", reason}};
}

// Runs one task and captures everything for audit. parsed is null on failure.
struct Attempt {
  TaskCall call;
  json parsed;
};

Attempt attempt(TaskKind task, const corpus::Segment& segment, const std::vector<prompt::PromptEntity>& extras,
                backend::Backend& backend, const prompt::PromptOptions& popts, const ExtractOptions& options) {
  Attempt a;
  a.call.task = task;
  const auto messages = prompt::build_prompt(task, segment.text, extras, popts);
  try {
    auto res = backend.complete(task, messages);
    a.call.key = res.key;
    a.call.raw = res.raw;
    a.call.from_cache = res.from_cache;
    a.call.attempts = res.attempts;
  } catch (const backend::ReplayMissError& e) {
    a.call.key = e.digest();
    a.call.error = e.what();
    return a;
  } catch (const std::exception& e) {
    a.call.key = backend::cache_key(backend.config().model_name, task_name(task), messages.system, messages.user);
    a.call.error = e.what();
    return a;
  }
  try {
    auto r = repair::repair_and_parse(a.call.raw, repair::shape_for(task), options.refusals);
    a.parsed = std::move(r.value);
    a.call.repairs = std::move(r.repairs);
  } catch (const repair::OutputParseError& e) {
    a.call.error = e.what();
  }
  return a;
}

SpanKind kind_for(TaskKind t) {
  switch (t) {
    case TaskKind::PurposeRecognition: return SpanKind::Purpose;
    case TaskKind::PartyRecognition: return SpanKind::Party;
    case TaskKind::ActionRecognition: return SpanKind::Action;
    default: return SpanKind::Data;
  }
}

// Recognized spans of one kind, deduplicated by text, in response order.
std::vector<EntitySpan> spans_from(const json& parsed, TaskKind task, const corpus::Segment& segment,
                                   std::vector<json>& events) {
  std::vector<EntitySpan> out;
  std::set<std::pair<std::string, std::string>> seen;
  const SpanKind kind = kind_for(task);
  for (const auto& item : parsed) {
    EntitySpan s;
    s.kind = kind;
    s.segment_index = segment.index;
    s.text = std::string(text::trim(item.value("text", "")));
    if (s.text.empty()) continue;
    const std::string raw_sub = item.value("subtype", "");
    if (kind == SpanKind::Party || kind == SpanKind::Action) {
      auto sub = canonical_subtype(kind, raw_sub);
      if (sub) {
        s.subtype = *sub;
      } else if (kind == SpanKind::Action) {
        auto e = event("drop", segment.index, "action without a recognizable subtype");
        e["task"] = task_name(task);
        e["text"] = s.text;
        e["subtype"] = raw_sub;
        events.push_back(std::move(e));
        continue;
      }
    }
    if (!seen.insert({s.text, s.subtype}).second) continue;
    s.non_verbatim = !occurs_in(s.text, segment.text);
    if (s.non_verbatim) {
      auto e = event("flag", segment.index, "span text not found in segment");
      e["task"] = task_name(task);
      e["text"] = s.text;
      events.push_back(std::move(e));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string normalize_role(std::string_view raw) {
  std::string r;
  for (char c : text::trim(raw)) {
    if (c == '-' || c == ' ') r += '_';
    else r += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return r;
}

std::optional<SpanKind> role_target(std::string_view role) {
  if (role == role::kHasData) return SpanKind::Data;
  if (role == role::kHasPurpose) return SpanKind::Purpose;
  if (role == role::kPerformedBy || role == role::kDataProvidedBy || role == role::kDataSharedWith)
    return SpanKind::Party;
  return std::nullopt;
}

}  // namespace

ClassificationOutcome classify_entities(taxonomy::TermKind kind, std::vector<EntitySpan> spans,
                                        const corpus::Segment& segment, backend::Backend& backend,
                                        const taxonomy::Taxonomy& taxonomy, const ExtractOptions& options) {
  ClassificationOutcome out;
  const SpanKind span_kind = kind == taxonomy::TermKind::Data ? SpanKind::Data : SpanKind::Purpose;
  const TaskKind task =
      kind == taxonomy::TermKind::Data ? TaskKind::DataClassification : TaskKind::PurposeClassification;

  std::vector<prompt::PromptEntity> extras;
  std::set<std::string> listed;
  for (const auto& s : spans)
    if (s.kind == span_kind && listed.insert(s.text).second) extras.push_back(to_prompt_entity(s));
  if (extras.empty()) {
    out.spans = std::move(spans);
    return out;
  }

  prompt::PromptOptions popts;
  popts.roles = options.roles;
  if (options.vocabulary_in_prompt) popts.vocabulary = taxonomy.labels(kind);
  auto a = attempt(task, segment, extras, backend, popts, options);
  out.call = a.call;
  if (a.call.error) {
    out.spans = std::move(spans);
    return out;
  }

  // entity text -> predicted term, first prediction wins; exact text first,
  // then case-folded.
  std::vector<std::pair<std::string, std::string>> preds;
  for (const auto& item : a.parsed) preds.emplace_back(item.value("entity_text", ""), item.value("term", ""));
  auto lookup = [&](const std::string& t) -> std::optional<std::string> {
    for (const auto& [e, term] : preds)
      if (e == t) return term;
    const auto nt = text::normalize_for_match(t);
    for (const auto& [e, term] : preds)
      if (text::normalize_for_match(e) == nt) return term;
    return std::nullopt;
  };

  for (auto& s : spans) {
    if (s.kind != span_kind) continue;
    auto term = lookup(s.text);
    if (!term) {
      auto e = event("unclassified", segment.index, "no prediction for entity");
      e["task"] = task_name(task);
      e["text"] = s.text;
      out.events.push_back(std::move(e));
      continue;
    }
    try {
      const auto& node = taxonomy.resolve_term(*term, kind);
      s.grounded_term = node.iri;
      s.unresolved_term.reset();
      s.non_leaf = kind == taxonomy::TermKind::Purpose && !taxonomy.is_leaf(node);
    } catch (const taxonomy::UnresolvedTermError&) {
      s.unresolved_term = *term;
      auto e = event("unresolved", segment.index, "predicted term does not resolve in the taxonomy");
      e["task"] = task_name(task);
      e["text"] = s.text;
      e["term"] = *term;
      out.events.push_back(std::move(e));
    }
  }
  out.spans = std::move(spans);
  return out;
}

SegmentExtraction extract_segment(const corpus::Segment& segment, backend::Backend& backend,
                                  const taxonomy::Taxonomy& taxonomy, const ExtractOptions& options) {
  SegmentExtraction seg;
  seg.segment_index = segment.index;
  seg.text = segment.text;
  prompt::PromptOptions popts;
  popts.roles = options.roles;

  std::size_t failures = 0;
  std::size_t executed = 0;
  std::vector<EntitySpan> entities;
  std::vector<EntitySpan> actions;
  for (TaskKind t : {TaskKind::DataRecognition, TaskKind::PurposeRecognition, TaskKind::PartyRecognition,
                     TaskKind::ActionRecognition}) {
    auto a = attempt(t, segment, {}, backend, popts, options);
    ++executed;
    seg.calls.push_back(a.call);
    if (a.call.error) {
      ++failures;
      seg.errors.push_back(std::string(task_name(t)) + ": " + *a.call.error);
      continue;
    }
    auto spans = spans_from(a.parsed, t, segment, seg.events);
    auto& dst = t == TaskKind::ActionRecognition ? actions : entities;
    dst.insert(dst.end(), spans.begin(), spans.end());
  }
  for (std::size_t i = 0; i < entities.size(); ++i) entities[i].local_id = "e" + std::to_string(i);
  for (std::size_t i = 0; i < actions.size(); ++i) actions[i].local_id = "a" + std::to_string(i);
  seg.spans = std::move(entities);
  seg.spans.insert(seg.spans.end(), actions.begin(), actions.end());

  if (seg.spans.empty()) {
    seg.failed = failures == executed;
    if (!seg.failed) seg.events.push_back(event("skip", segment.index, "no entities or actions recognized"));
    return seg;
  }

  for (auto kind : {taxonomy::TermKind::Data, taxonomy::TermKind::Purpose}) {
    auto c = classify_entities(kind, std::move(seg.spans), segment, backend, taxonomy, options);
    seg.spans = std::move(c.spans);
    seg.events.insert(seg.events.end(), c.events.begin(), c.events.end());
    if (c.call) {
      ++executed;
      seg.calls.push_back(*c.call);
      if (c.call->error) {
        ++failures;
        seg.errors.push_back(std::string(task_name(c.call->task)) + ": " + *c.call->error);
      }
    }
  }

  const std::size_t n_actions = actions.size();
  if (n_actions == 0 || seg.spans.size() < 2) {
    seg.events.push_back(event("skip", segment.index,
                               n_actions == 0 ? "relation step skipped: no actions"
                                              : "relation step skipped: no span to relate"));
    seg.failed = failures == executed;
    return seg;
  }

  std::vector<prompt::PromptEntity> extras;
  for (const auto& s : seg.spans) extras.push_back(to_prompt_entity(s));
  auto a = attempt(TaskKind::RelationRecognition, segment, extras, backend, popts, options);
  ++executed;
  seg.calls.push_back(a.call);
  if (a.call.error) {
    ++failures;
    seg.errors.push_back(std::string(task_name(TaskKind::RelationRecognition)) + ": " + *a.call.error);
  } else {
    const std::set<std::string> roles(options.roles.begin(), options.roles.end());
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    for (const auto& item : a.parsed) {
      RelationTuple r{text::to_lower_ascii(text::trim(item.value("id1", ""))),
                      text::to_lower_ascii(text::trim(item.value("id2", ""))), normalize_role(item.value("type", ""))};
      auto drop = [&](std::string_view why) {
        auto e = event("drop", segment.index, why);
        e["task"] = task_name(TaskKind::RelationRecognition);
        e["tuple"] = json::array({r.subject_id, r.object_id, r.event_type});
        seg.events.push_back(std::move(e));
      };
      const EntitySpan* s1 = seg.span(r.subject_id);
      const EntitySpan* s2 = seg.span(r.object_id);
      if (!s1 || !s2) {
        drop("tuple references an id not defined in this segment");
        continue;
      }
      if (!roles.count(r.event_type)) {
        drop("event type not in the configured role list");
        continue;
      }
      // The action is always the subject.
      if (s1->kind != SpanKind::Action && s2->kind == SpanKind::Action) {
        std::swap(r.subject_id, r.object_id);
        std::swap(s1, s2);
      }
      if (s1->kind != SpanKind::Action || s2->kind == SpanKind::Action) {
        drop("tuple does not link an action to a non-action span");
        continue;
      }
      if (auto want = role_target(r.event_type); want && s2->kind != *want) {
        drop("event type does not fit the kind of the linked span");
        continue;
      }
      if (!seen.insert({r.subject_id, r.object_id, r.event_type}).second) continue;
      seg.relations.push_back(std::move(r));
    }
  }
  seg.failed = failures == executed;
  return seg;
}

namespace {

ExtractionResult run_document(const corpus::PolicyDocument& doc, backend::Backend& backend,
                              const taxonomy::Taxonomy& taxonomy, const ExtractOptions& options) {
  ExtractionResult res;
  res.service_id = doc.service_id;
  res.source_uri = doc.source_uri;
  res.segments.resize(doc.segments.size());
  const std::size_t n = doc.segments.size();
  auto work_on = [&](std::size_t i) {
    try {
      res.segments[i] = extract_segment(doc.segments[i], backend, taxonomy, options);
    } catch (const std::exception& e) {
      SegmentExtraction seg;
      seg.segment_index = doc.segments[i].index;
      seg.text = doc.segments[i].text;
      seg.failed = true;
      seg.errors.push_back(e.what());
      res.segments[i] = std::move(seg);
    }
  };
  parallel_for(n, options.jobs, work_on);
  res.failed = n > 0 && std::all_of(res.segments.begin(), res.segments.end(),
                                    [](const SegmentExtraction& s) { return s.failed; });
  return res;
}

}  // namespace

ExtractionResult extract_document(const corpus::PolicyDocument& doc, backend::Backend& backend,
                                  const taxonomy::Taxonomy& taxonomy, const ExtractOptions& options) {
  auto res = run_document(doc, backend, taxonomy, options);
  if (res.failed) {
    std::string first = res.segments.front().errors.empty() ? "" : ": " + res.segments.front().errors.front();
    throw ExtractionError("every segment of " + doc.service_id + " failed" + first);
  }
  return res;
}

ExtractionResult extract_document_nothrow(const corpus::PolicyDocument& doc, backend::Backend& backend,
                                          const taxonomy::Taxonomy& taxonomy, const ExtractOptions& options) {
  return run_document(doc, backend, taxonomy, options);
}

json ExtractionResult::to_json() const {
  json segs = json::array();
  for (const auto& s : segments) {
    json spans = json::array();
    for (const auto& sp : s.spans) spans.push_back(span_json(sp));
    json rels = json::array();
    for (const auto& r : s.relations) rels.push_back(json::array({r.subject_id, r.object_id, r.event_type}));
    json calls = json::array();
    for (const auto& c : s.calls) calls.push_back(call_json(c));
    segs.push_back(json{{"index", s.segment_index},
                        {"text", s.text},
                        {"failed", s.failed},
                        {"errors", s.errors},
                        {"spans", spans},
                        {"relations", rels},
                        {"responses", calls}});
  }
  return json{{"service_id", service_id}, {"source_uri", source_uri}, {"failed", failed}, {"segments", segs}};
}

std::vector<json> audit_records(const ExtractionResult& result) {
  std::vector<json> out;
  for (const auto& s : result.segments) {
    for (const auto& c : s.calls) {
      json j = call_json(c);
      j.erase("raw");
      j["event"] = "call";
      j["segment"] = s.segment_index;
      j["service_id"] = result.service_id;
      out.push_back(std::move(j));
    }
    for (auto e : s.events) {
      e["service_id"] = result.service_id;
      out.push_back(std::move(e));
    }
  }
  return out;
}

void write_audit_log(const ExtractionResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw ExtractionError("cannot write audit log " + path.string());
  for (const auto& r : audit_records(result)) out << r.dump() << '\n';
}

}  // namespace ppa::extraction
