#include "ppa/eval.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "ppa/parallel.hpp"
#include "ppa/text.hpp"

namespace ppa::eval {

using nlohmann::json;

std::optional<Denominator> parse_denominator(std::string_view s) {
  const auto l = text::to_lower_ascii(text::trim(s));
  if (l == "max") return Denominator::Max;
  if (l == "gold") return Denominator::Gold;
  if (l == "mean" || l == "symmetric-mean") return Denominator::Mean;
  return std::nullopt;
}

std::string_view to_string(Denominator d) {
  switch (d) {
    case Denominator::Max: return "max";
    case Denominator::Gold: return "gold";
    case Denominator::Mean: return "mean";
  }
  return "?";
}

std::size_t lcs_length(std::u32string_view a, std::u32string_view b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  std::size_t best = 0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : 0;
      best = std::max(best, cur[j]);
    }
    std::swap(prev, cur);
  }
  return best;
}

namespace {

double ratio_of(const std::u32string& a, const std::u32string& b, Denominator d) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  const double l = static_cast<double>(lcs_length(a, b));
  switch (d) {
    case Denominator::Max: return l / static_cast<double>(std::max(a.size(), b.size()));
    case Denominator::Gold: return l / static_cast<double>(b.size());
    case Denominator::Mean: return 2.0 * l / static_cast<double>(a.size() + b.size());
  }
  return 0.0;
}

std::u32string norm(std::string_view s) { return text::normalize_for_match(text::decode(s)); }

}  // namespace

double lcs_ratio(std::string_view a, std::string_view b, Denominator d) { return ratio_of(norm(a), norm(b), d); }

namespace detail {

MatchOutcome match_with(const std::vector<std::string>& pred, const std::vector<std::string>& gold,
                        const MatchConfig& config, const std::vector<std::vector<bool>>& allowed) {
  MatchOutcome m;
  std::vector<std::u32string> p, g;
  for (const auto& s : pred) p.push_back(norm(s));
  for (const auto& s : gold) g.push_back(norm(s));
  std::vector<bool> pu(p.size()), gu(g.size());

  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j)
      if (!gu[j] && allowed[i][j] && p[i] == g[j]) {
        pu[i] = gu[j] = true;
        m.pairs.push_back({i, j, 1.0});
        break;
      }

  if (config.relaxed) {
    struct Cand {
      double r;
      std::size_t i, j;
    };
    std::vector<Cand> cands;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (pu[i]) continue;
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (gu[j] || !allowed[i][j]) continue;
        const double r = ratio_of(p[i], g[j], config.denominator);
        if (r >= config.threshold && r > 0.0) cands.push_back({r, i, j});
      }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.r != b.r) return a.r > b.r;
      return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    for (const auto& c : cands) {
      if (pu[c.i] || gu[c.j]) continue;
      pu[c.i] = gu[c.j] = true;
      m.pairs.push_back({c.i, c.j, std::min(1.0, c.r)});
    }
  }
  for (const auto& pr : m.pairs) m.tp += pr.credit;
  m.fp = static_cast<std::size_t>(std::count(pu.begin(), pu.end(), false));
  m.fn = static_cast<std::size_t>(std::count(gu.begin(), gu.end(), false));
  return m;
}

}  // namespace detail

MatchOutcome match_spans(const std::vector<std::string>& pred, const std::vector<std::string>& gold,
                         const MatchConfig& config) {
  std::vector<std::vector<bool>> allowed(pred.size(), std::vector<bool>(gold.size(), true));
  return detail::match_with(pred, gold, config, allowed);
}

PRF prf1(double tp, double fp, double fn) {
  PRF r;
  r.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  r.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  const double denom = 2.0 * tp + fp + fn;
  r.f1 = denom > 0 ? 2.0 * tp / denom : 0.0;
  return r;
}

double sample_f1(const MatchOutcome& m, std::size_t n_pred, std::size_t n_gold) {
  if (n_gold == 0) return n_pred == 0 ? 1.0 : 0.0;
  return prf1(m.tp, static_cast<double>(m.fp), static_cast<double>(m.fn)).f1;
}

Facets aggregate(const std::vector<ScoredSample>& samples) {
  Facets f;
  double all = 0, ne = 0, e = 0;
  for (const auto& s : samples) {
    all += s.f1;
    if (s.gold_empty) {
      e += s.f1;
      ++f.empty;
    } else {
      ne += s.f1;
      ++f.nonempty;
    }
  }
  f.samples = samples.size();
  if (f.samples) f.f1 = all / static_cast<double>(f.samples);
  if (f.nonempty) f.f1_n = ne / static_cast<double>(f.nonempty);
  if (f.empty) f.f1_e = e / static_cast<double>(f.empty);
  return f;
}

Facets macro_f1(const std::vector<Sample>& samples, const MatchConfig& config) {
  std::vector<ScoredSample> scored;
  for (const auto& s : samples) {
    const auto m = match_spans(s.pred, s.gold, config);
    scored.push_back({sample_f1(m, s.pred.size(), s.gold.size()), s.gold.empty()});
  }
  return aggregate(scored);
}

namespace {

std::optional<std::string> resolve_iri(const std::string& term, const taxonomy::Taxonomy& taxonomy,
                                       taxonomy::TermKind kind) {
  try {
    return taxonomy.resolve_term(term, kind).iri;
  } catch (const taxonomy::UnresolvedTermError&) {
    return std::nullopt;
  }
}

}  // namespace

MatchOutcome score_classification(const std::vector<ClassifiedEntity>& pred, const std::vector<ClassifiedEntity>& gold,
                                  const taxonomy::Taxonomy& taxonomy, taxonomy::TermKind kind,
                                  const MatchConfig& config) {
  std::vector<std::string> ptext, gtext;
  std::vector<std::optional<std::string>> piri, giri;
  for (const auto& p : pred) {
    ptext.push_back(p.entity);
    piri.push_back(resolve_iri(p.term, taxonomy, kind));
  }
  for (const auto& g : gold) {
    gtext.push_back(g.entity);
    auto r = resolve_iri(g.term, taxonomy, kind);
    giri.push_back(r ? r : std::optional<std::string>(taxonomy::expand_known_prefix(g.term)));
  }
  return match_spans_if(ptext, gtext, config,
                        [&](std::size_t i, std::size_t j) { return piri[i] && *piri[i] == *giri[j]; });
}

// ---------------------------------------------------------------------------

GoldSchema GoldSchema::defaults() {
  GoldSchema s;
  for (const char* l : {"data", "datatype", "dataentity", "datacollected", "datashared", "dataretained",
                        "dataprotected"})
    s.entity_kinds[l] = SpanKind::Data;
  for (const char* l : {"purpose", "purposeargument", "purposeentity"}) s.entity_kinds[l] = SpanKind::Purpose;
  for (const char* l : {"party", "firstparty", "thirdparty", "user", "datacollector", "dataprovider", "datareceiver",
                        "dataholder", "dataprotector", "datasharer"})
    s.entity_kinds[l] = SpanKind::Party;
  for (const char* l : {"action", "trigger", "practice"}) s.entity_kinds[l] = SpanKind::Action;
  s.party_subtypes = {{"firstparty", std::string(subtype::kFirstParty)},
                      {"thirdparty", std::string(subtype::kThirdParty)},
                      {"user", std::string(subtype::kUser)}};
  s.party_subtype_attributes = {"partytype", "type", "subtype"};
  const std::string cu(subtype::kCollectionUse), sh(subtype::kThirdPartySharing), st(subtype::kStorageRetention),
      se(subtype::kSecurityProtection);
  s.event_subtypes = {{"collectionuse", cu},
                      {"firstpartycollectionuse", cu},
                      {"thirdpartycollectionuse", cu},
                      {"datacollectionuse", cu},
                      {"datacollectionusage", cu},
                      {"thirdpartysharingdisclosure", sh},
                      {"datasharingdisclosure", sh},
                      {"sharingdisclosure", sh},
                      {"storageretentiondeletion", st},
                      {"datastorageretentiondeletion", st},
                      {"securityprotection", se},
                      {"datasecurityprotection", se}};
  const std::string hd(role::kHasData), hp(role::kHasPurpose), pb(role::kPerformedBy), dp(role::kDataProvidedBy),
      dw(role::kDataSharedWith);
  s.roles = {{"data", hd},          {"hasdata", hd},          {"datacollected", hd},  {"datashared", hd},
             {"dataretained", hd},  {"dataprotected", hd},    {"purpose", hp},        {"haspurpose", hp},
             {"purposeargument", hp}, {"datacollector", pb},  {"datasharer", pb},     {"dataholder", pb},
             {"dataprotector", pb}, {"performedby", pb},      {"actor", pb},          {"dataprovider", dp},
             {"dataprovidedby", dp}, {"providedby", dp},      {"datareceiver", dw},   {"recipient", dw},
             {"datasharedwith", dw}, {"sharedwith", dw}};
  return s;
}

GoldSchema GoldSchema::from_json(const json& j) {
  GoldSchema s = defaults();
  auto key = [](const std::string& k) { return text::normalize_label(k); };
  if (j.contains("entity_kinds"))
    for (const auto& [k, v] : j["entity_kinds"].items()) {
      auto kind = parse_span_kind(v.get<std::string>());
      if (!kind) throw std::invalid_argument("gold schema: unknown span kind " + v.get<std::string>());
      s.entity_kinds[key(k)] = *kind;
    }
  if (j.contains("party_subtypes"))
    for (const auto& [k, v] : j["party_subtypes"].items()) s.party_subtypes[key(k)] = v.get<std::string>();
  if (j.contains("party_subtype_attributes"))
    for (const auto& v : j["party_subtype_attributes"]) s.party_subtype_attributes.push_back(key(v.get<std::string>()));
  if (j.contains("event_subtypes"))
    for (const auto& [k, v] : j["event_subtypes"].items()) s.event_subtypes[key(k)] = v.get<std::string>();
  if (j.contains("roles"))
    for (const auto& [k, v] : j["roles"].items()) s.roles[key(k)] = v.get<std::string>();
  return s;
}

std::vector<GoldSegment> gold_segments(const corpus::GoldDocument& doc, const GoldSchema& schema) {
  std::vector<GoldSegment> out;
  for (const auto& seg : doc.doc.segments) {
    GoldSegment gs;
    gs.doc_id = doc.gold.doc_id;
    gs.segment_index = seg.index;
    gs.text = seg.text;
    auto it = doc.slices.find(seg.index);
    if (it == doc.slices.end()) {
      out.push_back(std::move(gs));
      continue;
    }
    const auto& slice = it->second;

    // Triggers take their subtype from the event type.
    std::map<std::string, std::string> trigger_subtype;
    for (const auto& ev : slice.events) {
      auto st = schema.event_subtypes.find(text::normalize_label(ev.type));
      if (st != schema.event_subtypes.end()) trigger_subtype[ev.trigger_id] = st->second;
    }

    std::vector<const corpus::GoldEntity*> ordered;
    for (const auto& ae : slice.entities) ordered.push_back(&ae.entity);
    std::stable_sort(ordered.begin(), ordered.end(), [](const corpus::GoldEntity* a, const corpus::GoldEntity* b) {
      return a->start != b->start ? a->start < b->start : a->id < b->id;
    });

    std::map<std::string, std::string> local;  // brat id -> local id
    for (const auto* e : ordered) {
      const std::string label = text::normalize_label(e->type);
      EntitySpan s;
      s.text = std::string(text::trim(e->text));
      s.segment_index = seg.index;
      auto trig = trigger_subtype.find(e->id);
      auto ev_label = schema.event_subtypes.find(label);
      if (trig != trigger_subtype.end() || ev_label != schema.event_subtypes.end()) {
        s.kind = SpanKind::Action;
        s.subtype = trig != trigger_subtype.end() ? trig->second : ev_label->second;
      } else {
        auto k = schema.entity_kinds.find(label);
        if (k == schema.entity_kinds.end()) continue;
        s.kind = k->second;
        if (s.kind == SpanKind::Action) continue;  // trigger without a mapped event
        if (s.kind == SpanKind::Party) {
          if (auto ps = schema.party_subtypes.find(label); ps != schema.party_subtypes.end()) s.subtype = ps->second;
          for (const auto& [name, value] : e->attributes)
            if (std::find(schema.party_subtype_attributes.begin(), schema.party_subtype_attributes.end(),
                          text::normalize_label(name)) != schema.party_subtype_attributes.end())
              if (auto c = canonical_subtype(SpanKind::Party, value)) s.subtype = *c;
        }
      }
      if (s.kind == SpanKind::Action) {
        s.local_id = "a" + std::to_string(gs.actions.size());
        local[e->id] = s.local_id;
        gs.actions.push_back(std::move(s));
      } else {
        s.local_id = "e" + std::to_string(gs.entities.size());
        local[e->id] = s.local_id;
        if (e->dpv_term && (s.kind == SpanKind::Data || s.kind == SpanKind::Purpose))
          gs.terms[s.local_id] = *e->dpv_term;
        gs.entities.push_back(std::move(s));
      }
    }

    std::set<std::tuple<std::string, std::string, std::string>> seen;
    auto add_rel = [&](const std::string& a, const std::string& b, const std::string& role_label) {
      auto r = schema.roles.find(text::normalize_label(role_label));
      auto la = local.find(a), lb = local.find(b);
      if (r == schema.roles.end() || la == local.end() || lb == local.end()) return;
      std::string s1 = la->second, s2 = lb->second;
      if (s1[0] != 'a' && s2[0] == 'a') std::swap(s1, s2);
      if (s1[0] != 'a' || s2[0] == 'a') return;
      if (seen.insert({s1, s2, r->second}).second) gs.relations.push_back({s1, s2, r->second});
    };
    for (const auto& ev : slice.events)
      for (const auto& [role_label, target] : ev.roles) {
        // Role targets may themselves be events; use their trigger.
        std::string t = target;
        if (const auto* inner = doc.gold.event(target)) t = inner->trigger_id;
        add_rel(ev.trigger_id, t, role_label);
      }
    for (const auto& rel : slice.relations) {
      auto a1 = rel.arg1, a2 = rel.arg2;
      if (const auto* e1 = doc.gold.event(a1)) a1 = e1->trigger_id;
      if (const auto* e2 = doc.gold.event(a2)) a2 = e2->trigger_id;
      add_rel(a1, a2, rel.label);
    }
    out.push_back(std::move(gs));
  }
  return out;
}

std::vector<GoldSegment> gold_segments(const std::vector<corpus::GoldDocument>& corpus, const GoldSchema& schema) {
  std::vector<GoldSegment> out;
  for (const auto& d : corpus) {
    auto v = gold_segments(d, schema);
    out.insert(out.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  }
  return out;
}

namespace {

std::optional<SpanKind> recognition_kind(TaskKind t) {
  switch (t) {
    case TaskKind::DataRecognition: return SpanKind::Data;
    case TaskKind::PurposeRecognition: return SpanKind::Purpose;
    case TaskKind::PartyRecognition: return SpanKind::Party;
    case TaskKind::ActionRecognition: return SpanKind::Action;
    default: return std::nullopt;
  }
}

bool is_classification(TaskKind t) {
  return t == TaskKind::DataClassification || t == TaskKind::PurposeClassification;
}

taxonomy::TermKind term_kind(TaskKind t) {
  return t == TaskKind::DataClassification ? taxonomy::TermKind::Data : taxonomy::TermKind::Purpose;
}

SpanKind class_span_kind(TaskKind t) {
  return t == TaskKind::DataClassification ? SpanKind::Data : SpanKind::Purpose;
}

// Distinct texts by normalized form, first occurrence kept.
std::vector<std::string> distinct(std::vector<std::string> v) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (auto& s : v)
    if (!text::trim(s).empty() && seen.insert(text::normalize_for_match(s)).second) out.push_back(std::move(s));
  return out;
}

std::vector<ClassifiedEntity> gold_classified(TaskKind task, const GoldSegment& seg) {
  std::vector<ClassifiedEntity> out;
  std::set<std::string> seen;
  for (const auto& e : seg.entities) {
    if (e.kind != class_span_kind(task)) continue;
    auto t = seg.terms.find(e.local_id);
    if (t == seg.terms.end()) continue;
    if (seen.insert(text::normalize_for_match(e.text) + "\x1f" + t->second).second)
      out.push_back({e.text, t->second});
  }
  return out;
}

std::string relation_item(const RelationTuple& r) { return r.subject_id + " " + r.event_type + " " + r.object_id; }

std::string canonical_role(std::string_view raw) {
  std::string r;
  for (char c : text::trim(raw)) r += (c == '-' || c == ' ') ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return r;
}

}  // namespace

bool task_applies(TaskKind task, const GoldSegment& seg) {
  if (recognition_kind(task)) return true;
  if (is_classification(task)) return !gold_classified(task, seg).empty();
  return !seg.actions.empty() && seg.actions.size() + seg.entities.size() >= 2;
}

std::vector<prompt::PromptEntity> task_extras(TaskKind task, const GoldSegment& seg) {
  std::vector<prompt::PromptEntity> out;
  if (is_classification(task)) {
    std::set<std::string> seen;
    for (const auto& c : gold_classified(task, seg))
      if (seen.insert(c.entity).second) out.push_back({"", class_span_kind(task), "", c.entity});
  } else if (task == TaskKind::RelationRecognition) {
    for (const auto& e : seg.entities) out.push_back({e.local_id, e.kind, e.subtype, e.text});
    for (const auto& a : seg.actions) out.push_back({a.local_id, a.kind, a.subtype, a.text});
  }
  return out;
}

std::vector<std::string> gold_items(TaskKind task, const GoldSegment& seg) {
  std::vector<std::string> out;
  if (auto k = recognition_kind(task)) {
    const auto& src = *k == SpanKind::Action ? seg.actions : seg.entities;
    for (const auto& e : src)
      if (e.kind == *k) out.push_back(e.text);
    return distinct(std::move(out));
  }
  if (is_classification(task)) {
    for (const auto& c : gold_classified(task, seg)) out.push_back(c.entity + " => " + c.term);
    return out;
  }
  for (const auto& r : seg.relations) out.push_back(relation_item(r));
  return out;
}

json expected_answer(TaskKind task, const GoldSegment& seg, const taxonomy::Taxonomy* taxonomy) {
  if (auto k = recognition_kind(task)) {
    json items = json::array();
    std::set<std::string> seen;
    const auto& src = *k == SpanKind::Action ? seg.actions : seg.entities;
    for (const auto& e : src) {
      if (e.kind != *k || !seen.insert(text::normalize_for_match(e.text)).second) continue;
      json item{{"text", e.text}};
      if ((*k == SpanKind::Party || *k == SpanKind::Action) && !e.subtype.empty()) item["subtype"] = e.subtype;
      items.push_back(std::move(item));
    }
    return json{{"entities", items}};
  }
  if (is_classification(task)) {
    json items = json::array();
    for (const auto& c : gold_classified(task, seg)) {
      std::string term = c.term;
      if (taxonomy) {
        if (auto iri = resolve_iri(c.term, *taxonomy, term_kind(task))) term = rdf::local_name(*iri);
      } else {
        term = rdf::local_name(taxonomy::expand_known_prefix(c.term));
      }
      items.push_back(json{{"entity_text", c.entity}, {"term", term}});
    }
    return json{{"classifications", items}};
  }
  json items = json::array();
  for (const auto& r : seg.relations) items.push_back(json{{"id1", r.subject_id}, {"id2", r.object_id}, {"type", r.event_type}});
  return json{{"relations", items}};
}

// ---------------------------------------------------------------------------

const TaskScore* ScoreReport::task(TaskKind t) const {
  for (const auto& s : tasks)
    if (s.task == t) return &s;
  return nullptr;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json facets_json(const Facets& f) {
  return json{{"f1", opt(f.f1)},         {"f1_n", opt(f.f1_n)},        {"f1_e", opt(f.f1_e)},
              {"samples", f.samples},    {"nonempty", f.nonempty},     {"empty", f.empty}};
}

struct Scored {
  MatchOutcome strict;
  MatchOutcome rx;
  std::size_t n_pred = 0;
  std::size_t n_gold = 0;
};

}  // namespace

json ScoreReport::to_json() const {
  json tj = json::array();
  for (const auto& t : tasks) {
    json samples = json::array();
    for (const auto& s : t.samples) {
      json j{{"doc_id", s.doc_id},   {"segment", s.segment_index}, {"pred", s.pred},
             {"gold", s.gold},       {"f1", s.f1_strict},           {"f1_rx", s.f1_rx}};
      if (s.error) j["error"] = *s.error;
      samples.push_back(std::move(j));
    }
    tj.push_back(json{{"task", task_name(t.task)},
                      {"code", task_code(t.task)},
                      {"strict", facets_json(t.strict)},
                      {"rx", facets_json(t.rx)},
                      {"failures", t.failures},
                      {"samples", samples}});
  }
  return json{{"model", model}, {"tasks", tj}};
}

ScoreReport run_benchmark(const std::vector<corpus::GoldDocument>& corpus, backend::Backend& backend,
                          const std::vector<TaskKind>& tasks, const taxonomy::Taxonomy& taxonomy,
                          const BenchmarkOptions& options) {
  ScoreReport report;
  report.model = backend.config().model_name;
  const auto segments = gold_segments(corpus, options.schema);
  MatchConfig strict_cfg = options.match;
  strict_cfg.relaxed = false;
  MatchConfig rx_cfg = options.match;
  rx_cfg.relaxed = true;

  for (TaskKind task : tasks) {
    TaskScore ts;
    ts.task = task;
    prompt::PromptOptions popts = options.prompt;
    if (is_classification(task) && options.vocabulary_in_prompt && popts.vocabulary.empty())
      popts.vocabulary = taxonomy.labels(term_kind(task));

    std::vector<const GoldSegment*> applicable;
    for (const auto& s : segments)
      if (task_applies(task, s)) applicable.push_back(&s);

    std::vector<Scored> scored(applicable.size());
    std::vector<SampleDetail> details(applicable.size());
    parallel_for(applicable.size(), 1, [&](std::size_t i) {
      const GoldSegment& seg = *applicable[i];
      SampleDetail& d = details[i];
      d.doc_id = seg.doc_id;
      d.segment_index = seg.segment_index;
      d.gold = gold_items(task, seg);
      json parsed = json::array();
      try {
        auto out = backend::run_task(task, seg.text, task_extras(task, seg), backend, popts, options.refusals);
        parsed = std::move(out.parsed);
      } catch (const std::exception& e) {
        d.error = e.what();
      }
      Scored& sc = scored[i];
      if (recognition_kind(task)) {
        std::vector<std::string> pred;
        for (const auto& item : parsed) pred.push_back(item.value("text", ""));
        d.pred = distinct(std::move(pred));
        sc.strict = match_spans(d.pred, d.gold, strict_cfg);
        sc.rx = match_spans(d.pred, d.gold, rx_cfg);
        sc.n_pred = d.pred.size();
        sc.n_gold = d.gold.size();
      } else if (is_classification(task)) {
        std::vector<ClassifiedEntity> pred;
        for (const auto& item : parsed) {
          pred.push_back({item.value("entity_text", ""), item.value("term", "")});
          d.pred.push_back(pred.back().entity + " => " + pred.back().term);
        }
        const auto gold = gold_classified(task, seg);
        sc.strict = score_classification(pred, gold, taxonomy, term_kind(task), strict_cfg);
        sc.rx = score_classification(pred, gold, taxonomy, term_kind(task), rx_cfg);
        sc.n_pred = pred.size();
        sc.n_gold = gold.size();
      } else {
        std::set<std::string> seen;
        for (const auto& item : parsed) {
          RelationTuple r{text::to_lower_ascii(text::trim(item.value("id1", ""))),
                          text::to_lower_ascii(text::trim(item.value("id2", ""))),
                          canonical_role(item.value("type", ""))};
          if (!r.object_id.empty() && r.object_id[0] == 'a' && !r.subject_id.empty() && r.subject_id[0] != 'a')
            std::swap(r.subject_id, r.object_id);
          auto s = relation_item(r);
          if (seen.insert(s).second) d.pred.push_back(s);
        }
        // Ids carry no text; relaxed matching would be meaningless here.
        sc.strict = match_spans(d.pred, d.gold, strict_cfg);
        sc.rx = sc.strict;
        sc.n_pred = d.pred.size();
        sc.n_gold = d.gold.size();
      }
      d.f1_strict = sample_f1(sc.strict, sc.n_pred, sc.n_gold);
      d.f1_rx = sample_f1(sc.rx, sc.n_pred, sc.n_gold);
    });

    std::vector<ScoredSample> s_strict, s_rx;
    if (options.aggregation == Aggregation::Segment) {
      for (std::size_t i = 0; i < details.size(); ++i) {
        s_strict.push_back({details[i].f1_strict, scored[i].n_gold == 0});
        s_rx.push_back({details[i].f1_rx, scored[i].n_gold == 0});
      }
    } else {
      // One sample per document from summed counts.
      std::map<std::string, std::vector<std::size_t>> by_doc;
      for (std::size_t i = 0; i < details.size(); ++i) by_doc[details[i].doc_id].push_back(i);
      for (const auto& [doc, idx] : by_doc) {
        MatchOutcome a, b;
        std::size_t np = 0, ng = 0;
        for (auto i : idx) {
          a.tp += scored[i].strict.tp;
          a.fp += scored[i].strict.fp;
          a.fn += scored[i].strict.fn;
          b.tp += scored[i].rx.tp;
          b.fp += scored[i].rx.fp;
          b.fn += scored[i].rx.fn;
          np += scored[i].n_pred;
          ng += scored[i].n_gold;
        }
        s_strict.push_back({sample_f1(a, np, ng), ng == 0});
        s_rx.push_back({sample_f1(b, np, ng), ng == 0});
      }
    }
    ts.strict = aggregate(s_strict);
    ts.rx = aggregate(s_rx);
    for (const auto& d : details)
      if (d.error) ++ts.failures;
    ts.samples = std::move(details);
    report.tasks.push_back(std::move(ts));
  }
  return report;
}

std::string benchmark_table(const std::vector<ScoreReport>& reports) {
  std::ostringstream o;
  std::vector<TaskKind> order;
  for (const auto& r : reports)
    for (const auto& t : r.tasks)
      if (std::find(order.begin(), order.end(), t.task) == order.end()) order.push_back(t.task);
  o << "model";
  for (TaskKind t : order) {
    const std::string c(task_code(t));
    o << "\t" << c << " f1_n\t" << c << " f1_e\t" << c << " f1\t" << c << " rx f1_n\t" << c << " rx f1_e\t" << c
      << " rx f1";
  }
  o << "\n";
  auto cell = [&](const std::optional<double>& v) {
    if (!v) return std::string("-");
    std::ostringstream c;
    c << std::fixed << std::setprecision(4) << *v;
    return c.str();
  };
  for (const auto& r : reports) {
    o << r.model;
    for (TaskKind t : order) {
      const TaskScore* s = r.task(t);
      if (!s) {
        o << "\t-\t-\t-\t-\t-\t-";
        continue;
      }
      o << "\t" << cell(s->strict.f1_n) << "\t" << cell(s->strict.f1_e) << "\t" << cell(s->strict.f1) << "\t"
        << cell(s->rx.f1_n) << "\t" << cell(s->rx.f1_e) << "\t" << cell(s->rx.f1);
    }
    o << "\n";
  }
  return o.str();
}

// ---------------------------------------------------------------------------

FinetuneSpec FinetuneSpec::parse(std::string_view dash_form, std::uint64_t seed) {
  const auto parts = text::split(text::trim(dash_form), '-');
  if (parts.size() != 4) throw std::invalid_argument("fine-tune spec must have the form a-b-c-d: " + std::string(dash_form));
  std::size_t v[4];
  for (int i = 0; i < 4; ++i) {
    const auto& p = parts[static_cast<std::size_t>(i)];
    if (p.empty() || !std::all_of(p.begin(), p.end(), [](char c) { return c >= '0' && c <= '9'; }))
      throw std::invalid_argument("fine-tune spec has a non-numeric part: " + std::string(dash_form));
    v[i] = static_cast<std::size_t>(std::stoull(p));
  }
  return FinetuneSpec{v[0], v[1], v[2], v[3], seed};
}

std::string FinetuneSpec::to_string() const {
  return std::to_string(n_train_nonempty) + "-" + std::to_string(n_train_empty) + "-" +
         std::to_string(n_val_nonempty) + "-" + std::to_string(n_val_empty);
}

InsufficientDataError::InsufficientDataError(std::string stratum, std::size_t needed, std::size_t available)
    : std::runtime_error("stratum '" + stratum + "' has " + std::to_string(available) + " data points, " +
                         std::to_string(needed) + " requested"),
      stratum_(std::move(stratum)),
      available_(available) {}

std::uint64_t SeededRng::below(std::uint64_t bound) {
  // Reject the top partial block so every residue is equally likely.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do x = engine_();
  while (x >= limit);
  return x % bound;
}

std::string FinetuneRecord::to_jsonl() const { return json{{"messages", messages}}.dump(); }

FinetuneExport select_finetune_data(const std::vector<corpus::GoldDocument>& corpus, TaskKind task,
                                    const FinetuneSpec& spec, const taxonomy::Taxonomy* taxonomy,
                                    const FinetuneOptions& options) {
  const auto segments = gold_segments(corpus, options.schema);
  std::vector<const GoldSegment*> nonempty, empty;
  for (const auto& s : segments) {
    if (!task_applies(task, s)) continue;
    (gold_items(task, s).empty() ? empty : nonempty).push_back(&s);
  }
  if (nonempty.size() < spec.n_train_nonempty + spec.n_val_nonempty)
    throw InsufficientDataError("non-empty", spec.n_train_nonempty + spec.n_val_nonempty, nonempty.size());
  if (empty.size() < spec.n_train_empty + spec.n_val_empty)
    throw InsufficientDataError("empty", spec.n_train_empty + spec.n_val_empty, empty.size());

  SeededRng rng(spec.seed);
  rng.shuffle(nonempty);
  rng.shuffle(empty);

  prompt::PromptOptions popts = options.prompt;
  if (is_classification(task) && options.vocabulary_in_prompt && popts.vocabulary.empty() && taxonomy)
    popts.vocabulary = taxonomy->labels(term_kind(task));
  auto record = [&](const GoldSegment* s, bool ne) {
    const auto m = prompt::build_prompt(task, s->text, task_extras(task, *s), popts);
    FinetuneRecord r;
    r.sample_id = s->doc_id + "#" + std::to_string(s->segment_index);
    r.nonempty = ne;
    r.messages = json::array({{{"role", "system"}, {"content", m.system}},
                              {{"role", "user"}, {"content", m.user}},
                              {{"role", "assistant"}, {"content", expected_answer(task, *s, taxonomy).dump()}}});
    return r;
  };

  FinetuneExport out;
  for (std::size_t i = 0; i < spec.n_train_nonempty; ++i) out.train.push_back(record(nonempty[i], true));
  for (std::size_t i = 0; i < spec.n_train_empty; ++i) out.train.push_back(record(empty[i], false));
  for (std::size_t i = 0; i < spec.n_val_nonempty; ++i)
    out.validation.push_back(record(nonempty[spec.n_train_nonempty + i], true));
  for (std::size_t i = 0; i < spec.n_val_empty; ++i)
    out.validation.push_back(record(empty[spec.n_train_empty + i], false));
  rng.shuffle(out.train);
  rng.shuffle(out.validation);
  return out;
}

void write_finetune(const FinetuneExport& e, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::vector<FinetuneRecord>& v, const char* name) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    for (const auto& r : v) out << r.to_jsonl() << '\n';
  };
  write(e.train, "train.jsonl");
  write(e.validation, "validation.jsonl");
}

}  // namespace ppa::eval
