#include "support/fixtures.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "ppa/corpus.hpp"
#include "ppa/eval.hpp"
#include "ppa/extraction.hpp"
#include "ppa/prompt.hpp"

namespace fs = std::filesystem;

namespace ppa::fixtures {

fs::path fixture_dir() { return PPA_FIXTURE_DIR; }
fs::path fixture_policy_path() { return fixture_dir() / "fixture_policy.txt"; }
fs::path fixture_answers_path() { return fixture_dir() / "fixture_answers.json"; }
fs::path fixture_cache_path() { return fixture_dir() / "fixture_cache.jsonl"; }
fs::path taxonomy_path() { return PPA_DEFAULT_TAXONOMY; }

const taxonomy::Taxonomy& vendored_taxonomy() {
  static const taxonomy::Taxonomy t = taxonomy::load_taxonomy(taxonomy_path());
  return t;
}

std::string prompt_segment(const std::string& user) {
  const std::string open = std::string(prompt::kSegmentOpen) + "\n";
  const std::string close = "\n" + std::string(prompt::kSegmentClose);
  if (user.rfind(open, 0) != 0) return user;
  const auto end = user.find(close, open.size());
  if (end == std::string::npos) return user;
  return user.substr(open.size(), end - open.size());
}

AnswerTable load_answers(const fs::path& path) {
  const auto j = nlohmann::json::parse(read_file(path));
  AnswerTable t;
  for (const auto& entry : j) {
    auto& row = t[entry.at("segment").get<std::string>()];
    for (const auto& [task, raw] : entry.at("answers").items()) row[task] = raw.get<std::string>();
  }
  return t;
}

std::shared_ptr<backend::ScriptedClient> scripted_client(const AnswerTable& answers) {
  auto client = std::make_shared<backend::ScriptedClient>();
  client->set_fallback([answers](const backend::ChatRequest& r) -> std::string {
    const std::string seg = prompt_segment(r.messages.user);
    const std::string task(task_name(r.task));
    if (auto row = answers.find(seg); row != answers.end())
      if (auto a = row->second.find(task); a != row->second.end()) return a->second;
    const bool recognition = r.task == TaskKind::DataRecognition || r.task == TaskKind::PurposeRecognition ||
                             r.task == TaskKind::PartyRecognition || r.task == TaskKind::ActionRecognition;
    if (recognition) return "[]";
    throw backend::TransportError("no scripted answer for " + task + " on: " + seg, false);
  });
  return client;
}

void record_fixture_cache(const fs::path& cache_path) {
  fs::remove(cache_path);
  backend::BackendConfig cfg;
  cfg.cache_mode = backend::CacheMode::Record;
  cfg.cache_path = cache_path;
  auto cache = std::make_shared<backend::CacheStore>(cache_path);
  backend::Backend b(cfg, scripted_client(load_answers(fixture_answers_path())), cache);
  const auto doc = corpus::load_policy(fixture_policy_path(), "example-shop");
  extraction::extract_document(doc, b, vendored_taxonomy());
}

std::unique_ptr<backend::Backend> replay_backend(const fs::path& cache_path) {
  backend::BackendConfig cfg;
  cfg.cache_mode = backend::CacheMode::Replay;
  cfg.cache_path = cache_path;
  return backend::make_backend(cfg);
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          ("ppa-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

struct Term {
  const char* text;
  const char* iri;
};

const Term kData[] = {{"email address", "pd:EmailAddress"},
                      {"phone number", "pd:TelephoneNumber"},
                      {"IP address", "pd:IPAddress"},
                      {"location", "pd:Location"},
                      {"name", "pd:Name"},
                      {"age", "pd:Age"},
                      {"payment card number", "pd:PaymentCardNumber"},
                      {"browsing history", "pd:BrowsingBehavior"}};
const Term kPurpose[] = {{"improve our services", "dpv:ServiceOptimisation"},
                         {"show you ads", "dpv:Advertising"},
                         {"process payments", "dpv:PaymentManagement"},
                         {"prevent fraud", "dpv:FraudPreventionAndDetection"}};
const char* const kRecipients[] = {"advertisers", "analytics providers", "our partners"};
const char* const kFiller[] = {"Please read this section carefully", "This policy was last reviewed in",
                               "Questions may be sent to our office", "Section", "These terms apply to all visitors",
                               "We may update this page from time to time"};

// Appends one annotated line; ids continue from t/e/a counters.
struct AnnWriter {
  std::ostringstream ann;
  int t = 0, e = 0, a = 0, n = 0;

  std::string ent(const std::string& label, std::size_t start, const std::string& surface) {
    const std::string id = "T" + std::to_string(++t);
    ann << id << '\t' << label << ' ' << start << ' ' << start + surface.size() << '\t' << surface << '\n';
    return id;
  }
};

}  // namespace

SyntheticCorpus write_synthetic_gold(const fs::path& dir, std::size_t n_docs, std::size_t segments_per_doc,
                                     std::uint64_t seed) {
  fs::create_directories(dir);
  eval::SeededRng rng(seed);
  SyntheticCorpus stats;
  for (std::size_t d = 0; d < n_docs; ++d) {
    std::string txt;
    AnnWriter w;
    for (std::size_t s = 0; s < segments_per_doc; ++s) {
      const std::size_t base = txt.size();
      ++stats.segments;
      if (rng.below(3) != 0) {
        txt += std::string(kFiller[rng.below(std::size(kFiller))]) + " " + std::to_string(d * 100 + s) + ".\n";
        continue;
      }
      ++stats.nonempty_segments;
      const Term& data = kData[rng.below(std::size(kData))];
      const Term& purpose = kPurpose[rng.below(std::size(kPurpose))];
      const bool sharing = rng.below(3) == 0;
      std::string line = "We";
      const std::string t_party = w.ent("first-party", base, "We");
      const std::string verb = sharing ? "share" : "collect";
      const std::size_t verb_at = base + line.size() + 1;
      line += " " + verb + " your ";
      const std::string t_verb =
          w.ent(sharing ? "third-party-sharing-disclosure" : "collection-use", verb_at, verb);
      const std::string t_data = w.ent("data", base + line.size(), data.text);
      w.ann << "A" << ++w.n << "\tdpv " << t_data << ' ' << data.iri << '\n';
      line += data.text;
      std::string t_recv;
      if (sharing) {
        const std::string recv = kRecipients[rng.below(std::size(kRecipients))];
        line += " with ";
        t_recv = w.ent("third-party", base + line.size(), recv);
        line += recv;
      }
      line += " to ";
      const std::string t_purpose = w.ent("purpose", base + line.size(), purpose.text);
      w.ann << "#" << w.n << "\tAnnotatorNotes " << t_purpose << '\t' << purpose.iri << '\n';
      line += purpose.text;
      line += ".";
      w.ann << "E" << ++w.e << '\t' << (sharing ? "third-party-sharing-disclosure:" : "collection-use:") << t_verb
            << (sharing ? " data-sharer:" : " data-collector:") << t_party << " data:" << t_data
            << " purpose:" << t_purpose;
      if (sharing) w.ann << " data-receiver:" << t_recv;
      w.ann << '\n';
      txt += line + "\n";
    }
    char name[32];
    std::snprintf(name, sizeof name, "doc%03zu", d);
    write_file(dir / (std::string(name) + ".txt"), txt);
    write_file(dir / (std::string(name) + ".ann"), w.ann.str());
    ++stats.documents;
  }
  return stats;
}

extraction::ExtractionResult random_extraction(std::uint64_t seed, const std::string& service_id) {
  eval::SeededRng rng(seed);
  const auto& tax = vendored_taxonomy();
  std::vector<std::string> data_iris, purpose_iris;
  for (const auto& [iri, n] : tax.nodes()) (n.kind == taxonomy::TermKind::Data ? data_iris : purpose_iris).push_back(iri);
  const char* const party_subtypes[] = {"first_party", "third_party", "user"};
  const char* const action_subtypes[] = {"collection_use", "collection_use", "third_party_sharing_disclosure",
                                         "third_party_sharing_disclosure", "storage_retention_deletion",
                                         "security_protection"};

  extraction::ExtractionResult r;
  r.service_id = service_id;
  r.source_uri = "urn:test:" + service_id;
  const std::size_t n_segments = 1 + rng.below(5);
  for (std::size_t si = 0; si < n_segments; ++si) {
    extraction::SegmentExtraction seg;
    seg.segment_index = si;
    std::vector<EntitySpan> entities, actions;
    auto add = [&](SpanKind kind, std::vector<EntitySpan>& dst, std::string subtype) {
      EntitySpan s;
      s.kind = kind;
      s.segment_index = si;
      s.text = std::string(span_kind_name(kind)) + std::to_string(dst.size()) + "x" + std::to_string(rng.below(100));
      s.subtype = std::move(subtype);
      if (kind == SpanKind::Data && rng.below(5) != 0) s.grounded_term = data_iris[rng.below(data_iris.size())];
      if (kind == SpanKind::Purpose && rng.below(5) != 0)
        s.grounded_term = purpose_iris[rng.below(purpose_iris.size())];
      s.non_verbatim = rng.below(12) == 0;
      dst.push_back(std::move(s));
    };
    const std::size_t nd = rng.below(5), np = rng.below(3), nq = rng.below(3), na = rng.below(4);
    for (std::size_t i = 0; i < nd; ++i) add(SpanKind::Data, entities, "");
    for (std::size_t i = 0; i < np; ++i) add(SpanKind::Purpose, entities, "");
    for (std::size_t i = 0; i < nq; ++i)
      add(SpanKind::Party, entities, party_subtypes[rng.below(std::size(party_subtypes))]);
    for (std::size_t i = 0; i < na; ++i)
      add(SpanKind::Action, actions, action_subtypes[rng.below(std::size(action_subtypes))]);
    for (std::size_t i = 0; i < entities.size(); ++i) entities[i].local_id = "e" + std::to_string(i);
    for (std::size_t i = 0; i < actions.size(); ++i) actions[i].local_id = "a" + std::to_string(i);
    seg.spans = entities;
    seg.spans.insert(seg.spans.end(), actions.begin(), actions.end());
    for (const auto& s : seg.spans)
      if (!s.non_verbatim) seg.text += (seg.text.empty() ? "" : " ") + s.text;
    seg.text += " segment " + std::to_string(si) + ".";
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    for (const auto& a : actions)
      for (const auto& e : entities) {
        if (rng.below(2)) continue;
        std::string role;
        switch (e.kind) {
          case SpanKind::Data: role = std::string(role::kHasData); break;
          case SpanKind::Purpose: role = std::string(role::kHasPurpose); break;
          default: {
            const std::string_view roles[] = {role::kPerformedBy, role::kDataProvidedBy, role::kDataSharedWith};
            role = std::string(roles[rng.below(3)]);
          }
        }
        if (seen.insert({a.local_id, e.local_id, role}).second) seg.relations.push_back({a.local_id, e.local_id, role});
      }
    r.segments.push_back(std::move(seg));
  }
  return r;
}

}  // namespace ppa::fixtures
