#include "ppa/graph.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "ppa/digest.hpp"
#include "ppa/text.hpp"

namespace ppa::graph {

using nlohmann::json;
using rdf::Term;

std::string core::iri(std::string_view local) { return std::string(rdf::ns::kCore) + std::string(local); }

const std::vector<std::string>& practice_classes() {
  static const std::vector<std::string> k = {core::iri(core::kDataPractice), core::iri(core::kDataCollectionUse),
                                             core::iri(core::kThirdPartySharingDisclosure)};
  return k;
}

json BuildLog::to_json() const {
  return json{{"practices", practices},
              {"skipped_actions", skipped_actions},
              {"skipped_ungrounded", skipped_ungrounded},
              {"skipped_non_verbatim", skipped_non_verbatim},
              {"entries", entries}};
}

namespace {

std::string encode_component(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '.' || c == '-' || c == '_' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    }
  }
  return out;
}

std::string short_digest(std::string_view s, std::size_t n = 16) { return sha256_hex(s).substr(0, n); }

std::string party_class(const std::string& subtype_name) {
  if (subtype_name == subtype::kFirstParty) return core::iri(core::kFirstParty);
  if (subtype_name == subtype::kThirdParty) return core::iri(core::kThirdParty);
  if (subtype_name == subtype::kUser) return core::iri(core::kUser);
  return core::iri(core::kParty);
}

}  // namespace

std::string service_iri(std::string_view service_id) {
  return "urn:pp-analyze:service:" + encode_component(service_id);
}

std::string policy_iri(std::string_view service_id, std::string_view policy_uri) {
  return "urn:pp-analyze:policy:" + short_digest(std::string(service_id) + "|" + std::string(policy_uri));
}

std::string practice_iri(std::string_view policy_uri, std::size_t segment_index, std::size_t ordinal) {
  return "urn:pp-analyze:practice:" +
         short_digest(std::string(policy_uri) + "|" + std::to_string(segment_index) + "|" + std::to_string(ordinal));
}

BuildResult build_graph(const extraction::ExtractionResult& result, const std::string& service_id,
                        const std::string& policy_uri, const std::string& taxonomy_version,
                        const BuildOptions& options) {
  BuildResult out;
  auto& g = out.graph.triples;
  auto& log = out.log;
  const std::string type = rdf::rdf_type();
  out.graph.taxonomy_version = taxonomy_version;
  out.graph.service_iri = service_iri(service_id);
  out.graph.policy_iri = policy_iri(service_id, policy_uri);
  const Term service = Term::iri(out.graph.service_iri);
  const Term policy = Term::iri(out.graph.policy_iri);

  g.add(service, Term::iri(type), Term::iri(core::iri(core::kService)));
  g.add(service, Term::iri(core::iri(core::kServiceId)), Term::literal(service_id));
  g.add(policy, Term::iri(type), Term::iri(core::iri(core::kPrivacyPolicy)));
  g.add(policy, Term::iri(core::iri(core::kForService)), service);
  g.add(policy, Term::iri(core::iri(core::kSourceUri)), Term::literal(policy_uri));
  g.add(policy, Term::iri(core::iri(core::kTaxonomyVersion)), Term::literal(taxonomy_version));

  auto skip = [&](const extraction::SegmentExtraction& seg, const EntitySpan* span, std::string_view reason) {
    json e{{"segment", seg.segment_index}, {"reason", reason}};
    if (span) {
      e["id"] = span->local_id;
      e["text"] = span->text;
      e["kind"] = span_kind_name(span->kind);
      if (span->unresolved_term) e["unresolved_term"] = *span->unresolved_term;
    }
    log.entries.push_back(std::move(e));
  };
  auto usable = [&](const EntitySpan& s) { return options.include_non_verbatim || !s.non_verbatim; };

  for (const auto& seg : result.segments) {
    std::size_t ordinal = 0;
    for (const auto& action : seg.spans) {
      if (action.kind != SpanKind::Action) continue;
      const std::size_t my_ordinal = ordinal++;
      if (!usable(action)) {
        ++log.skipped_actions;
        ++log.skipped_non_verbatim;
        skip(seg, &action, "action text not found in segment");
        continue;
      }
      const std::string piri = practice_iri(policy_uri, seg.segment_index, my_ordinal);
      const Term practice = Term::iri(piri);
      ++log.practices;
      out.graph.provenance[piri] = Provenance{seg.segment_index, seg.text};
      g.add(policy, Term::iri(core::iri(core::kHasPractice)), practice);
      if (action.subtype == subtype::kCollectionUse) {
        g.add(practice, Term::iri(type), Term::iri(core::iri(core::kDataCollectionUse)));
      } else if (action.subtype == subtype::kThirdPartySharing) {
        g.add(practice, Term::iri(type), Term::iri(core::iri(core::kThirdPartySharingDisclosure)));
      } else {
        g.add(practice, Term::iri(type), Term::iri(core::iri(core::kDataPractice)));
        if (!action.subtype.empty())
          g.add(practice, Term::iri(core::iri(core::kPracticeSubtype)), Term::literal(action.subtype));
      }
      g.add(practice, Term::iri(core::iri(core::kSourceSegment)), Term::literal(seg.text));
      g.add(practice, Term::iri(core::iri(core::kSegmentIndex)),
            Term::integer(static_cast<long long>(seg.segment_index)));
      g.add(practice, Term::iri(core::iri(core::kActionText)), Term::literal(action.text));

      for (const auto& rel : seg.relations) {
        if (rel.subject_id != action.local_id) continue;
        const EntitySpan* target = seg.span(rel.object_id);
        if (!target) continue;
        if (!usable(*target)) {
          ++log.skipped_non_verbatim;
          skip(seg, target, "span text not found in segment");
          continue;
        }
        if (rel.event_type == role::kHasData || rel.event_type == role::kHasPurpose) {
          if (!target->grounded_term) {
            ++log.skipped_ungrounded;
            skip(seg, target, "span has no grounded taxonomy term");
            continue;
          }
          const auto pred = rel.event_type == role::kHasData ? core::kHasData : core::kHasPurpose;
          g.add(practice, Term::iri(core::iri(pred)), Term::iri(*target->grounded_term));
          continue;
        }
        std::string_view pred;
        if (rel.event_type == role::kPerformedBy) pred = core::kPerformedBy;
        else if (rel.event_type == role::kDataProvidedBy) pred = core::kDataProvidedBy;
        else if (rel.event_type == role::kDataSharedWith) pred = core::kSharedWith;
        else {
          skip(seg, target, "event type " + rel.event_type + " has no graph predicate");
          continue;
        }
        const Term party = Term::blank(
            "party" + short_digest(out.graph.policy_iri + "|" + std::to_string(seg.segment_index) + "|" +
                                       target->local_id,
                                   12));
        g.add(party, Term::iri(type), Term::iri(party_class(target->subtype)));
        g.add(party, Term::iri(std::string(rdf::ns::kRdfs) + "label"), Term::literal(target->text));
        g.add(practice, Term::iri(core::iri(pred)), party);
      }
    }
  }
  return out;
}

const std::vector<std::pair<std::string, std::string>>& default_prefixes() {
  static const std::vector<std::pair<std::string, std::string>> k = {
      {"core", std::string(rdf::ns::kCore)}, {"dpv", std::string(rdf::ns::kDpv)},
      {"pd", std::string(rdf::ns::kPd)},     {"rdf", std::string(rdf::ns::kRdf)},
      {"rdfs", std::string(rdf::ns::kRdfs)}, {"xsd", std::string(rdf::ns::kXsd)},
  };
  return k;
}

std::string serialize(const rdf::Graph& g, rdf::Format format) {
  return format == rdf::Format::Turtle ? rdf::write_turtle(g, default_prefixes()) : rdf::write_ntriples(g);
}

rdf::Graph parse(std::string_view text, rdf::Format format) {
  return format == rdf::Format::Turtle ? rdf::parse_turtle(text) : rdf::parse_ntriples(text);
}

rdf::Graph load_graph_file(const std::filesystem::path& path) {
  const std::string content = corpus::read_text_file(path);
  if (auto f = rdf::format_from_extension(path.string())) return parse(content, *f);
  // Turtle is a superset of N-Triples.
  return rdf::parse_turtle(content);
}

std::vector<std::string> check_invariants(const rdf::Graph& g, const taxonomy::Taxonomy* taxonomy) {
  std::vector<std::string> problems;
  const std::string type = rdf::rdf_type();
  std::set<Term> practices;
  for (const auto& cls : practice_classes())
    for (const auto& p : g.instances_of(cls)) practices.insert(p);

  const auto has_practice = core::iri(core::kHasPractice);
  for (const auto& p : practices) {
    const auto segs = g.objects(p, core::iri(core::kSourceSegment));
    if (segs.size() != 1 || !segs.front().is_literal())
      problems.push_back(p.value() + ": expected exactly one segment literal, found " + std::to_string(segs.size()));
    const auto owners = g.subjects(has_practice, p);
    if (owners.size() != 1) {
      problems.push_back(p.value() + ": expected exactly one owning policy, found " + std::to_string(owners.size()));
    } else if (!g.has_type(owners.front(), core::iri(core::kPrivacyPolicy))) {
      problems.push_back(p.value() + ": owner is not a PrivacyPolicy");
    }
  }
  // hasPractice objects must be typed practices.
  for (const auto& t : g.triples())
    if (t.predicate.value() == has_practice && !practices.count(t.object))
      problems.push_back(t.object.value() + ": linked as practice but has no practice type");

  for (const auto& pol : g.instances_of(core::iri(core::kPrivacyPolicy))) {
    const auto svcs = g.objects(pol, core::iri(core::kForService));
    if (svcs.size() != 1) {
      problems.push_back(pol.value() + ": expected exactly one service, found " + std::to_string(svcs.size()));
    } else if (!g.has_type(svcs.front(), core::iri(core::kService))) {
      problems.push_back(pol.value() + ": service node is not typed Service");
    }
  }

  if (taxonomy) {
    auto check_kind = [&](std::string_view pred, taxonomy::TermKind kind) {
      const std::string piri = core::iri(pred);
      for (const auto& t : g.triples()) {
        if (t.predicate.value() != piri) continue;
        const auto* node = t.object.is_iri() ? taxonomy->find(t.object.value()) : nullptr;
        if (!node || node->kind != kind)
          problems.push_back(t.subject.value() + ": " + std::string(pred) + " object " + t.object.value() +
                             " is not a " + std::string(taxonomy::to_string(kind)) + " term of the taxonomy");
      }
    };
    check_kind(core::kHasData, taxonomy::TermKind::Data);
    check_kind(core::kHasPurpose, taxonomy::TermKind::Purpose);
  }
  return problems;
}

StatsVocabulary StatsVocabulary::from_json(const json& j) {
  StatsVocabulary v;
  auto read = [&](const char* key, std::vector<std::string>& dst) {
    if (j.contains(key)) dst = j.at(key).get<std::vector<std::string>>();
  };
  read("practice_classes", v.practice_classes);
  read("data_predicates", v.data_predicates);
  read("purpose_predicates", v.purpose_predicates);
  return v;
}

std::size_t GraphStats::data_mentions() const {
  std::size_t n = 0;
  for (const auto& [k, v] : data_classes) n += v;
  return n;
}

std::size_t GraphStats::purpose_mentions() const {
  std::size_t n = 0;
  for (const auto& [k, v] : purpose_classes) n += v;
  return n;
}

std::vector<ClassCount> top_k(const std::map<std::string, std::size_t>& counts, std::size_t k) {
  std::vector<ClassCount> v;
  for (const auto& [iri, n] : counts) v.push_back({iri, n});
  std::sort(v.begin(), v.end(), [](const ClassCount& a, const ClassCount& b) {
    return a.mentions != b.mentions ? a.mentions > b.mentions : a.iri < b.iri;
  });
  if (v.size() > k) v.resize(k);
  return v;
}

GraphStats stats(const std::vector<rdf::Graph>& graphs, std::size_t k, const StatsVocabulary& vocab) {
  rdf::Graph all;
  for (const auto& g : graphs) all.merge(g);
  GraphStats s;
  s.triple_count = all.size();
  const std::string type = rdf::rdf_type();
  const std::set<std::string> classes(vocab.practice_classes.begin(), vocab.practice_classes.end());
  const std::set<std::string> data_p(vocab.data_predicates.begin(), vocab.data_predicates.end());
  const std::set<std::string> purpose_p(vocab.purpose_predicates.begin(), vocab.purpose_predicates.end());
  std::set<Term> practices;
  for (const auto& t : all.triples()) {
    const auto& p = t.predicate.value();
    if (p == type && t.object.is_iri() && classes.count(t.object.value())) {
      practices.insert(t.subject);
      ++s.practice_types[t.object.value()];
    } else if (data_p.count(p) && t.object.is_iri()) {
      ++s.data_classes[t.object.value()];
    } else if (purpose_p.count(p) && t.object.is_iri()) {
      ++s.purpose_classes[t.object.value()];
    }
  }
  s.practice_count = practices.size();
  s.top_data = top_k(s.data_classes, k);
  s.top_purpose = top_k(s.purpose_classes, k);
  return s;
}

namespace {

json counts_json(const std::vector<ClassCount>& v) {
  json a = json::array();
  for (const auto& c : v) a.push_back(json{{"iri", c.iri}, {"mentions", c.mentions}});
  return a;
}

}  // namespace

json GraphStats::to_json() const {
  return json{{"triple_count", triple_count},
              {"practice_count", practice_count},
              {"practice_types", practice_types},
              {"data_classes", data_classes},
              {"purpose_classes", purpose_classes},
              {"distinct_data_classes", data_classes.size()},
              {"distinct_purpose_classes", purpose_classes.size()},
              {"data_mentions", data_mentions()},
              {"purpose_mentions", purpose_mentions()},
              {"top_data", counts_json(top_data)},
              {"top_purpose", counts_json(top_purpose)}};
}

std::string GraphStats::to_tsv() const {
  std::ostringstream o;
  o << "section\tkey\tvalue\n";
  o << "summary\ttriples\t" << triple_count << "\n";
  o << "summary\tpractices\t" << practice_count << "\n";
  o << "summary\tdistinct_data_classes\t" << data_classes.size() << "\n";
  o << "summary\tdata_mentions\t" << data_mentions() << "\n";
  o << "summary\tdistinct_purpose_classes\t" << purpose_classes.size() << "\n";
  o << "summary\tpurpose_mentions\t" << purpose_mentions() << "\n";
  for (const auto& [cls, n] : practice_types) o << "practice_type\t" << cls << "\t" << n << "\n";
  for (const auto& c : top_data) o << "top_data\t" << c.iri << "\t" << c.mentions << "\n";
  for (const auto& c : top_purpose) o << "top_purpose\t" << c.iri << "\t" << c.mentions << "\n";
  return o.str();
}

}  // namespace ppa::graph
