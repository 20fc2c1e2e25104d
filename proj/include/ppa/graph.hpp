#pragma once

// Privacy-practice knowledge graph: construction from extraction results,
// RDF serialization, invariant checks and corpus statistics.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppa/extraction.hpp"
#include "ppa/rdf.hpp"
#include "ppa/taxonomy.hpp"

namespace ppa::graph {

// Terms minted under urn:pp-analyze:core#.
namespace core {
std::string iri(std::string_view local);

inline constexpr std::string_view kDataPractice = "DataPractice";
inline constexpr std::string_view kDataCollectionUse = "DataCollectionUse";
inline constexpr std::string_view kThirdPartySharingDisclosure = "ThirdPartySharingDisclosure";
inline constexpr std::string_view kPrivacyPolicy = "PrivacyPolicy";
inline constexpr std::string_view kService = "Service";
inline constexpr std::string_view kParty = "Party";
inline constexpr std::string_view kFirstParty = "FirstParty";
inline constexpr std::string_view kThirdParty = "ThirdParty";
inline constexpr std::string_view kUser = "User";

inline constexpr std::string_view kHasPractice = "hasPractice";
inline constexpr std::string_view kForService = "forService";
inline constexpr std::string_view kServiceId = "serviceId";
inline constexpr std::string_view kSourceUri = "sourceUri";
inline constexpr std::string_view kTaxonomyVersion = "taxonomyVersion";
inline constexpr std::string_view kHasData = "hasData";
inline constexpr std::string_view kHasPurpose = "hasPurpose";
inline constexpr std::string_view kPerformedBy = "performedBy";
inline constexpr std::string_view kDataProvidedBy = "dataProvidedBy";
inline constexpr std::string_view kSharedWith = "sharedWith";
inline constexpr std::string_view kSourceSegment = "sourceSegment";
inline constexpr std::string_view kSegmentIndex = "segmentIndex";
inline constexpr std::string_view kPracticeSubtype = "practiceSubtype";
inline constexpr std::string_view kActionText = "actionText";
}  // namespace core

// The three practice classes.
const std::vector<std::string>& practice_classes();

struct Provenance {
  std::size_t segment_index = 0;
  std::string segment_text;
};

struct PrPrGraph {
  rdf::Graph triples;
  std::map<std::string, Provenance> provenance;  // practice IRI -> source segment
  std::string taxonomy_version;
  std::string policy_iri;
  std::string service_iri;
};

// Every skipped item with a reason.
struct BuildLog {
  std::vector<nlohmann::json> entries;
  std::size_t practices = 0;
  std::size_t skipped_actions = 0;
  std::size_t skipped_ungrounded = 0;
  std::size_t skipped_non_verbatim = 0;

  nlohmann::json to_json() const;
};

struct BuildOptions {
  // Flagged spans are left out unless this is set.
  bool include_non_verbatim = false;
};

struct BuildResult {
  PrPrGraph graph;
  BuildLog log;
};

std::string service_iri(std::string_view service_id);
std::string policy_iri(std::string_view service_id, std::string_view policy_uri);
std::string practice_iri(std::string_view policy_uri, std::size_t segment_index, std::size_t ordinal);

BuildResult build_graph(const extraction::ExtractionResult& result, const std::string& service_id,
                        const std::string& policy_uri, const std::string& taxonomy_version,
                        const BuildOptions& options = {});

// Prefixes used by every writer in this project.
const std::vector<std::pair<std::string, std::string>>& default_prefixes();

std::string serialize(const rdf::Graph& g, rdf::Format format);
rdf::Graph parse(std::string_view text, rdf::Format format);
// Chooses the format from the extension, sniffing the content otherwise.
rdf::Graph load_graph_file(const std::filesystem::path& path);

// Returns one message per violated invariant; empty means the graph is
// well-formed. The taxonomy check is skipped when taxonomy is null.
std::vector<std::string> check_invariants(const rdf::Graph& g, const taxonomy::Taxonomy* taxonomy);

// Which predicates and classes the statistics read. The defaults match the
// graphs this project writes; other vocabularies can be plugged in.
struct StatsVocabulary {
  std::vector<std::string> practice_classes = graph::practice_classes();
  std::vector<std::string> data_predicates = {core::iri(core::kHasData)};
  std::vector<std::string> purpose_predicates = {core::iri(core::kHasPurpose)};

  static StatsVocabulary from_json(const nlohmann::json& j);
};

struct ClassCount {
  std::string iri;
  std::size_t mentions = 0;
  bool operator==(const ClassCount&) const = default;
};

struct GraphStats {
  std::size_t triple_count = 0;
  std::size_t practice_count = 0;
  std::map<std::string, std::size_t> practice_types;  // class IRI -> count
  std::map<std::string, std::size_t> data_classes;    // class IRI -> mentions
  std::map<std::string, std::size_t> purpose_classes;
  std::vector<ClassCount> top_data;
  std::vector<ClassCount> top_purpose;

  std::size_t data_mentions() const;
  std::size_t purpose_mentions() const;
  nlohmann::json to_json() const;
  std::string to_tsv() const;
};

// Counts over the union of the input graphs.
GraphStats stats(const std::vector<rdf::Graph>& graphs, std::size_t top_k = 10, const StatsVocabulary& vocab = {});

// Descending by count, ties by IRI.
std::vector<ClassCount> top_k(const std::map<std::string, std::size_t>& counts, std::size_t k);

}  // namespace ppa::graph
