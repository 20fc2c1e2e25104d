#pragma once

// Conversion of a practice graph into formal policies: ODRL policy sets and
// psDToU app policies. Term choices come from a ConversionProfile so they can
// be replaced without code changes.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppa/rdf.hpp"

namespace ppa::policyconv {

struct ConversionProfile {
  // Practice class IRI -> ODRL action IRI.
  std::map<std::string, std::string> odrl_actions;
  // Graph party predicate IRI -> ODRL party function IRI.
  std::map<std::string, std::string> odrl_party_functions;
  std::string data_identifier = "data_class_iri";  // only strategy

  // psDToU vocabulary.
  std::string psdtou_ns = "urn:pp-analyze:psdtou#";
  std::map<std::string, std::string> psdtou_terms;  // local role -> IRI, see defaults

  static ConversionProfile defaults();
  // Keys absent from the file keep their defaults.
  static ConversionProfile from_json(const nlohmann::json& j);
  static ConversionProfile load(const std::filesystem::path& path);

  std::string psdtou(std::string_view local) const;
};

struct ConversionReport {
  std::vector<nlohmann::json> skipped;   // practices with no data links
  std::vector<nlohmann::json> unmapped;  // practices whose type has no mapping
  std::size_t policies = 0;
  std::size_t rules = 0;

  nlohmann::json to_json() const;
};

struct ConversionOutput {
  rdf::Graph graph;
  ConversionReport report;
};

ConversionOutput to_odrl(const rdf::Graph& g, const ConversionProfile& profile = ConversionProfile::defaults());
ConversionOutput to_psdtou(const rdf::Graph& g, const ConversionProfile& profile = ConversionProfile::defaults());

// Prefixes for writing converted documents.
std::vector<std::pair<std::string, std::string>> output_prefixes(const ConversionProfile& profile);

}  // namespace ppa::policyconv
