#pragma once

// DPV data-category and purpose hierarchies. Immutable after construction.

#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ppa/rdf.hpp"

namespace ppa::taxonomy {

enum class TermKind { Data, Purpose };

std::string_view to_string(TermKind k);

struct TaxonomyNode {
  std::string iri;
  std::string label;
  TermKind kind = TermKind::Data;
  std::vector<std::string> parents;   // sorted
  std::vector<std::string> children;  // sorted
  std::vector<std::string> synonyms;
  std::size_t depth = 0;  // shortest distance from a root
};

class TaxonomyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CycleError : public TaxonomyError {
 public:
  explicit CycleError(std::vector<std::string> cycle);
  const std::vector<std::string>& cycle() const { return cycle_; }

 private:
  std::vector<std::string> cycle_;
};

class UnknownFormatError : public TaxonomyError {
 public:
  using TaxonomyError::TaxonomyError;
};

class UnresolvedTermError : public TaxonomyError {
 public:
  UnresolvedTermError(std::string input, TermKind kind);
  const std::string& input() const { return input_; }
  TermKind kind() const { return kind_; }

 private:
  std::string input_;
  TermKind kind_;
};

class ForeignNodeError : public TaxonomyError {
 public:
  using TaxonomyError::TaxonomyError;
};

struct LoadOptions {
  std::vector<std::string> data_roots = {std::string(rdf::ns::kDpv) + "PersonalData"};
  std::vector<std::string> purpose_roots = {std::string(rdf::ns::kDpv) + "Purpose"};
  // Parentless nodes with these local names are also treated as roots.
  std::string data_root_local = "PersonalData";
  std::string purpose_root_local = "Purpose";
};

// Raw hierarchy statements, independent of serialization.
struct HierarchySource {
  std::set<std::string> classes;
  std::vector<std::pair<std::string, std::string>> edges;  // (child, parent)
  std::map<std::string, std::string> labels;
  std::map<std::string, std::vector<std::string>> synonyms;
  std::string version;
};

class Taxonomy {
 public:
  static Taxonomy build(const HierarchySource& src, const LoadOptions& options = {});
  static Taxonomy from_rdf(const rdf::Graph& g, const LoadOptions& options = {});
  static Taxonomy from_tsv(std::string_view tsv, const LoadOptions& options = {});

  // Exact IRI (or known-prefix compact IRI) first, then normalized label.
  const TaxonomyNode& resolve_term(std::string_view label_or_iri, TermKind kind) const;
  const TaxonomyNode* find(std::string_view iri) const;
  const TaxonomyNode& node(std::string_view iri) const;

  bool is_leaf(const TaxonomyNode& n) const;
  // Root-to-parent path; for multi-parent nodes, the lexicographically
  // smallest such path.
  std::vector<std::string> ancestors(const TaxonomyNode& n) const;
  std::set<std::string> descendants(const TaxonomyNode& n) const;

  const std::map<std::string, TaxonomyNode>& nodes() const { return nodes_; }
  const std::vector<std::string>& roots(TermKind kind) const;
  std::size_t size() const { return nodes_.size(); }
  std::size_t count(TermKind kind) const;
  const std::string& version() const { return version_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  // All node labels of one kind, sorted, for prompt vocabularies.
  std::vector<std::string> labels(TermKind kind) const;

 private:
  const TaxonomyNode& checked(const TaxonomyNode& n) const;

  std::map<std::string, TaxonomyNode> nodes_;
  std::vector<std::string> data_roots_;
  std::vector<std::string> purpose_roots_;
  std::map<std::string, std::string> data_index_;
  std::map<std::string, std::string> purpose_index_;
  std::map<std::string, std::vector<std::string>> ancestor_paths_;
  std::string version_;
  std::vector<std::string> warnings_;
};

Taxonomy load_taxonomy(const std::filesystem::path& path, const LoadOptions& options = {});

// Expands dpv:, pd:, dpv-pd: compact IRIs; other input is returned unchanged.
std::string expand_known_prefix(std::string_view s);

}  // namespace ppa::taxonomy
