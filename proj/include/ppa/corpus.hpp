#pragma once

// Policy documents, line segmentation, and brat standoff gold annotations.
// All offsets are code point indices into the document text.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ppa::corpus {

struct Segment {
  std::size_t index = 0;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
  std::string text;

  bool operator==(const Segment&) const = default;
};

struct PolicyDocument {
  std::string service_id;
  std::string source_uri;
  std::string raw_text;
  std::vector<Segment> segments;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnreadableFileError : public CorpusError {
 public:
  using CorpusError::CorpusError;
};

// File is not UTF-8 text (invalid encoding or NUL bytes).
class NonTextError : public CorpusError {
 public:
  using CorpusError::CorpusError;
};

// One segment per line holding non-whitespace content; text is trimmed and the
// offsets cover the trimmed core. Lines are separated by '\n'.
std::vector<Segment> segment_lines(std::string_view raw_text);

std::string read_text_file(const std::filesystem::path& path);

PolicyDocument make_document(std::string raw_text, std::string service_id, std::string source_uri);
PolicyDocument load_policy(const std::filesystem::path& path, const std::string& service_id);

// ---------------------------------------------------------------------------
// brat standoff

struct Fragment {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const Fragment&) const = default;
};

struct GoldEntity {
  std::string id;    // "T3"
  std::string type;  // brat label, e.g. "data"
  std::size_t start = 0;  // covering span
  std::size_t end = 0;
  std::vector<Fragment> fragments;  // one entry unless discontinuous
  std::string text;                 // surface text as written in the .ann file
  std::optional<std::string> dpv_term;
  std::map<std::string, std::string> attributes;  // name -> value ("" for binary)
  std::vector<std::string> notes;

  bool discontinuous() const { return fragments.size() > 1; }
};

struct GoldEvent {
  std::string id;    // "E1"
  std::string type;  // e.g. "collection-use"
  std::string trigger_id;
  std::vector<std::pair<std::string, std::string>> roles;  // role label -> target id, file order
};

struct GoldRelation {
  std::string id;
  std::string label;
  std::string arg1;
  std::string arg2;
};

struct GoldAnnotationSet {
  std::string doc_id;
  std::vector<GoldEntity> entities;
  std::vector<GoldEvent> events;
  std::vector<GoldRelation> relations;

  const GoldEntity* entity(std::string_view id) const;
  const GoldEvent* event(std::string_view id) const;
};

class BratError : public CorpusError {
 public:
  using CorpusError::CorpusError;
};

class MalformedLineError : public BratError {
 public:
  MalformedLineError(std::size_t line_no, std::string content, const std::string& why)
      : BratError("malformed brat line " + std::to_string(line_no) + " (" + why + "): " + content),
        line_no_(line_no),
        content_(std::move(content)) {}
  std::size_t line_no() const { return line_no_; }
  const std::string& content() const { return content_; }

 private:
  std::size_t line_no_;
  std::string content_;
};

class DanglingReferenceError : public BratError {
 public:
  explicit DanglingReferenceError(std::vector<std::string> ids);
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
};

struct BratOptions {
  // Attribute names (compared after label normalization) whose values carry
  // fine-grained DPV groundings. Attributes whose value is a dpv:/pd: term or
  // a DPV IRI are accepted regardless of name.
  std::set<std::string> grounding_attributes = {"dpv", "dpvterm", "dpvclass", "grounding", "finegrained",
                                                "class", "term"};
  // Check each entity's surface text against the document at its span.
  bool verify_surface_text = true;
};

// True for "dpv:Marketing", "pd:EmailAddress", DPV IRIs and bare CamelCase
// identifiers such as "EmailAddress".
bool looks_like_dpv_term(std::string_view s);

GoldAnnotationSet parse_brat_text(std::string_view doc_text, std::string_view ann_text, std::string doc_id,
                                  const BratOptions& options = {});
GoldAnnotationSet parse_brat(const std::filesystem::path& text_file, const std::filesystem::path& ann_file,
                             const BratOptions& options = {});

// Text-bound (T) lines in brat syntax, one per entity, in set order.
std::string serialize_entity_lines(const GoldAnnotationSet& gold);

// Label inventory from a brat annotation.conf.
struct BratConfig {
  std::set<std::string> entities;
  std::set<std::string> events;
  std::set<std::string> relations;
  std::set<std::string> attributes;
};

BratConfig parse_brat_config(std::string_view conf_text);
BratConfig load_brat_config(const std::filesystem::path& path);
// Returns one message per label used in gold but absent from the inventory.
std::vector<std::string> validate_labels(const GoldAnnotationSet& gold, const BratConfig& config);

// ---------------------------------------------------------------------------
// segment alignment

struct AlignedEntity {
  GoldEntity entity;
  bool crosses_boundary = false;
};

struct GoldSlice {
  std::vector<AlignedEntity> entities;
  std::vector<GoldEvent> events;
  std::vector<GoldRelation> relations;
};

class AlignmentError : public CorpusError {
 public:
  explicit AlignmentError(std::vector<std::string> ids);
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  std::vector<std::string> ids_;
};

// Returns the segment containing offset, if any.
std::optional<std::size_t> segment_at(const PolicyDocument& doc, std::size_t offset);

// Entities map to the segment containing their span start, events to the
// segment containing their trigger, relations to the segment of arg1.
std::map<std::size_t, GoldSlice> align_gold(const GoldAnnotationSet& gold, const PolicyDocument& doc);

// A gold document: the text, its segmentation, and the aligned annotations.
struct GoldDocument {
  PolicyDocument doc;
  GoldAnnotationSet gold;
  std::map<std::size_t, GoldSlice> slices;
};

// Loads every <name>.txt / <name>.ann pair in a directory, sorted by name.
// If annotation.conf is present, label problems are appended to warnings.
std::vector<GoldDocument> load_gold_corpus(const std::filesystem::path& dir, std::vector<std::string>* warnings = nullptr,
                                           const BratOptions& options = {});

}  // namespace ppa::corpus
