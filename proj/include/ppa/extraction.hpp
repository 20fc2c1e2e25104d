#pragma once

// Per-segment orchestration of the seven extraction tasks.
//
// For each segment: data, purpose, party and action recognition; then, only
// if something was recognized, data and purpose classification against the
// taxonomy; then relation recognition over the id-labeled spans when the
// segment has at least one action and one other span.

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppa/backend.hpp"
#include "ppa/corpus.hpp"
#include "ppa/prompt.hpp"
#include "ppa/repair.hpp"
#include "ppa/taxonomy.hpp"
#include "ppa/types.hpp"

namespace ppa::extraction {

// One backend call as retained for audit.
struct TaskCall {
  TaskKind task = TaskKind::DataRecognition;
  std::string key;
  std::string raw;  // verbatim, also when parsing failed
  bool from_cache = false;
  int attempts = 0;
  std::vector<std::string> repairs;
  std::optional<std::string> error;
};

struct SegmentExtraction {
  std::size_t segment_index = 0;
  std::string text;
  std::vector<EntitySpan> spans;  // entities e0.. then actions a0..
  std::vector<RelationTuple> relations;
  std::vector<TaskCall> calls;
  std::vector<std::string> errors;
  std::vector<nlohmann::json> events;  // skip / drop decisions
  bool failed = false;

  const EntitySpan* span(std::string_view local_id) const;
};

struct ExtractionResult {
  std::string service_id;
  std::string source_uri;
  std::vector<SegmentExtraction> segments;
  bool failed = false;

  // Keys sorted, stable field order; equal results give equal text.
  nlohmann::json to_json() const;
  std::string canonical() const { return to_json().dump(2); }
};

struct ExtractOptions {
  std::size_t jobs = 1;
  std::vector<std::string> roles = default_roles();
  repair::RefusalTable refusals;
  // List taxonomy class names in classification prompts.
  bool vocabulary_in_prompt = true;
};

class ExtractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Prompt entity for a span (id, kind, subtype, text).
prompt::PromptEntity to_prompt_entity(const EntitySpan& span);

struct ClassificationOutcome {
  std::vector<EntitySpan> spans;
  std::optional<TaskCall> call;  // absent when there was nothing to classify
  std::vector<nlohmann::json> events;
};

// Grounds every span of the given kind; spans of other kinds pass through.
ClassificationOutcome classify_entities(taxonomy::TermKind kind, std::vector<EntitySpan> spans,
                                        const corpus::Segment& segment, backend::Backend& backend,
                                        const taxonomy::Taxonomy& taxonomy, const ExtractOptions& options = {});

SegmentExtraction extract_segment(const corpus::Segment& segment, backend::Backend& backend,
                                  const taxonomy::Taxonomy& taxonomy, const ExtractOptions& options = {});

// Throws ExtractionError only when every segment failed.
ExtractionResult extract_document(const corpus::PolicyDocument& doc, backend::Backend& backend,
                                  const taxonomy::Taxonomy& taxonomy, const ExtractOptions& options = {});

// Lenient variant used by the CLI: never throws for failed documents, the
// result's failed flag is set instead.
ExtractionResult extract_document_nothrow(const corpus::PolicyDocument& doc, backend::Backend& backend,
                                          const taxonomy::Taxonomy& taxonomy, const ExtractOptions& options = {});

// JSON Lines: one record per backend call and per skip/drop decision, in
// segment order.
std::vector<nlohmann::json> audit_records(const ExtractionResult& result);
void write_audit_log(const ExtractionResult& result, const std::filesystem::path& path);

// True if text occurs in segment exactly or after case folding and
// whitespace collapsing.
bool occurs_in(std::string_view text, std::string_view segment);

}  // namespace ppa::extraction
