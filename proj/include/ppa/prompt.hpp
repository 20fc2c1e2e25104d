#pragma once

// Per-task prompt construction: one system message describing the task and
// its output schema, one user message carrying the segment.

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ppa/types.hpp"

namespace ppa::prompt {

struct PromptMessages {
  std::string system;
  std::string user;
};

// An item handed to classification or relation prompts.
struct PromptEntity {
  std::string id;  // "e0", "a0"; unused by classification prompts
  SpanKind kind = SpanKind::Data;
  std::string subtype;
  std::string text;
};

struct PromptOptions {
  // Candidate term names listed in classification prompts. Empty means the
  // model is told to answer with DPV class names without a list.
  std::vector<std::string> vocabulary;
  // Event types the relation prompt offers.
  std::vector<std::string> roles = default_roles();
};

inline constexpr std::string_view kSegmentOpen = "<segment>";
inline constexpr std::string_view kSegmentClose = "</segment>";
inline constexpr std::string_view kEntitiesOpen = "<entities>";
inline constexpr std::string_view kEntitiesClose = "</entities>";

class MissingExtrasError : public std::invalid_argument {
 public:
  explicit MissingExtrasError(TaskKind task);
};

bool requires_extras(TaskKind task);

PromptMessages build_prompt(TaskKind task, std::string_view segment, const std::vector<PromptEntity>& extras = {},
                            const PromptOptions& options = {});

// "e0 | data | email address", "a0 | action:collection_use | collect"
std::string entity_line(const PromptEntity& e);

}  // namespace ppa::prompt
