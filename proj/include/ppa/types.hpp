#pragma once

// Shared vocabulary of the extraction pipeline.

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ppa {

enum class TaskKind {
  DataRecognition,
  PurposeRecognition,
  PartyRecognition,
  ActionRecognition,
  DataClassification,
  PurposeClassification,
  RelationRecognition,
};

inline constexpr std::array<TaskKind, 7> kAllTasks = {
    TaskKind::DataRecognition,       TaskKind::PurposeRecognition,    TaskKind::PartyRecognition,
    TaskKind::ActionRecognition,     TaskKind::DataClassification,    TaskKind::PurposeClassification,
    TaskKind::RelationRecognition,
};

// Stable snake_case name used in cache keys and file formats.
std::string_view task_name(TaskKind t);
// Column label used in benchmark tables (DR, DC, PR, PC, Party, Action, Relation).
std::string_view task_code(TaskKind t);
// Accepts either form, case-insensitively.
std::optional<TaskKind> parse_task(std::string_view s);

enum class SpanKind { Data, Purpose, Party, Action };

std::string_view span_kind_name(SpanKind k);
std::optional<SpanKind> parse_span_kind(std::string_view s);

namespace subtype {
inline constexpr std::string_view kFirstParty = "first_party";
inline constexpr std::string_view kThirdParty = "third_party";
inline constexpr std::string_view kUser = "user";
inline constexpr std::string_view kCollectionUse = "collection_use";
inline constexpr std::string_view kThirdPartySharing = "third_party_sharing_disclosure";
inline constexpr std::string_view kStorageRetention = "storage_retention_deletion";
inline constexpr std::string_view kSecurityProtection = "security_protection";
}  // namespace subtype

// Maps loose model output ("1st party", "Third-Party", "sharing") onto the
// canonical subtype for the kind; nullopt when nothing matches.
std::optional<std::string> canonical_subtype(SpanKind kind, std::string_view raw);
const std::vector<std::string>& allowed_subtypes(SpanKind kind);

namespace role {
inline constexpr std::string_view kHasData = "HAS_DATA";
inline constexpr std::string_view kHasPurpose = "HAS_PURPOSE";
inline constexpr std::string_view kPerformedBy = "PERFORMED_BY";
inline constexpr std::string_view kDataProvidedBy = "DATA_PROVIDED_BY";
inline constexpr std::string_view kDataSharedWith = "DATA_SHARED_WITH";
}  // namespace role

std::vector<std::string> default_roles();

struct EntitySpan {
  std::string local_id;  // "e0", "e1", ... for entities, "a0", ... for actions
  SpanKind kind = SpanKind::Data;
  std::string text;
  std::size_t segment_index = 0;
  std::string subtype;  // empty when absent; always set for actions
  std::optional<std::string> grounded_term;
  std::optional<std::string> unresolved_term;  // prediction that did not resolve
  bool non_leaf = false;
  bool non_verbatim = false;

  bool operator==(const EntitySpan&) const = default;
};

struct RelationTuple {
  std::string subject_id;
  std::string object_id;
  std::string event_type;

  bool operator==(const RelationTuple&) const = default;
};

}  // namespace ppa
