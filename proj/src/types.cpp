#include "ppa/types.hpp"

#include "ppa/text.hpp"

namespace ppa {

std::string_view task_name(TaskKind t) {
  switch (t) {
    case TaskKind::DataRecognition: return "data_recognition";
    case TaskKind::PurposeRecognition: return "purpose_recognition";
    case TaskKind::PartyRecognition: return "party_recognition";
    case TaskKind::ActionRecognition: return "action_recognition";
    case TaskKind::DataClassification: return "data_classification";
    case TaskKind::PurposeClassification: return "purpose_classification";
    case TaskKind::RelationRecognition: return "relation_recognition";
  }
  return "unknown";
}

std::string_view task_code(TaskKind t) {
  switch (t) {
    case TaskKind::DataRecognition: return "DR";
    case TaskKind::PurposeRecognition: return "PR";
    case TaskKind::PartyRecognition: return "Party";
    case TaskKind::ActionRecognition: return "Action";
    case TaskKind::DataClassification: return "DC";
    case TaskKind::PurposeClassification: return "PC";
    case TaskKind::RelationRecognition: return "Relation";
  }
  return "?";
}

std::optional<TaskKind> parse_task(std::string_view s) {
  const auto lower = text::to_lower_ascii(text::trim(s));
  for (TaskKind t : kAllTasks)
    if (lower == task_name(t) || lower == text::to_lower_ascii(task_code(t))) return t;
  return std::nullopt;
}

std::string_view span_kind_name(SpanKind k) {
  switch (k) {
    case SpanKind::Data: return "data";
    case SpanKind::Purpose: return "purpose";
    case SpanKind::Party: return "party";
    case SpanKind::Action: return "action";
  }
  return "?";
}

std::optional<SpanKind> parse_span_kind(std::string_view s) {
  for (SpanKind k : {SpanKind::Data, SpanKind::Purpose, SpanKind::Party, SpanKind::Action})
    if (s == span_kind_name(k)) return k;
  return std::nullopt;
}

const std::vector<std::string>& allowed_subtypes(SpanKind kind) {
  static const std::vector<std::string> kNone;
  static const std::vector<std::string> kParty = {std::string(subtype::kFirstParty), std::string(subtype::kThirdParty),
                                                  std::string(subtype::kUser)};
  static const std::vector<std::string> kAction = {
      std::string(subtype::kCollectionUse), std::string(subtype::kThirdPartySharing),
      std::string(subtype::kStorageRetention), std::string(subtype::kSecurityProtection)};
  if (kind == SpanKind::Party) return kParty;
  if (kind == SpanKind::Action) return kAction;
  return kNone;
}

std::optional<std::string> canonical_subtype(SpanKind kind, std::string_view raw) {
  const std::string key = text::normalize_label(raw);
  if (key.empty()) return std::nullopt;
  for (const auto& s : allowed_subtypes(kind))
    if (key == text::normalize_label(s)) return s;
  auto has = [&](std::string_view needle) { return key.find(needle) != std::string::npos; };
  if (kind == SpanKind::Party) {
    if (has("first") || has("1st") || key == "company" || key == "service") return std::string(subtype::kFirstParty);
    if (has("third") || has("3rd") || has("external") || has("partner")) return std::string(subtype::kThirdParty);
    if (has("user") || has("datasubject") || has("customer") || has("individual")) return std::string(subtype::kUser);
  } else if (kind == SpanKind::Action) {
    if (has("shar") || has("disclos")) return std::string(subtype::kThirdPartySharing);
    if (has("collect") || has("use") || has("usage")) return std::string(subtype::kCollectionUse);
    if (has("stor") || has("retent") || has("delet")) return std::string(subtype::kStorageRetention);
    if (has("secur") || has("protect")) return std::string(subtype::kSecurityProtection);
  }
  return std::nullopt;
}

std::vector<std::string> default_roles() {
  return {std::string(role::kHasData), std::string(role::kHasPurpose), std::string(role::kPerformedBy),
          std::string(role::kDataProvidedBy), std::string(role::kDataSharedWith)};
}

}  // namespace ppa
