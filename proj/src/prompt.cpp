#include "ppa/prompt.hpp"

#include <sstream>

namespace ppa::prompt {

MissingExtrasError::MissingExtrasError(TaskKind task)
    : std::invalid_argument("task " + std::string(task_name(task)) + " needs a non-empty entity list") {}

bool requires_extras(TaskKind task) {
  return task == TaskKind::DataClassification || task == TaskKind::PurposeClassification ||
         task == TaskKind::RelationRecognition;
}

std::string entity_line(const PromptEntity& e) {
  std::string kind(span_kind_name(e.kind));
  if (!e.subtype.empty()) kind += ":" + e.subtype;
  return e.id + " | " + kind + " | " + e.text;
}

namespace {

constexpr std::string_view kRole =
    "You are an assistant that analyzes privacy policies of online services and extracts structured information "
    "about how they handle personal data.";

constexpr std::string_view kRecognitionSchema =
    "Answer with a single JSON object and nothing else, of the form\n"
    "{\"entities\": [{\"text\": \"<exact span from the segment>\"}]}\n";

constexpr std::string_view kCommonRules =
    "Copy each span exactly as it appears in the segment, without rephrasing, and list each distinct span once.\n"
    "If the segment contains nothing relevant, answer {\"entities\": []}.\n";

void boundary_note(std::ostringstream& s) {
  s << "The input has two parts. The policy segment is enclosed between " << kSegmentOpen << " and " << kSegmentClose
    << ". The items to process are enclosed between " << kEntitiesOpen << " and " << kEntitiesClose
    << ", one per line.\n";
}

std::string system_for(TaskKind task, const PromptOptions& options) {
  std::ostringstream s;
  s << kRole << "\n\n";
  switch (task) {
    case TaskKind::DataRecognition:
      s << "Task: data entity recognition. The user message is one segment of a privacy policy. Identify the text "
           "spans naming types of personal data that the service collects, uses, stores, shares or protects, such "
           "as \"email address\" or \"location information\".\n\n"
        << kRecognitionSchema << "\n"
        << kCommonRules
        << "Do not include the verb or the possessive (\"your\") unless it is part of the data name. Do not report "
           "parties or purposes as data.\n";
      break;
    case TaskKind::PurposeRecognition:
      s << "Task: purpose entity recognition. The user message is one segment of a privacy policy. Identify the text "
           "spans stating why personal data is processed, such as \"to send newsletters\" or \"for analytics\".\n\n"
        << kRecognitionSchema << "\n"
        << kCommonRules << "Report the purpose phrase only, not the data it applies to.\n";
      break;
    case TaskKind::PartyRecognition:
      s << "Task: party entity recognition. The user message is one segment of a privacy policy. Identify the text "
           "spans naming parties involved in data handling and classify each as first_party (the service or "
           "company itself, e.g. \"we\"), third_party (any other organization) or user (the person whose data is "
           "handled, e.g. \"you\").\n\n"
        << "Answer with a single JSON object and nothing else, of the form\n"
        << "{\"entities\": [{\"text\": \"<exact span>\", \"subtype\": \"first_party|third_party|user\"}]}\n\n"
        << kCommonRules;
      break;
    case TaskKind::ActionRecognition:
      s << "Task: data practice recognition. The user message is one segment of a privacy policy. Identify the "
           "words (usually verbs) that describe a data practice and classify each as collection_use (first-party "
           "or third-party data collection or use), third_party_sharing_disclosure (data given to another party), "
           "storage_retention_deletion (keeping or deleting data) or security_protection (protecting data).\n\n"
        << "Answer with a single JSON object and nothing else, of the form\n"
        << "{\"entities\": [{\"text\": \"<exact span>\", \"subtype\": \"collection_use|third_party_sharing_disclosure|"
           "storage_retention_deletion|security_protection\"}]}\n\n"
        << kCommonRules << "Every item must carry a subtype.\n";
      break;
    case TaskKind::DataClassification:
    case TaskKind::PurposeClassification: {
      const bool data = task == TaskKind::DataClassification;
      s << "Task: " << (data ? "data" : "purpose") << " entity classification. ";
      boundary_note(s);
      s << "For each " << (data ? "data" : "purpose") << " entity, choose the canonical "
        << (data ? "personal data category" : "purpose") << " from the Data Privacy Vocabulary (DPV) that best "
        << "matches its meaning in the segment.\n\n"
        << "Answer with a single JSON object and nothing else, of the form\n"
        << "{\"classifications\": [{\"entity_text\": \"<entity as given>\", \"term\": \"<DPV class name>\"}]}\n\n"
        << "Give exactly one term per entity, written as the DPV class name (for example \""
        << (data ? "EmailAddress" : "ServiceProvision") << "\").\n";
      if (!data)
        s << "Purposes form a hierarchy; predict the most specific (leaf) class that applies rather than a general "
             "parent class.\n";
      if (!options.vocabulary.empty()) {
        s << "Choose only from these class names:\n";
        for (std::size_t i = 0; i < options.vocabulary.size(); ++i) s << (i ? ", " : "") << options.vocabulary[i];
        s << "\n";
      }
      break;
    }
    case TaskKind::RelationRecognition: {
      s << "Task: relation recognition. ";
      boundary_note(s);
      s << "Each item line has the form \"ID | kind | text\"; data practices have kind action:<subtype>. Link each "
           "data practice (action) to the items that take part in it. Use these event types:\n"
           "HAS_DATA: the action handles the data item.\n"
           "HAS_PURPOSE: the action is done for the purpose item.\n"
           "PERFORMED_BY: the party item performs the action.\n"
           "DATA_PROVIDED_BY: the party item provides the data used by the action.\n"
           "DATA_SHARED_WITH: the party item receives the data in the action.\n";
      bool extra = false;
      for (const auto& r : options.roles) {
        if (r == role::kHasData || r == role::kHasPurpose || r == role::kPerformedBy || r == role::kDataProvidedBy ||
            r == role::kDataSharedWith)
          continue;
        if (!extra) s << "Additional event types: ";
        s << (extra ? ", " : "") << r;
        extra = true;
      }
      if (extra) s << "\n";
      s << "\nReturn tuples of (ID1, ID2, EventType) where ID1 is the action ID and ID2 the related item ID, as a "
           "single JSON object and nothing else, of the form\n"
           "{\"relations\": [{\"id1\": \"a0\", \"id2\": \"e0\", \"type\": \"HAS_DATA\"}]}\n\n"
           "Use only the IDs listed. If no relation holds, answer {\"relations\": []}.\n";
      break;
    }
  }
  return s.str();
}

}  // namespace

PromptMessages build_prompt(TaskKind task, std::string_view segment, const std::vector<PromptEntity>& extras,
                            const PromptOptions& options) {
  if (requires_extras(task) && extras.empty()) throw MissingExtrasError(task);
  PromptMessages m;
  m.system = system_for(task, options);
  if (!requires_extras(task)) {
    m.user = std::string(segment);
    return m;
  }
  std::ostringstream u;
  u << kSegmentOpen << "\n" << segment << "\n" << kSegmentClose << "\n" << kEntitiesOpen << "\n";
  for (const auto& e : extras) {
    if (task == TaskKind::RelationRecognition) u << entity_line(e) << "\n";
    else u << e.text << "\n";
  }
  u << kEntitiesClose;
  m.user = u.str();
  return m;
}

}  // namespace ppa::prompt
