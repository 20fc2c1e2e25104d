#pragma once

// Recovery of structured answers from free-form model responses.
//
// Stages, applied in order:
//   1. code-fence and prose stripping: the first bracketed region is taken
//      (candidates are tried in order if an earlier one does not parse);
//   2. structural repair of that region: unbalanced brackets are closed,
//      trailing/duplicate commas removed, single-quoted strings and bare keys
//      or values quoted, Python literals mapped, missing commas/colons added;
//   3. key normalization against the expected shape (case-insensitive plus a
//      synonym table per field and for the wrapping list key);
//   4. when no bracketed region exists, non-empty lines become list entries
//      (only for shapes that allow it).
// Refusal phrases ("none", "no entities found", "N/A", ...) yield an empty list.

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ppa/types.hpp"

namespace ppa::repair {

struct FieldSpec {
  std::string name;
  std::vector<std::string> synonyms;
  bool required = false;
};

struct ExpectedShape {
  enum class Kind { StringList, ObjectList };
  Kind kind = Kind::StringList;
  std::string list_key;
  std::vector<std::string> list_key_synonyms;
  std::vector<FieldSpec> fields;  // ObjectList only; fields[0] is the primary field
  bool line_fallback = true;

  static ExpectedShape string_list(std::string list_key, std::vector<std::string> synonyms = {});
};

ExpectedShape shape_for(TaskKind task);

class RefusalTable {
 public:
  RefusalTable();  // built-in phrases
  explicit RefusalTable(std::vector<std::string> phrases);

  bool is_refusal(std::string_view response) const;
  const std::vector<std::string>& phrases() const { return phrases_; }

 private:
  std::vector<std::string> phrases_;  // normalized
};

struct RepairResult {
  nlohmann::json value;  // always a JSON array
  std::vector<std::string> repairs;  // names of the repairs that fired, in order
};

class OutputParseError : public std::runtime_error {
 public:
  OutputParseError(const std::string& why, std::string raw)
      : std::runtime_error("unparseable model output: " + why), raw_(std::move(raw)) {}
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

RepairResult repair_and_parse(std::string_view raw, const ExpectedShape& shape,
                              const RefusalTable& refusals = RefusalTable());

// Stage 2 on its own: returns repaired JSON text for the bracketed region
// starting at `start`, and appends fired repairs.
std::string repair_json_region(std::string_view text, std::size_t start, std::vector<std::string>& repairs);

}  // namespace ppa::repair
