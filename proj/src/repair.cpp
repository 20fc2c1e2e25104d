#include "ppa/repair.hpp"

#include <algorithm>
#include <cctype>

#include "ppa/text.hpp"

namespace ppa::repair {

using nlohmann::json;

ExpectedShape ExpectedShape::string_list(std::string list_key, std::vector<std::string> synonyms) {
  ExpectedShape s;
  s.kind = Kind::StringList;
  s.list_key = std::move(list_key);
  s.list_key_synonyms = std::move(synonyms);
  return s;
}

ExpectedShape shape_for(TaskKind task) {
  ExpectedShape s;
  s.kind = ExpectedShape::Kind::ObjectList;
  const FieldSpec text_field{"text", {"entity", "span", "name", "value", "entity_text", "phrase", "mention"}, true};
  const FieldSpec subtype_field{"subtype", {"type", "party_type", "action_type", "category", "label", "class", "kind"},
                                false};
  switch (task) {
    case TaskKind::DataRecognition:
    case TaskKind::PurposeRecognition:
    case TaskKind::PartyRecognition:
    case TaskKind::ActionRecognition:
      s.list_key = "entities";
      s.list_key_synonyms = {"data_entities", "purpose_entities", "party_entities", "action_entities", "data",
                             "purposes", "parties", "actions", "spans", "results", "items", "output"};
      s.fields = {text_field, subtype_field};
      if (task == TaskKind::ActionRecognition) s.fields[1].required = true;
      s.line_fallback = task != TaskKind::ActionRecognition;
      break;
    case TaskKind::DataClassification:
    case TaskKind::PurposeClassification:
      s.list_key = "classifications";
      s.list_key_synonyms = {"results", "entities", "items", "terms", "mappings", "output", "groundings"};
      s.fields = {FieldSpec{"entity_text", {"entity", "text", "span", "mention", "name"}, true},
                  FieldSpec{"term",
                            {"dpv_term", "dpv", "class", "category", "label", "iri", "grounding", "canonical",
                             "dpv_class", "concept"},
                            true}};
      s.line_fallback = false;
      break;
    case TaskKind::RelationRecognition:
      s.list_key = "relations";
      s.list_key_synonyms = {"tuples", "results", "items", "relationships", "edges", "output"};
      s.fields = {FieldSpec{"id1", {"id_1", "subject", "source", "from", "head", "action_id", "first"}, true},
                  FieldSpec{"id2", {"id_2", "object", "target", "to", "tail", "entity_id", "second"}, true},
                  FieldSpec{"type", {"event_type", "eventtype", "relation", "relation_type", "role", "label"}, true}};
      s.line_fallback = false;
      break;
  }
  return s;
}

namespace {

std::string refusal_key(std::string_view s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      if (space && !out.empty()) out.push_back(' ');
      space = false;
      out.push_back(static_cast<char>(std::tolower(u)));
    } else {
      space = true;
    }
  }
  return out;
}

std::size_t word_count(std::string_view s) {
  return s.empty() ? 0 : static_cast<std::size_t>(std::count(s.begin(), s.end(), ' ')) + 1;
}

}  // namespace

RefusalTable::RefusalTable()
    : RefusalTable({"none", "none found", "no entities", "no entities found", "no entity", "no data entities",
                    "no purpose entities", "no purposes", "no parties", "no party", "no actions", "no relations",
                    "no relation", "no tuples", "no data", "no results", "no matches", "n/a", "na", "nothing",
                    "nothing found", "empty", "null", "nil", "not applicable", "there are no", "there is no",
                    "there are none", "no relevant"}) {}

RefusalTable::RefusalTable(std::vector<std::string> phrases) {
  for (auto& p : phrases) {
    auto k = refusal_key(p);
    if (!k.empty()) phrases_.push_back(std::move(k));
  }
}

bool RefusalTable::is_refusal(std::string_view response) const {
  const std::string key = refusal_key(response);
  if (key.empty()) return false;
  for (const auto& p : phrases_) {
    if (key == p) return true;
    // Multi-word phrases also match as a prefix of a short sentence.
    if (word_count(p) >= 2 && key.size() > p.size() && key.compare(0, p.size(), p) == 0 && key[p.size()] == ' ' &&
        word_count(key) <= 12)
      return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Stage 2: structural repair

namespace {

void note(std::vector<std::string>& repairs, std::string_view what) {
  if (std::find(repairs.begin(), repairs.end(), what) == repairs.end()) repairs.emplace_back(what);
}

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool is_delim(char c) { return c == ',' || c == ':' || c == ']' || c == '}' || c == ')' || c == '[' || c == '{'; }

class RegionRepairer {
 public:
  RegionRepairer(std::string_view s, std::vector<std::string>& repairs) : s_(s), repairs_(repairs) {}

  std::string run(std::size_t start) {
    i_ = start;
    while (i_ < s_.size()) {
      const char c = s_[i_];
      if (is_ws(c)) {
        ++i_;
        continue;
      }
      if (c == '/' && i_ + 1 < s_.size() && (s_[i_ + 1] == '/' || s_[i_ + 1] == '*')) {
        skip_comment();
        continue;
      }
      if (c == '{' || c == '[' || c == '(') {
        open(c);
      } else if (c == '}' || c == ']' || c == ')') {
        if (close(c)) return finish_trailing();
      } else if (c == ',') {
        comma();
      } else if (c == ':') {
        colon();
      } else if (c == '"' || c == '\'' || c == '\xE2') {
        if (c == '\xE2' && !smart_quote_at(i_)) {
          bare();
        } else {
          string_token();
        }
      } else {
        bare();
      }
      if (stack_.empty()) return finish_trailing();
    }
    // Input exhausted with open brackets.
    while (!stack_.empty()) {
      note(repairs_, "closed_brackets");
      close_top();
    }
    return out_;
  }

 private:
  enum class State { Key, Colon, Value, Comma };
  struct Frame {
    bool object;
    State state;
  };

  std::string finish_trailing() {
    std::size_t j = i_;
    while (j < s_.size() && is_ws(s_[j])) ++j;
    if (j < s_.size()) note(repairs_, "stripped_trailing_text");
    return out_;
  }

  void skip_comment() {
    note(repairs_, "removed_comments");
    if (s_[i_ + 1] == '/') {
      while (i_ < s_.size() && s_[i_] != '\n') ++i_;
    } else {
      auto end = s_.find("*/", i_ + 2);
      i_ = end == std::string_view::npos ? s_.size() : end + 2;
    }
  }

  bool smart_quote_at(std::size_t i) const {
    // U+201C / U+201D / U+2018 / U+2019 are E2 80 9C / 9D / 98 / 99.
    return i + 2 < s_.size() && s_[i + 1] == '\x80' &&
           (s_[i + 2] == '\x9C' || s_[i + 2] == '\x9D' || s_[i + 2] == '\x98' || s_[i + 2] == '\x99');
  }

  // Prepare for a value or key token in the current frame.
  // Returns true if the token is an object key.
  bool before_token() {
    if (stack_.empty()) return false;
    Frame& f = stack_.back();
    if (f.object) {
      switch (f.state) {
        case State::Key: return true;
        case State::Colon:
          note(repairs_, "inserted_colon");
          out_ += ':';
          f.state = State::Value;
          return false;
        case State::Value: return false;
        case State::Comma:
          note(repairs_, "inserted_comma");
          out_ += ',';
          f.state = State::Key;
          return true;
      }
    } else if (f.state == State::Comma) {
      note(repairs_, "inserted_comma");
      out_ += ',';
      f.state = State::Value;
    }
    return false;
  }

  void after_token(bool was_key) {
    if (stack_.empty()) return;
    Frame& f = stack_.back();
    f.state = was_key ? State::Colon : State::Comma;
  }

  void open(char c) {
    const bool is_key = before_token();
    if (is_key) {
      // A bracket where a key belongs: treat the object as holding a list.
      note(repairs_, "inserted_key");
      out_ += "\"items\":";
      stack_.back().state = State::Value;
    }
    if (c == '(') note(repairs_, "parenthesized_tuple");
    const bool object = c == '{';
    out_ += object ? '{' : '[';
    stack_.push_back(Frame{object, object ? State::Key : State::Value});
    ++i_;
  }

  void drop_trailing_comma() {
    if (!out_.empty() && out_.back() == ',') {
      out_.pop_back();
      note(repairs_, "removed_trailing_comma");
    }
  }

  void close_top() {
    drop_trailing_comma();
    Frame f = stack_.back();
    if (f.object && f.state == State::Colon) {
      out_ += ":null";
      note(repairs_, "filled_missing_value");
    } else if (f.object && f.state == State::Value) {
      out_ += "null";
      note(repairs_, "filled_missing_value");
    }
    out_ += f.object ? '}' : ']';
    stack_.pop_back();
    after_token(false);
  }

  // Returns true when the outermost bracket has closed.
  bool close(char c) {
    ++i_;
    if (stack_.empty()) return true;
    const bool want_object = stack_.back().object;
    const bool got_object = c == '}';
    if (want_object != got_object && c != ')') note(repairs_, "fixed_mismatched_bracket");
    close_top();
    return stack_.empty();
  }

  void comma() {
    ++i_;
    if (stack_.empty()) return;
    Frame& f = stack_.back();
    const bool after_value = f.state == State::Comma;
    if (!after_value) {
      note(repairs_, "removed_extra_comma");
      return;
    }
    out_ += ',';
    f.state = f.object ? State::Key : State::Value;
  }

  void colon() {
    ++i_;
    if (stack_.empty()) return;
    Frame& f = stack_.back();
    if (f.object && f.state == State::Colon) {
      out_ += ':';
      f.state = State::Value;
    } else {
      note(repairs_, "removed_stray_colon");
    }
  }

  static void append_json_char(std::string& o, char c) {
    switch (c) {
      case '"': o += "\\\""; break;
      case '\\': o += "\\\\"; break;
      case '\n': o += "\\n"; break;
      case '\r': o += "\\r"; break;
      case '\t': o += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          static constexpr char kHex[] = "0123456789abcdef";
          o += "\\u00";
          o.push_back(kHex[(c >> 4) & 0xF]);
          o.push_back(kHex[c & 0xF]);
        } else {
          o.push_back(c);
        }
    }
  }

  // True if a quote at position j (of width w) closes the current string.
  bool closes_here(std::size_t j, std::size_t w) const {
    std::size_t k = j + w;
    while (k < s_.size() && is_ws(s_[k])) ++k;
    if (k >= s_.size()) return true;
    const char n = s_[k];
    if (is_delim(n)) return true;
    // A following quote means a missing comma between two strings.
    if (n == '"' || (n == '\'' && k > j + w)) return true;
    return false;
  }

  void string_token() {
    const bool is_key = before_token();
    std::size_t quote_width = 1;
    char q = s_[i_];
    bool smart = false;
    if (q == '\xE2') {
      smart = true;
      quote_width = 3;
      note(repairs_, "normalized_smart_quotes");
    } else if (q == '\'') {
      note(repairs_, "converted_single_quotes");
    }
    std::size_t j = i_ + quote_width;
    std::string body;
    bool closed = false;
    while (j < s_.size()) {
      const char c = s_[j];
      if (c == '\\' && j + 1 < s_.size()) {
        const char e = s_[j + 1];
        switch (e) {
          case '"': body += '"'; break;
          case '\'': body += '\''; break;
          case '\\': body += '\\'; break;
          case '/': body += '/'; break;
          case 'n': body += '\n'; break;
          case 't': body += '\t'; break;
          case 'r': body += '\r'; break;
          case 'b': body += '\b'; break;
          case 'f': body += '\f'; break;
          case 'u': {
            if (j + 5 < s_.size()) {
              char32_t cp = 0;
              bool ok = true;
              for (std::size_t h = j + 2; h < j + 6; ++h) {
                const char d = s_[h];
                cp <<= 4;
                if (d >= '0' && d <= '9') cp |= static_cast<char32_t>(d - '0');
                else if (d >= 'a' && d <= 'f') cp |= static_cast<char32_t>(d - 'a' + 10);
                else if (d >= 'A' && d <= 'F') cp |= static_cast<char32_t>(d - 'A' + 10);
                else ok = false;
              }
              if (ok && !(cp >= 0xD800 && cp <= 0xDFFF)) {
                text::append_utf8(body, cp);
                j += 6;
                continue;
              }
            }
            body += "\\u";
            break;
          }
          default:
            body += '\\';
            body += e;
        }
        j += 2;
        continue;
      }
      const bool is_close_quote = smart ? smart_quote_at(j) : c == q;
      if (is_close_quote && closes_here(j, quote_width)) {
        j += quote_width;
        closed = true;
        break;
      }
      if (is_close_quote && !smart && q == '"') note(repairs_, "escaped_inner_quote");
      body += c;
      ++j;
    }
    if (!closed) note(repairs_, "closed_string");
    i_ = j;
    out_ += '"';
    for (char c : body) append_json_char(out_, c);
    out_ += '"';
    after_token(is_key);
  }

  void bare() {
    const bool is_key = before_token();
    if (is_key) {
      std::size_t j = i_;
      while (j < s_.size() && s_[j] != ':' && s_[j] != ',' && s_[j] != '}' && s_[j] != '{' && s_[j] != '\n') ++j;
      std::string key(text::trim(s_.substr(i_, j - i_)));
      i_ = j;
      note(repairs_, "quoted_bare_key");
      out_ += '"';
      for (char c : key) append_json_char(out_, c);
      out_ += '"';
      after_token(true);
      return;
    }
    std::size_t j = i_;
    while (j < s_.size() && s_[j] != ',' && s_[j] != ']' && s_[j] != '}' && s_[j] != ')' && s_[j] != '\n' &&
           !(s_[j] == ':' && !stack_.empty() && stack_.back().object))
      ++j;
    std::string word(text::trim(s_.substr(i_, j - i_)));
    i_ = j;
    if (word.empty()) {
      ++i_;
      return;
    }
    if (word == "true" || word == "false" || word == "null") {
      out_ += word;
    } else if (word == "True" || word == "False") {
      note(repairs_, "mapped_python_literal");
      out_ += word == "True" ? "true" : "false";
    } else if (word == "None" || word == "undefined" || word == "NaN") {
      note(repairs_, "mapped_python_literal");
      out_ += "null";
    } else if (is_number(word)) {
      out_ += word;
    } else {
      note(repairs_, "quoted_bare_value");
      out_ += '"';
      for (char c : word) append_json_char(out_, c);
      out_ += '"';
    }
    after_token(false);
  }

  static bool is_number(std::string_view w) {
    try {
      auto v = json::parse(w);
      return v.is_number();
    } catch (const json::exception&) {
      return false;
    }
  }

  std::string_view s_;
  std::vector<std::string>& repairs_;
  std::size_t i_ = 0;
  std::string out_;
  std::vector<Frame> stack_;
};

}  // namespace

std::string repair_json_region(std::string_view text, std::size_t start, std::vector<std::string>& repairs) {
  return RegionRepairer(text, repairs).run(start);
}

// ---------------------------------------------------------------------------
// Stage 3: shape normalization

namespace {

bool key_matches(const std::string& key, const std::string& name, const std::vector<std::string>& synonyms) {
  const auto k = text::normalize_label(key);
  if (k == text::normalize_label(name)) return true;
  return std::any_of(synonyms.begin(), synonyms.end(),
                     [&](const std::string& s) { return k == text::normalize_label(s); });
}

std::string scalar_to_string(const json& v) {
  if (v.is_string()) return std::string(text::trim(v.get<std::string>()));
  if (v.is_number() || v.is_boolean()) return v.dump();
  return {};
}

class Normalizer {
 public:
  Normalizer(const ExpectedShape& shape, const RefusalTable& refusals, std::vector<std::string>& repairs)
      : shape_(shape), refusals_(refusals), repairs_(repairs) {}

  json normalize(const json& v) {
    json items = locate_list(v);
    json out = json::array();
    for (const auto& item : items) {
      json norm = shape_.kind == ExpectedShape::Kind::StringList ? as_string_item(item) : as_object_item(item);
      if (!norm.is_null()) out.push_back(std::move(norm));
    }
    return out;
  }

 private:
  json locate_list(const json& v) {
    if (v.is_array()) return v;
    if (v.is_null()) return json::array();
    if (v.is_string()) {
      if (refusals_.is_refusal(v.get<std::string>())) {
        note(repairs_, "refusal_phrase");
        return json::array();
      }
      note(repairs_, "wrapped_single_item");
      return json::array({v});
    }
    if (!v.is_object()) throw OutputParseError("unexpected top-level value " + v.dump(), v.dump());
    if (v.empty()) return json::array();

    for (auto it = v.begin(); it != v.end(); ++it) {
      if (!key_matches(it.key(), shape_.list_key, shape_.list_key_synonyms)) continue;
      if (text::normalize_label(it.key()) != text::normalize_label(shape_.list_key)) note(repairs_, "normalized_keys");
      const json& inner = it.value();
      if (inner.is_array()) return inner;
      if (inner.is_null()) return json::array();
      if (inner.is_object() && !looks_like_item(inner)) return locate_list(inner);
      note(repairs_, "wrapped_single_item");
      return inner.is_string() && refusals_.is_refusal(inner.get<std::string>()) ? json::array()
                                                                                    : json::array({inner});
    }
    if (looks_like_item(v)) {
      note(repairs_, "wrapped_single_item");
      return json::array({v});
    }
    const json* sole = nullptr;
    std::size_t arrays = 0;
    for (const auto& [k, val] : v.items()) {
      if (val.is_array()) {
        ++arrays;
        sole = &val;
      }
    }
    if (arrays == 1) {
      note(repairs_, "guessed_list_key");
      return *sole;
    }
    throw OutputParseError("object does not use the expected schema", v.dump());
  }

  bool looks_like_item(const json& obj) const {
    if (!obj.is_object()) return false;
    if (shape_.kind == ExpectedShape::Kind::StringList) return false;
    for (const auto& [k, val] : obj.items())
      if (key_matches(k, shape_.fields.front().name, shape_.fields.front().synonyms)) return true;
    return false;
  }

  json as_string_item(const json& item) {
    if (item.is_string()) {
      auto s = scalar_to_string(item);
      if (s.empty() || refusals_.is_refusal(s)) return nullptr;
      return s;
    }
    if (item.is_number()) return item.dump();
    if (item.is_object()) {
      std::string first_string;
      for (const auto& [k, val] : item.items()) {
        if (!val.is_string()) continue;
        if (key_matches(k, "text", {"entity", "span", "name", "value", "entity_text"})) {
          note(repairs_, "normalized_keys");
          return scalar_to_string(val);
        }
        if (first_string.empty()) first_string = scalar_to_string(val);
      }
      if (!first_string.empty()) {
        note(repairs_, "normalized_keys");
        return first_string;
      }
    }
    note(repairs_, "dropped_item");
    return nullptr;
  }

  json as_object_item(const json& item) {
    json out = json::object();
    const std::size_t required =
        static_cast<std::size_t>(std::count_if(shape_.fields.begin(), shape_.fields.end(),
                                               [](const FieldSpec& f) { return f.required; }));
    if (item.is_string() || item.is_number()) {
      const auto s = scalar_to_string(item);
      if (s.empty() || refusals_.is_refusal(s)) return nullptr;
      if (required <= 1) {
        note(repairs_, "coerced_string_item");
        out[shape_.fields.front().name] = s;
        return out;
      }
      note(repairs_, "dropped_item");
      return nullptr;
    }
    if (item.is_array()) {
      // Positional tuple such as ["e0", "a0", "HAS_DATA"].
      if (item.size() < required || item.size() > shape_.fields.size()) {
        note(repairs_, "dropped_item");
        return nullptr;
      }
      note(repairs_, "positional_tuple");
      for (std::size_t i = 0; i < item.size(); ++i) {
        auto s = scalar_to_string(item[i]);
        if (!s.empty()) out[shape_.fields[i].name] = s;
      }
    } else if (item.is_object()) {
      for (const auto& field : shape_.fields) {
        for (const auto& [k, val] : item.items()) {
          if (!key_matches(k, field.name, field.synonyms)) continue;
          if (k != field.name) note(repairs_, "normalized_keys");
          std::string s = scalar_to_string(val);
          if (s.empty() && val.is_array() && !val.empty()) s = scalar_to_string(val.front());
          if (!s.empty()) {
            out[field.name] = s;
            break;
          }
        }
      }
    } else {
      note(repairs_, "dropped_item");
      return nullptr;
    }
    for (const auto& field : shape_.fields) {
      if (field.required && !out.contains(field.name)) {
        note(repairs_, "dropped_incomplete_item");
        return nullptr;
      }
    }
    return out;
  }

  const ExpectedShape& shape_;
  const RefusalTable& refusals_;
  std::vector<std::string>& repairs_;
};

// Content of the first ``` fence, or the whole text.
std::string_view strip_fence(std::string_view raw, std::vector<std::string>& repairs) {
  auto open = raw.find("```");
  if (open == std::string_view::npos) return raw;
  auto body_start = raw.find('\n', open);
  if (body_start == std::string_view::npos) return raw;
  ++body_start;
  auto close = raw.find("```", body_start);
  std::string_view body = raw.substr(body_start, close == std::string_view::npos ? raw.npos : close - body_start);
  note(repairs, "stripped_code_fence");
  return body;
}

std::string clean_line(std::string_view line) {
  auto t = text::trim(line);
  // Bullets and enumeration markers.
  while (!t.empty() && (t.front() == '-' || t.front() == '*' || t.front() == '+')) t = text::trim(t.substr(1));
  if (t.size() >= 3 && t.substr(0, 3) == "\xE2\x80\xA2") t = text::trim(t.substr(3));
  std::size_t d = 0;
  while (d < t.size() && std::isdigit(static_cast<unsigned char>(t[d]))) ++d;
  if (d > 0 && d < t.size() && (t[d] == '.' || t[d] == ')')) t = text::trim(t.substr(d + 1));
  if (t.size() >= 2 && (t.front() == '"' || t.front() == '\'') && t.back() == t.front()) t = t.substr(1, t.size() - 2);
  return std::string(text::trim(t));
}

}  // namespace

RepairResult repair_and_parse(std::string_view raw, const ExpectedShape& shape, const RefusalTable& refusals) {
  RepairResult result;
  const std::string raw_copy(raw);
  if (refusals.is_refusal(raw)) {
    note(result.repairs, "refusal_phrase");
    result.value = json::array();
    return result;
  }

  std::vector<std::string> fence_repairs;
  std::string_view body = strip_fence(raw, fence_repairs);
  if (body.find_first_of("[{") == std::string_view::npos) body = raw;  // fence held prose only
  else result.repairs = fence_repairs;

  // Candidate starts: each '[' or '{' in order.
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < body.size() && starts.size() < 8; ++i)
    if (body[i] == '[' || body[i] == '{') starts.push_back(i);

  std::string last_error;
  for (std::size_t start : starts) {
    std::vector<std::string> repairs = result.repairs;
    if (!text::trim(body.substr(0, start)).empty()) note(repairs, "stripped_leading_text");
    std::string fixed = repair_json_region(body, start, repairs);
    json parsed;
    try {
      parsed = json::parse(fixed);
    } catch (const json::exception& e) {
      last_error = e.what();
      continue;
    }
    try {
      Normalizer n(shape, refusals, repairs);
      result.value = n.normalize(parsed);
      result.repairs = std::move(repairs);
      return result;
    } catch (const OutputParseError& e) {
      last_error = e.what();
    }
  }
  if (!starts.empty()) throw OutputParseError(last_error.empty() ? "no parseable bracketed region" : last_error, raw_copy);

  // Parenthesized tuples without any enclosing list.
  if (shape.kind == ExpectedShape::Kind::ObjectList && body.find('(') != std::string_view::npos &&
      body.find(')') != std::string_view::npos) {
    std::vector<std::string> repairs;
    const auto first = body.find('(');
    const auto last = body.rfind(')');
    std::string wrapped = "[" + std::string(body.substr(first, last - first + 1)) + "]";
    std::string fixed = repair_json_region(wrapped, 0, repairs);
    try {
      json parsed = json::parse(fixed);
      Normalizer n(shape, refusals, repairs);
      note(repairs, "wrapped_tuples");
      result.value = n.normalize(parsed);
      if (!result.value.empty()) {
        result.repairs = std::move(repairs);
        return result;
      }
    } catch (const std::exception&) {
    }
  }

  if (!shape.line_fallback) throw OutputParseError("no bracketed region and shape does not allow line fallback", raw_copy);
  note(result.repairs, "line_fallback");
  result.value = json::array();
  for (const auto& line : text::split(body, '\n')) {
    std::string entry = clean_line(line);
    if (entry.empty() || refusals.is_refusal(entry)) continue;
    if (entry.back() == ':') continue;  // prose header such as "Here are the entities:"
    if (shape.kind == ExpectedShape::Kind::StringList) result.value.push_back(entry);
    else result.value.push_back(json{{shape.fields.front().name, entry}});
  }
  return result;
}

}  // namespace ppa::repair
