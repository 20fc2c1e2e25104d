#pragma once

// UTF-8 helpers shared by the corpus, taxonomy and metric code. Offsets
// exposed to callers are counted in Unicode scalar values.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ppa::text {

class Utf8Error : public std::runtime_error {
 public:
  Utf8Error(const std::string& what, std::size_t byte_offset)
      : std::runtime_error(what), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

// Throws Utf8Error on malformed input (overlongs, surrogates, truncation).
std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view cps);
void append_utf8(std::string& out, char32_t cp);
bool is_valid_utf8(std::string_view utf8);

// Maps code point indices to byte offsets for one UTF-8 buffer.
class CodepointIndex {
 public:
  explicit CodepointIndex(std::string_view utf8);

  std::size_t size() const { return byte_offsets_.size() - 1; }
  std::size_t byte_offset(std::size_t cp_index) const;
  // Inverse mapping; byte must lie on a code point boundary.
  std::size_t cp_index(std::size_t byte) const;

 private:
  std::vector<std::size_t> byte_offsets_;  // size() + 1 entries
};

// Substring by code point range [start, end).
std::string slice(std::string_view utf8, std::size_t start, std::size_t end);

bool is_space(char32_t cp);
char32_t fold_case(char32_t cp);

// Case-folds and collapses whitespace runs to one space, trimming both ends.
std::u32string normalize_for_match(std::u32string_view s);
std::string normalize_for_match(std::string_view utf8);

// Case-folds and keeps letters and digits only ("Targeted Advertising" ->
// "targetedadvertising").
std::string normalize_label(std::string_view utf8);

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
bool starts_with_ci(std::string_view s, std::string_view prefix);

}  // namespace ppa::text
