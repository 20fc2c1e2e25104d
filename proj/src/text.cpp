#include "ppa/text.hpp"

#include <algorithm>

namespace ppa::text {

namespace {

// Returns the decoded code point and advances pos; throws on malformed input.
char32_t decode_one(std::string_view s, std::size_t& pos) {
  const auto start = pos;
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    throw Utf8Error("invalid UTF-8 lead byte", start);
  }
  if (start + len > s.size()) throw Utf8Error("truncated UTF-8 sequence", start);
  for (int i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[start + i]);
    if ((b & 0xC0) != 0x80) throw Utf8Error("invalid UTF-8 continuation byte", start + i);
    cp = (cp << 6) | (b & 0x3F);
  }
  static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[len]) throw Utf8Error("overlong UTF-8 sequence", start);
  if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
    throw Utf8Error("UTF-8 sequence is not a scalar value", start);
  pos = start + len;
  return cp;
}

}  // namespace

std::u32string decode(std::string_view utf8) {
  std::u32string out;
  out.reserve(utf8.size());
  std::size_t pos = 0;
  while (pos < utf8.size()) out.push_back(decode_one(utf8, pos));
  return out;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string encode(std::u32string_view cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) append_utf8(out, cp);
  return out;
}

bool is_valid_utf8(std::string_view utf8) {
  try {
    std::size_t pos = 0;
    while (pos < utf8.size()) decode_one(utf8, pos);
    return true;
  } catch (const Utf8Error&) {
    return false;
  }
}

CodepointIndex::CodepointIndex(std::string_view utf8) {
  byte_offsets_.reserve(utf8.size() + 1);
  std::size_t pos = 0;
  while (pos < utf8.size()) {
    byte_offsets_.push_back(pos);
    decode_one(utf8, pos);
  }
  byte_offsets_.push_back(utf8.size());
}

std::size_t CodepointIndex::byte_offset(std::size_t cp_index) const {
  if (cp_index >= byte_offsets_.size()) throw std::out_of_range("code point index out of range");
  return byte_offsets_[cp_index];
}

std::size_t CodepointIndex::cp_index(std::size_t byte) const {
  auto it = std::lower_bound(byte_offsets_.begin(), byte_offsets_.end(), byte);
  if (it == byte_offsets_.end() || *it != byte)
    throw std::out_of_range("byte offset is not on a code point boundary");
  return static_cast<std::size_t>(it - byte_offsets_.begin());
}

std::string slice(std::string_view utf8, std::size_t start, std::size_t end) {
  CodepointIndex idx(utf8);
  if (start > end || end > idx.size()) throw std::out_of_range("code point range out of bounds");
  const auto b = idx.byte_offset(start);
  const auto e = idx.byte_offset(end);
  return std::string(utf8.substr(b, e - b));
}

bool is_space(char32_t cp) {
  switch (cp) {
    case ' ': case '\t': case '\n': case '\r': case '\v': case '\f':
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000: case 0xFEFF:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

char32_t fold_case(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp < 0x80) return cp;
  // Latin-1 supplement and Latin Extended-A, Greek, Cyrillic basic blocks.
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  if (cp == 0x178) return 0xFF;
  if (cp >= 0x100 && cp <= 0x17F && cp != 0x130 && cp != 0x131 && cp != 0x138 && cp != 0x149 &&
      cp != 0x17F) {
    if ((cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E))
      return (cp % 2 == 1) ? cp + 1 : cp;
    return (cp % 2 == 0) ? cp + 1 : cp;
  }
  if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 32;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 32;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
  return cp;
}

std::u32string normalize_for_match(std::u32string_view s) {
  std::u32string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char32_t cp : s) {
    if (is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(fold_case(cp));
  }
  return out;
}

std::string normalize_for_match(std::string_view utf8) {
  return encode(normalize_for_match(decode(utf8)));
}

std::string normalize_label(std::string_view utf8) {
  std::u32string out;
  for (char32_t cp : decode(utf8)) {
    const char32_t f = fold_case(cp);
    const bool ascii_alnum = (f >= 'a' && f <= 'z') || (f >= '0' && f <= '9');
    if (ascii_alnum || (f >= 0xC0 && !is_space(f))) out.push_back(f);
  }
  return encode(out);
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  auto sp = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; };
  while (b < e && sp(s[b])) ++b;
  while (e > b && sp(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
  return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  return to_lower_ascii(s.substr(0, prefix.size())) == to_lower_ascii(prefix);
}

}  // namespace ppa::text
