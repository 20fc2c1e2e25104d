#include "ppa/rdf.hpp"

#include <algorithm>
#include <cctype>

#include "ppa/text.hpp"

namespace ppa::rdf {

std::string rdf_type() { return std::string(ns::kRdf) + "type"; }
std::string xsd(std::string_view local) { return std::string(ns::kXsd) + std::string(local); }

Term Term::iri(std::string value) { return Term(Kind::Iri, std::move(value), {}, {}); }
Term Term::blank(std::string label) { return Term(Kind::Blank, std::move(label), {}, {}); }
Term Term::literal(std::string lexical, std::string datatype, std::string lang) {
  if (!lang.empty()) {
    datatype.clear();
    lang = text::to_lower_ascii(lang);
  }
  if (datatype == xsd("string")) datatype.clear();
  return Term(Kind::Literal, std::move(lexical), std::move(datatype), std::move(lang));
}
Term Term::integer(long long v) { return literal(std::to_string(v), xsd("integer")); }

void Graph::add(Term s, Term p, Term o) {
  triples_.insert(Triple{std::move(s), std::move(p), std::move(o)});
}

void Graph::merge(const Graph& other) { triples_.insert(other.triples_.begin(), other.triples_.end()); }

std::vector<Term> Graph::objects(const Term& s, std::string_view predicate) const {
  std::vector<Term> out;
  const Term p = Term::iri(std::string(predicate));
  auto it = triples_.lower_bound(Triple{s, p, Term{}});
  for (; it != triples_.end() && it->subject == s && it->predicate == p; ++it) out.push_back(it->object);
  return out;
}

std::optional<Term> Graph::object(const Term& s, std::string_view predicate) const {
  auto objs = objects(s, predicate);
  if (objs.empty()) return std::nullopt;
  return objs.front();
}

std::vector<Term> Graph::subjects(std::string_view predicate, const Term& o) const {
  std::vector<Term> out;
  for (const auto& t : triples_)
    if (t.object == o && t.predicate.value() == predicate && t.predicate.is_iri()) out.push_back(t.subject);
  return out;
}

bool Graph::has_type(const Term& s, std::string_view type_iri) const {
  return triples_.count(Triple{s, Term::iri(rdf_type()), Term::iri(std::string(type_iri))}) > 0;
}

std::vector<Term> Graph::instances_of(std::string_view type_iri) const {
  return subjects(rdf_type(), Term::iri(std::string(type_iri)));
}

namespace {

bool has_scheme(std::string_view iri) {
  if (iri.empty() || !std::isalpha(static_cast<unsigned char>(iri[0]))) return false;
  for (std::size_t i = 1; i < iri.size(); ++i) {
    const char c = iri[i];
    if (c == ':') return true;
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.') return false;
  }
  return false;
}

class TurtleParser {
 public:
  TurtleParser(std::string_view src, std::string base) : src_(src), base_(std::move(base)) {}

  Graph run(PrefixMap* prefixes_out) {
    skip_ws();
    while (!eof()) {
      statement();
      skip_ws();
    }
    if (prefixes_out) *prefixes_out = prefixes_;
    return std::move(graph_);
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_); }

  bool eof() const { return pos_ >= src_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }
  char get() {
    if (eof()) fail("unexpected end of input");
    const char c = src_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }
  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    get();
  }

  void skip_ws() {
    while (!eof()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        get();
      } else if (c == '#') {
        while (!eof() && peek() != '\n') get();
      } else {
        break;
      }
    }
  }

  bool keyword_ci(std::string_view kw) {
    if (src_.size() - pos_ < kw.size()) return false;
    if (!text::starts_with_ci(src_.substr(pos_), kw)) return false;
    const char after = pos_ + kw.size() < src_.size() ? src_[pos_ + kw.size()] : ' ';
    return after == ' ' || after == '\t' || after == '\n' || after == '\r' || after == '<';
  }

  void statement() {
    if (peek() == '@') {
      get();
      if (keyword_ci("prefix")) {
        pos_ += 6;
        prefix_decl();
        expect('.');
      } else if (keyword_ci("base")) {
        pos_ += 4;
        skip_ws();
        base_ = iri_ref();
        expect('.');
      } else {
        fail("unknown directive");
      }
      return;
    }
    if (keyword_ci("prefix")) {
      pos_ += 6;
      prefix_decl();
      return;
    }
    if (keyword_ci("base")) {
      pos_ += 4;
      skip_ws();
      base_ = iri_ref();
      return;
    }
    Term subject;
    bool allow_empty_pol = false;
    if (peek() == '[') {
      subject = blank_property_list();
      allow_empty_pol = true;
    } else {
      subject = subject_term();
    }
    skip_ws();
    if (!(allow_empty_pol && peek() == '.')) predicate_object_list(subject);
    expect('.');
  }

  void prefix_decl() {
    skip_ws();
    std::string name;
    while (!eof() && peek() != ':') {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\n') fail("malformed prefix name");
      name.push_back(get());
    }
    get();  // ':'
    skip_ws();
    prefixes_[name] = iri_ref();
  }

  std::string resolve(std::string iri) const {
    if (has_scheme(iri) || base_.empty()) return iri;
    if (iri.empty()) return base_;
    if (iri[0] == '#') {
      auto hash = base_.find('#');
      return base_.substr(0, hash) + iri;
    }
    auto slash = base_.rfind('/');
    return (slash == std::string::npos ? base_ : base_.substr(0, slash + 1)) + iri;
  }

  std::string iri_ref() {
    if (peek() != '<') fail("expected IRI");
    get();
    std::string out;
    while (true) {
      if (eof()) fail("unterminated IRI");
      char c = get();
      if (c == '>') break;
      if (c == '\\') {
        const char e = get();
        if (e == 'u' || e == 'U') {
          text::append_utf8(out, hex_escape(e == 'u' ? 4 : 8));
          continue;
        }
        fail("invalid escape in IRI");
      }
      if (c == ' ' || c == '\n' || c == '"' || c == '<' || c == '{' || c == '}' || c == '|' || c == '^' ||
          c == '`')
        fail("invalid character in IRI");
      out.push_back(c);
    }
    return resolve(std::move(out));
  }

  char32_t hex_escape(int digits) {
    char32_t v = 0;
    for (int i = 0; i < digits; ++i) {
      const char c = get();
      v <<= 4;
      if (c >= '0' && c <= '9') v |= static_cast<char32_t>(c - '0');
      else if (c >= 'a' && c <= 'f') v |= static_cast<char32_t>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') v |= static_cast<char32_t>(c - 'A' + 10);
      else fail("invalid hex escape");
    }
    return v;
  }

  static bool pn_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
           static_cast<unsigned char>(c) >= 0x80;
  }

  std::string prefixed_name() {
    std::string prefix;
    while (!eof() && (pn_char(peek()) || peek() == '.') && peek() != ':') prefix.push_back(get());
    if (peek() != ':') fail("expected prefixed name, got '" + prefix + peek() + "'");
    get();
    std::string local;
    while (!eof()) {
      const char c = peek();
      if (pn_char(c) || c == ':' || c == '%') {
        local.push_back(get());
      } else if (c == '\\') {
        get();
        local.push_back(get());
      } else if (c == '.' && (pn_char(peek(1)) || peek(1) == ':' || peek(1) == '%')) {
        local.push_back(get());
      } else {
        break;
      }
    }
    auto it = prefixes_.find(prefix);
    if (it == prefixes_.end()) fail("undeclared prefix '" + prefix + "'");
    return it->second + local;
  }

  Term blank_label() {
    get();  // '_'
    if (get() != ':') fail("malformed blank node label");
    std::string label;
    while (!eof()) {
      const char c = peek();
      if (pn_char(c) || (c == '.' && pn_char(peek(1)))) label.push_back(get());
      else break;
    }
    if (label.empty()) fail("empty blank node label");
    return Term::blank(label);
  }

  Term subject_term() {
    skip_ws();
    const char c = peek();
    if (c == '<') return Term::iri(iri_ref());
    if (c == '_' && peek(1) == ':') return blank_label();
    if (c == '(') fail("RDF collections are not supported");
    return Term::iri(prefixed_name());
  }

  Term predicate_term() {
    skip_ws();
    if (peek() == 'a') {
      const char n = peek(1);
      if (n == ' ' || n == '\t' || n == '\n' || n == '\r' || n == '<' || n == '[' || n == '"' || n == '_') {
        get();
        return Term::iri(rdf_type());
      }
    }
    if (peek() == '<') return Term::iri(iri_ref());
    return Term::iri(prefixed_name());
  }

  Term blank_property_list() {
    get();  // '['
    Term node = Term::blank("anon" + std::to_string(++anon_counter_));
    skip_ws();
    if (peek() == ']') {
      get();
      return node;
    }
    predicate_object_list(node);
    expect(']');
    return node;
  }

  void predicate_object_list(const Term& subject) {
    while (true) {
      Term pred = predicate_term();
      while (true) {
        Term obj = object_term();
        graph_.add(subject, pred, std::move(obj));
        skip_ws();
        if (peek() == ',') {
          get();
          continue;
        }
        break;
      }
      skip_ws();
      if (peek() != ';') return;
      while (peek() == ';') {
        get();
        skip_ws();
      }
      const char c = peek();
      if (c == '.' || c == ']' || eof()) return;
    }
  }

  std::string string_body() {
    const char q = get();
    const bool is_long = peek() == q && peek(1) == q;
    if (is_long) {
      get();
      get();
    } else if (peek() == q) {
      get();
      return {};
    }
    std::string out;
    while (true) {
      if (eof()) fail("unterminated string literal");
      const char c = get();
      if (c == '\\') {
        const char e = get();
        switch (e) {
          case 't': out.push_back('\t'); break;
          case 'b': out.push_back('\b'); break;
          case 'n': out.push_back('\n'); break;
          case 'r': out.push_back('\r'); break;
          case 'f': out.push_back('\f'); break;
          case '"': out.push_back('"'); break;
          case '\'': out.push_back('\''); break;
          case '\\': out.push_back('\\'); break;
          case 'u': text::append_utf8(out, hex_escape(4)); break;
          case 'U': text::append_utf8(out, hex_escape(8)); break;
          default: fail("invalid string escape");
        }
        continue;
      }
      if (c == q) {
        if (!is_long) return out;
        if (peek() == q && peek(1) == q) {
          get();
          get();
          return out;
        }
      }
      if (!is_long && (c == '\n' || c == '\r')) fail("newline in short string literal");
      out.push_back(c);
    }
  }

  Term literal_tail(std::string lexical) {
    if (peek() == '@') {
      get();
      std::string lang;
      while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '-')) lang.push_back(get());
      if (lang.empty()) fail("empty language tag");
      return Term::literal(std::move(lexical), {}, std::move(lang));
    }
    if (peek() == '^' && peek(1) == '^') {
      get();
      get();
      std::string dt = peek() == '<' ? iri_ref() : prefixed_name();
      return Term::literal(std::move(lexical), std::move(dt));
    }
    return Term::literal(std::move(lexical));
  }

  Term numeric() {
    std::string lex;
    if (peek() == '+' || peek() == '-') lex.push_back(get());
    bool decimal = false;
    bool exp = false;
    while (!eof()) {
      const char c = peek();
      if (std::isdigit(static_cast<unsigned char>(c))) {
        lex.push_back(get());
      } else if (c == '.' && !decimal && !exp && std::isdigit(static_cast<unsigned char>(peek(1)))) {
        decimal = true;
        lex.push_back(get());
      } else if ((c == 'e' || c == 'E') && !exp) {
        exp = true;
        lex.push_back(get());
        if (peek() == '+' || peek() == '-') lex.push_back(get());
      } else {
        break;
      }
    }
    if (lex.empty() || lex == "+" || lex == "-") fail("malformed number");
    const char* dt = exp ? "double" : decimal ? "decimal" : "integer";
    return Term::literal(std::move(lex), xsd(dt));
  }

  Term object_term() {
    skip_ws();
    const char c = peek();
    if (c == '<') return Term::iri(iri_ref());
    if (c == '_' && peek(1) == ':') return blank_label();
    if (c == '[') return blank_property_list();
    if (c == '"' || c == '\'') return literal_tail(string_body());
    if (c == '(') fail("RDF collections are not supported");
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' ||
        (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))))
      return numeric();
    for (std::string_view kw : {"true", "false"}) {
      if (src_.substr(pos_, kw.size()) == kw && !pn_char(peek(kw.size())) && peek(kw.size()) != ':') {
        pos_ += kw.size();
        return Term::literal(std::string(kw), xsd("boolean"));
      }
    }
    return Term::iri(prefixed_name());
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::string base_;
  PrefixMap prefixes_;
  Graph graph_;
  int anon_counter_ = 0;
};

bool safe_local(std::string_view local) {
  if (local.empty()) return false;
  if (local.front() == '-' || local.front() == '.') return false;
  return std::all_of(local.begin(), local.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

std::string escape_string(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 2);
  out.push_back('"');
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          static constexpr char kHex[] = "0123456789ABCDEF";
          out += "\\u00";
          out.push_back(kHex[(c >> 4) & 0xF]);
          out.push_back(kHex[c & 0xF]);
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
  return out;
}

std::string escape_iri(std::string_view iri) {
  std::string out = "<";
  for (char c : iri) {
    const auto u = static_cast<unsigned char>(c);
    if (u <= 0x20 || c == '<' || c == '>' || c == '"' || c == '{' || c == '}' || c == '|' || c == '^' ||
        c == '`' || c == '\\') {
      static constexpr char kHex[] = "0123456789ABCDEF";
      out += "\\u00";
      out.push_back(kHex[u >> 4]);
      out.push_back(kHex[u & 0xF]);
    } else {
      out.push_back(c);
    }
  }
  out.push_back('>');
  return out;
}

class TermWriter {
 public:
  explicit TermWriter(const std::vector<std::pair<std::string, std::string>>& prefixes) : prefixes_(prefixes) {}

  std::string iri(std::string_view value) const {
    const std::pair<std::string, std::string>* best = nullptr;
    for (const auto& p : prefixes_) {
      if (value.size() > p.second.size() && value.substr(0, p.second.size()) == p.second &&
          safe_local(value.substr(p.second.size()))) {
        if (!best || p.second.size() > best->second.size()) best = &p;
      }
    }
    if (best) return best->first + ":" + std::string(value.substr(best->second.size()));
    return escape_iri(value);
  }

  std::string term(const Term& t) const {
    switch (t.kind()) {
      case Term::Kind::Iri: return iri(t.value());
      case Term::Kind::Blank: return "_:" + t.value();
      case Term::Kind::Literal: {
        if (t.datatype() == xsd("integer") && is_integer_lexical(t.value())) return t.value();
        std::string out = escape_string(t.value());
        if (!t.lang().empty()) out += "@" + t.lang();
        else if (!t.datatype().empty()) out += "^^" + iri(t.datatype());
        return out;
      }
    }
    return {};
  }

  static bool is_integer_lexical(std::string_view v) {
    std::size_t i = (!v.empty() && (v[0] == '+' || v[0] == '-')) ? 1 : 0;
    if (i >= v.size()) return false;
    return std::all_of(v.begin() + static_cast<long>(i), v.end(),
                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  }

 private:
  const std::vector<std::pair<std::string, std::string>>& prefixes_;
};

}  // namespace

Graph parse_turtle(std::string_view text, PrefixMap* prefixes_out, std::string base) {
  return TurtleParser(text, std::move(base)).run(prefixes_out);
}

Graph parse_ntriples(std::string_view text) { return TurtleParser(text, {}).run(nullptr); }

std::optional<Format> format_from_extension(std::string_view path) {
  auto dot = path.rfind('.');
  if (dot == std::string_view::npos) return std::nullopt;
  const auto ext = text::to_lower_ascii(path.substr(dot + 1));
  if (ext == "ttl" || ext == "turtle") return Format::Turtle;
  if (ext == "nt" || ext == "ntriples") return Format::NTriples;
  return std::nullopt;
}

std::string to_ntriples_term(const Term& t) {
  switch (t.kind()) {
    case Term::Kind::Iri: return escape_iri(t.value());
    case Term::Kind::Blank: return "_:" + t.value();
    case Term::Kind::Literal: {
      std::string out = escape_string(t.value());
      if (!t.lang().empty()) out += "@" + t.lang();
      else if (!t.datatype().empty()) out += "^^" + escape_iri(t.datatype());
      return out;
    }
  }
  return {};
}

std::string write_ntriples(const Graph& g) {
  std::string out;
  for (const auto& t : g.triples()) {
    out += to_ntriples_term(t.subject);
    out += ' ';
    out += to_ntriples_term(t.predicate);
    out += ' ';
    out += to_ntriples_term(t.object);
    out += " .\n";
  }
  return out;
}

std::string write_turtle(const Graph& g, const std::vector<std::pair<std::string, std::string>>& prefixes) {
  std::string out;
  for (const auto& [name, iri] : prefixes) out += "@prefix " + name + ": " + escape_iri(iri) + " .\n";
  TermWriter w(prefixes);
  const std::string type = rdf_type();

  const auto& ts = g.triples();
  for (auto it = ts.begin(); it != ts.end();) {
    const Term subject = it->subject;
    auto end = it;
    while (end != ts.end() && end->subject == subject) ++end;

    // Group by predicate, rdf:type first.
    std::vector<std::pair<Term, std::vector<Term>>> groups;
    for (auto j = it; j != end; ++j) {
      if (groups.empty() || groups.back().first != j->predicate) groups.push_back({j->predicate, {}});
      groups.back().second.push_back(j->object);
    }
    std::stable_partition(groups.begin(), groups.end(),
                          [&](const auto& grp) { return grp.first.value() == type; });

    out += "\n" + w.term(subject);
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      const auto& [pred, objs] = groups[gi];
      out += gi == 0 ? " " : " ;\n    ";
      out += pred.value() == type ? "a" : w.term(pred);
      for (std::size_t oi = 0; oi < objs.size(); ++oi) {
        out += oi == 0 ? " " : ", ";
        out += w.term(objs[oi]);
      }
    }
    out += " .\n";
    it = end;
  }
  return out;
}

std::string local_name(std::string_view iri) {
  auto pos = iri.find_last_of("#/:");
  if (pos == std::string_view::npos) return std::string(iri);
  return std::string(iri.substr(pos + 1));
}

}  // namespace ppa::rdf
