#pragma once

// Minimal RDF model with a Turtle / N-Triples reader and deterministic
// writers. The reader covers the Turtle subset used by DPV snapshots and by
// this project's own output: prefixes, base, predicate/object lists, `a`,
// blank-node labels and property lists, quoted/long literals with language
// tags or datatypes, and numeric/boolean shorthand. Collections are not
// supported.

#include <compare>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ppa::rdf {

namespace ns {
inline constexpr std::string_view kRdf = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
inline constexpr std::string_view kRdfs = "http://www.w3.org/2000/01/rdf-schema#";
inline constexpr std::string_view kXsd = "http://www.w3.org/2001/XMLSchema#";
inline constexpr std::string_view kOwl = "http://www.w3.org/2002/07/owl#";
inline constexpr std::string_view kSkos = "http://www.w3.org/2004/02/skos/core#";
inline constexpr std::string_view kDcterms = "http://purl.org/dc/terms/";
inline constexpr std::string_view kDpv = "https://w3id.org/dpv#";
inline constexpr std::string_view kPd = "https://w3id.org/dpv/pd#";
inline constexpr std::string_view kOdrl = "http://www.w3.org/ns/odrl/2/";
inline constexpr std::string_view kCore = "urn:pp-analyze:core#";
}  // namespace ns

std::string rdf_type();
std::string xsd(std::string_view local);

class Term {
 public:
  enum class Kind { Iri = 0, Blank = 1, Literal = 2 };

  Term() = default;
  static Term iri(std::string value);
  static Term blank(std::string label);
  static Term literal(std::string lexical, std::string datatype = {}, std::string lang = {});
  static Term integer(long long v);

  Kind kind() const { return kind_; }
  bool is_iri() const { return kind_ == Kind::Iri; }
  bool is_blank() const { return kind_ == Kind::Blank; }
  bool is_literal() const { return kind_ == Kind::Literal; }

  // IRI string, blank label (without "_:"), or literal lexical form.
  const std::string& value() const { return value_; }
  // Empty datatype means xsd:string (or rdf:langString when lang is set).
  const std::string& datatype() const { return datatype_; }
  const std::string& lang() const { return lang_; }

  auto operator<=>(const Term&) const = default;
  bool operator==(const Term&) const = default;

 private:
  Term(Kind k, std::string v, std::string dt, std::string lang)
      : kind_(k), value_(std::move(v)), datatype_(std::move(dt)), lang_(std::move(lang)) {}

  Kind kind_ = Kind::Iri;
  std::string value_;
  std::string datatype_;
  std::string lang_;
};

struct Triple {
  Term subject;
  Term predicate;
  Term object;

  auto operator<=>(const Triple&) const = default;
  bool operator==(const Triple&) const = default;
};

class Graph {
 public:
  void add(Term s, Term p, Term o);
  void add(const Triple& t) { triples_.insert(t); }
  void merge(const Graph& other);

  std::size_t size() const { return triples_.size(); }
  bool empty() const { return triples_.empty(); }
  const std::set<Triple>& triples() const { return triples_; }

  std::vector<Term> objects(const Term& s, std::string_view predicate) const;
  std::vector<Term> subjects(std::string_view predicate, const Term& o) const;
  std::optional<Term> object(const Term& s, std::string_view predicate) const;
  bool has_type(const Term& s, std::string_view type_iri) const;
  std::vector<Term> instances_of(std::string_view type_iri) const;

  bool operator==(const Graph&) const = default;

 private:
  std::set<Triple> triples_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Prefix declarations seen while parsing.
using PrefixMap = std::map<std::string, std::string>;

Graph parse_turtle(std::string_view text, PrefixMap* prefixes_out = nullptr, std::string base = {});
Graph parse_ntriples(std::string_view text);

enum class Format { Turtle, NTriples };
std::optional<Format> format_from_extension(std::string_view path);

// Output is a pure function of the triple set and prefix list: subjects,
// predicates and objects are emitted in sorted order (rdf:type first).
std::string write_turtle(const Graph& g, const std::vector<std::pair<std::string, std::string>>& prefixes);
std::string write_ntriples(const Graph& g);

std::string to_ntriples_term(const Term& t);
std::string local_name(std::string_view iri);

}  // namespace ppa::rdf
