#include "ppa/taxonomy.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <sstream>

#include "ppa/corpus.hpp"
#include "ppa/text.hpp"

namespace ppa::taxonomy {

std::string_view to_string(TermKind k) { return k == TermKind::Data ? "data" : "purpose"; }

namespace {

std::string join_path(const std::vector<std::string>& v, std::string_view sep) {
  std::string out;
  for (const auto& s : v) {
    if (!out.empty()) out += sep;
    out += s;
  }
  return out;
}

}  // namespace

CycleError::CycleError(std::vector<std::string> cycle)
    : TaxonomyError("taxonomy cycle: " + join_path(cycle, " -> ")), cycle_(std::move(cycle)) {}

UnresolvedTermError::UnresolvedTermError(std::string input, TermKind kind)
    : TaxonomyError("unresolved " + std::string(to_string(kind)) + " term: '" + input + "'"),
      input_(std::move(input)),
      kind_(kind) {}

std::string expand_known_prefix(std::string_view s) {
  struct P {
    std::string_view prefix;
    std::string_view ns;
  };
  static constexpr P kPrefixes[] = {{"dpv:", rdf::ns::kDpv}, {"pd:", rdf::ns::kPd}, {"dpv-pd:", rdf::ns::kPd}};
  for (const auto& p : kPrefixes)
    if (text::starts_with_ci(s, p.prefix)) return std::string(p.ns) + std::string(s.substr(p.prefix.size()));
  return std::string(s);
}

Taxonomy Taxonomy::build(const HierarchySource& src, const LoadOptions& options) {
  Taxonomy t;
  t.version_ = src.version.empty() ? "unversioned" : src.version;

  std::set<std::string> all = src.classes;
  std::map<std::string, std::set<std::string>> parents, children;
  for (const auto& [c, p] : src.edges) {
    if (c == p) throw CycleError({c, c});
    all.insert(c);
    all.insert(p);
    parents[c].insert(p);
    children[p].insert(c);
  }

  // Cycle detection (iterative colouring DFS over parent links).
  {
    std::map<std::string, int> colour;  // 0 white, 1 grey, 2 black
    for (const auto& start : all) {
      if (colour[start]) continue;
      std::vector<std::pair<std::string, std::vector<std::string>>> stack;
      auto push = [&](const std::string& n) {
        colour[n] = 1;
        auto& ps = parents[n];
        stack.emplace_back(n, std::vector<std::string>(ps.rbegin(), ps.rend()));
      };
      push(start);
      while (!stack.empty()) {
        auto& [node, pending] = stack.back();
        if (pending.empty()) {
          colour[node] = 2;
          stack.pop_back();
          continue;
        }
        std::string next = pending.back();
        pending.pop_back();
        if (colour[next] == 1) {
          std::vector<std::string> cycle;
          bool on = false;
          for (const auto& fr : stack) {
            if (fr.first == next) on = true;
            if (on) cycle.push_back(fr.first);
          }
          cycle.push_back(next);
          throw CycleError(std::move(cycle));
        }
        if (colour[next] == 0) push(next);
      }
    }
  }

  auto is_root_of = [&](const std::string& iri, const std::vector<std::string>& configured,
                        const std::string& local) {
    if (std::find(configured.begin(), configured.end(), iri) != configured.end()) return true;
    return parents[iri].empty() && rdf::local_name(iri) == local;
  };
  for (const auto& iri : all) {
    if (is_root_of(iri, options.data_roots, options.data_root_local)) t.data_roots_.push_back(iri);
    if (is_root_of(iri, options.purpose_roots, options.purpose_root_local)) t.purpose_roots_.push_back(iri);
  }

  // Assign kinds by reachability from roots; record shortest depth.
  std::map<std::string, std::pair<TermKind, std::size_t>> assigned;
  auto sweep = [&](const std::vector<std::string>& roots, TermKind kind) {
    std::deque<std::pair<std::string, std::size_t>> q;
    std::set<std::string> seen;
    for (const auto& r : roots) {
      q.emplace_back(r, 0);
      seen.insert(r);
    }
    while (!q.empty()) {
      auto [n, d] = q.front();
      q.pop_front();
      auto it = assigned.find(n);
      if (it != assigned.end() && it->second.first != kind)
        throw TaxonomyError("node " + n + " is reachable from both data and purpose roots");
      assigned[n] = {kind, d};
      for (const auto& c : children[n])
        if (seen.insert(c).second) q.emplace_back(c, d + 1);
    }
  };
  sweep(t.data_roots_, TermKind::Data);
  sweep(t.purpose_roots_, TermKind::Purpose);

  std::size_t dropped = 0;
  for (const auto& iri : all) {
    auto it = assigned.find(iri);
    if (it == assigned.end()) {
      ++dropped;
      continue;
    }
    TaxonomyNode n;
    n.iri = iri;
    n.kind = it->second.first;
    n.depth = it->second.second;
    auto lab = src.labels.find(iri);
    n.label = lab != src.labels.end() ? lab->second : rdf::local_name(iri);
    auto syn = src.synonyms.find(iri);
    if (syn != src.synonyms.end()) n.synonyms = syn->second;
    t.nodes_.emplace(iri, std::move(n));
  }
  if (dropped)
    t.warnings_.push_back(std::to_string(dropped) + " class(es) unreachable from any data or purpose root were ignored");
  for (auto& [iri, n] : t.nodes_) {
    for (const auto& p : parents[iri])
      if (t.nodes_.count(p)) n.parents.push_back(p);
    for (const auto& c : children[iri])
      if (t.nodes_.count(c)) n.children.push_back(c);
  }

  // Label index: collisions prefer the shallower node, then the smaller IRI.
  for (const auto& [iri, n] : t.nodes_) {
    auto& index = n.kind == TermKind::Data ? t.data_index_ : t.purpose_index_;
    std::set<std::string> keys = {text::normalize_label(n.label), text::normalize_label(rdf::local_name(iri))};
    for (const auto& s : n.synonyms) keys.insert(text::normalize_label(s));
    for (const auto& key : keys) {
      if (key.empty()) continue;
      auto [it, inserted] = index.emplace(key, iri);
      if (inserted || it->second == iri) continue;
      const auto& other = t.nodes_.at(it->second);
      const bool prefer_new = n.depth < other.depth || (n.depth == other.depth && iri < other.iri);
      const std::string& winner = prefer_new ? iri : other.iri;
      const std::string& loser = prefer_new ? other.iri : iri;
      t.warnings_.push_back("label collision on '" + key + "': " + winner + " preferred over " + loser);
      it->second = winner;
    }
  }

  // Ancestor paths: enumerate root paths, keep the lexicographically smallest.
  std::map<std::string, std::vector<std::vector<std::string>>> memo;
  std::function<const std::vector<std::vector<std::string>>&(const std::string&)> paths =
      [&](const std::string& iri) -> const std::vector<std::vector<std::string>>& {
    auto it = memo.find(iri);
    if (it != memo.end()) return it->second;
    std::vector<std::vector<std::string>> out;
    const auto& node = t.nodes_.at(iri);
    if (node.parents.empty()) {
      out.push_back({});
    } else {
      for (const auto& p : node.parents) {
        for (auto path : paths(p)) {
          path.push_back(p);
          out.push_back(std::move(path));
          if (out.size() > 4096) break;
        }
      }
    }
    return memo.emplace(iri, std::move(out)).first->second;
  };
  for (const auto& [iri, n] : t.nodes_) {
    const auto& ps = paths(iri);
    t.ancestor_paths_[iri] = *std::min_element(ps.begin(), ps.end());
  }
  return t;
}

Taxonomy Taxonomy::from_rdf(const rdf::Graph& g, const LoadOptions& options) {
  HierarchySource src;
  const std::string rdfs(rdf::ns::kRdfs);
  const std::string skos(rdf::ns::kSkos);
  const std::string owl(rdf::ns::kOwl);
  const std::string sub = rdfs + "subClassOf";
  const std::string broader = skos + "broader";
  const std::set<std::string> class_types = {rdfs + "Class", owl + "Class", skos + "Concept"};
  std::map<std::string, std::string> pref_labels, rdfs_labels;
  std::vector<std::string> versions;
  for (const auto& tr : g.triples()) {
    const auto& p = tr.predicate.value();
    if (!tr.subject.is_iri()) continue;
    const auto& s = tr.subject.value();
    if ((p == sub || p == broader) && tr.object.is_iri()) {
      src.edges.emplace_back(s, tr.object.value());
    } else if (p == rdf::rdf_type() && tr.object.is_iri() && class_types.count(tr.object.value())) {
      src.classes.insert(s);
    } else if (tr.object.is_literal()) {
      const bool english = tr.object.lang().empty() || tr.object.lang() == "en";
      if (p == skos + "prefLabel" && english) pref_labels.emplace(s, tr.object.value());
      else if (p == rdfs + "label" && english) rdfs_labels.emplace(s, tr.object.value());
      else if (p == skos + "altLabel") src.synonyms[s].push_back(tr.object.value());
      else if (p == owl + "versionInfo" || p == std::string(rdf::ns::kDcterms) + "hasVersion")
        versions.push_back(tr.object.value());
    }
  }
  src.labels = rdfs_labels;
  for (const auto& [s, l] : pref_labels) src.labels[s] = l;
  if (!versions.empty()) src.version = *std::min_element(versions.begin(), versions.end());
  // Drop the edge duplicates that appear when both subClassOf and broader are given.
  std::sort(src.edges.begin(), src.edges.end());
  src.edges.erase(std::unique(src.edges.begin(), src.edges.end()), src.edges.end());
  return build(src, options);
}

Taxonomy Taxonomy::from_tsv(std::string_view tsv, const LoadOptions& options) {
  HierarchySource src;
  std::istringstream in{std::string(tsv)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto t = text::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      auto body = text::trim(t.substr(1));
      if (text::starts_with_ci(body, "version:")) src.version = std::string(text::trim(body.substr(8)));
      continue;
    }
    const auto cols = text::split(line, '\t');
    if (cols.size() < 2)
      throw UnknownFormatError("tabular taxonomy line " + std::to_string(line_no) + " needs child and parent columns");
    const std::string child = expand_known_prefix(text::trim(cols[0]));
    const std::string parent = expand_known_prefix(text::trim(cols[1]));
    if (child.empty()) throw UnknownFormatError("empty child IRI on line " + std::to_string(line_no));
    src.classes.insert(child);
    if (!parent.empty()) src.edges.emplace_back(child, parent);
    if (cols.size() > 2 && !text::trim(cols[2]).empty()) src.labels[child] = std::string(text::trim(cols[2]));
    if (cols.size() > 3)
      for (const auto& s : text::split(cols[3], '|'))
        if (!text::trim(s).empty()) src.synonyms[child].emplace_back(text::trim(s));
  }
  return build(src, options);
}

const TaxonomyNode* Taxonomy::find(std::string_view iri) const {
  auto it = nodes_.find(std::string(iri));
  return it == nodes_.end() ? nullptr : &it->second;
}

const TaxonomyNode& Taxonomy::node(std::string_view iri) const {
  const auto* n = find(iri);
  if (!n) throw ForeignNodeError("not a taxonomy node: " + std::string(iri));
  return *n;
}

const TaxonomyNode& Taxonomy::resolve_term(std::string_view label_or_iri, TermKind kind) const {
  const std::string input(text::trim(label_or_iri));
  auto of_kind = [&](const TaxonomyNode* n) { return n && n->kind == kind ? n : nullptr; };
  if (input.empty()) throw UnresolvedTermError(input, kind);

  if (const auto* n = of_kind(find(input))) return *n;
  const std::string expanded = expand_known_prefix(input);
  if (const auto* n = of_kind(find(expanded))) return *n;

  std::string label = input;
  if (input.find("://") != std::string::npos || input.rfind("urn:", 0) == 0) {
    label = rdf::local_name(input);
  } else if (auto colon = input.find(':'); colon != std::string::npos) {
    const auto prefix = input.substr(0, colon);
    if (prefix.find(' ') == std::string::npos) label = input.substr(colon + 1);
  }
  const auto& index = kind == TermKind::Data ? data_index_ : purpose_index_;
  auto it = index.find(text::normalize_label(label));
  if (it != index.end()) return nodes_.at(it->second);
  throw UnresolvedTermError(input, kind);
}

const TaxonomyNode& Taxonomy::checked(const TaxonomyNode& n) const {
  const auto* mine = find(n.iri);
  if (mine != &n) throw ForeignNodeError("node does not belong to this taxonomy: " + n.iri);
  return n;
}

bool Taxonomy::is_leaf(const TaxonomyNode& n) const { return checked(n).children.empty(); }

std::vector<std::string> Taxonomy::ancestors(const TaxonomyNode& n) const {
  return ancestor_paths_.at(checked(n).iri);
}

std::set<std::string> Taxonomy::descendants(const TaxonomyNode& n) const {
  std::set<std::string> out;
  std::vector<std::string> stack(checked(n).children.begin(), n.children.end());
  while (!stack.empty()) {
    auto iri = std::move(stack.back());
    stack.pop_back();
    if (!out.insert(iri).second) continue;
    for (const auto& c : nodes_.at(iri).children) stack.push_back(c);
  }
  return out;
}

const std::vector<std::string>& Taxonomy::roots(TermKind kind) const {
  return kind == TermKind::Data ? data_roots_ : purpose_roots_;
}

std::size_t Taxonomy::count(TermKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [&](const auto& kv) { return kv.second.kind == kind; }));
}

std::vector<std::string> Taxonomy::labels(TermKind kind) const {
  std::vector<std::string> out;
  for (const auto& [iri, n] : nodes_)
    if (n.kind == kind) out.push_back(rdf::local_name(iri));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Taxonomy load_taxonomy(const std::filesystem::path& path, const LoadOptions& options) {
  const std::string data = corpus::read_text_file(path);
  const auto ext = text::to_lower_ascii(path.extension().string());
  if (ext == ".tsv" || ext == ".tab") return Taxonomy::from_tsv(data, options);
  if (ext == ".ttl" || ext == ".turtle") return Taxonomy::from_rdf(rdf::parse_turtle(data), options);
  if (ext == ".nt") return Taxonomy::from_rdf(rdf::parse_ntriples(data), options);
  // Sniff: tabs in the first content line mean the tabular format.
  std::istringstream in(data);
  std::string line;
  while (std::getline(in, line)) {
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (line.find('\t') != std::string::npos && t.front() != '<' && t.front() != '@')
      return Taxonomy::from_tsv(data, options);
    if (t.front() == '@' || t.front() == '<' || text::starts_with_ci(t, "prefix"))
      return Taxonomy::from_rdf(rdf::parse_turtle(data), options);
    break;
  }
  throw UnknownFormatError("unrecognized taxonomy serialization: " + path.string());
}

}  // namespace ppa::taxonomy
