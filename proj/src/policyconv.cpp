#include "ppa/policyconv.hpp"

#include <fstream>
#include <set>

#include "ppa/corpus.hpp"
#include "ppa/digest.hpp"
#include "ppa/graph.hpp"

namespace ppa::policyconv {

using nlohmann::json;
using rdf::Term;

namespace {

std::string odrl(std::string_view local) { return std::string(rdf::ns::kOdrl) + std::string(local); }

const char* const kPsdtouLocals[] = {"AppPolicy", "InputSpec", "Usage",   "SharingEntry", "UnknownRecipient",
                                     "forPolicy", "inputSpec", "dataClass", "usage",     "practice",
                                     "practiceType", "purpose", "sharingEntry", "recipient"};

std::string blank_label(std::string_view prefix, std::string_view material) {
  return std::string(prefix) + sha256_hex(material).substr(0, 12);
}

// Practice nodes owned by a policy, with their most specific practice class.
struct Practice {
  Term node;
  std::string cls;
};

std::vector<Practice> practices_of(const rdf::Graph& g, const Term& policy) {
  const auto& classes = graph::practice_classes();
  std::vector<Practice> out;
  for (const auto& p : g.objects(policy, graph::core::iri(graph::core::kHasPractice))) {
    std::string cls;
    for (auto it = classes.rbegin(); it != classes.rend(); ++it)
      if (g.has_type(p, *it)) {
        cls = *it;
        break;
      }
    if (cls.empty())
      for (const auto& t : g.objects(p, rdf::rdf_type())) cls = t.value();
    out.push_back({p, cls});
  }
  return out;
}

json practice_json(const Practice& p, std::string_view reason) {
  return json{{"practice", p.node.value()}, {"type", p.cls}, {"reason", reason}};
}

}  // namespace

ConversionProfile ConversionProfile::defaults() {
  ConversionProfile p;
  p.odrl_actions = {{graph::core::iri(graph::core::kDataCollectionUse), odrl("use")},
                    {graph::core::iri(graph::core::kThirdPartySharingDisclosure), odrl("share")}};
  p.odrl_party_functions = {{graph::core::iri(graph::core::kPerformedBy), odrl("assignee")},
                            {graph::core::iri(graph::core::kSharedWith), odrl("recipient")},
                            {graph::core::iri(graph::core::kDataProvidedBy), odrl("assigner")}};
  for (const char* l : kPsdtouLocals) p.psdtou_terms[l] = p.psdtou_ns + l;
  return p;
}

ConversionProfile ConversionProfile::from_json(const json& j) {
  ConversionProfile p = defaults();
  // Keys may be compact core terms ("DataCollectionUse") or full IRIs.
  auto expand_core = [](const std::string& k) {
    return k.find(':') == std::string::npos ? graph::core::iri(k) : k;
  };
  auto expand_odrl = [](const std::string& v) { return v.find(':') == std::string::npos ? odrl(v) : v; };
  if (j.contains("odrl_actions")) {
    p.odrl_actions.clear();
    for (const auto& [k, v] : j["odrl_actions"].items()) p.odrl_actions[expand_core(k)] = expand_odrl(v);
  }
  if (j.contains("odrl_party_functions")) {
    p.odrl_party_functions.clear();
    for (const auto& [k, v] : j["odrl_party_functions"].items())
      p.odrl_party_functions[expand_core(k)] = expand_odrl(v);
  }
  if (j.contains("data_identifier")) {
    p.data_identifier = j["data_identifier"].get<std::string>();
    if (p.data_identifier != "data_class_iri")
      throw std::invalid_argument("unsupported data identifier strategy: " + p.data_identifier);
  }
  if (j.contains("psdtou_namespace")) {
    p.psdtou_ns = j["psdtou_namespace"].get<std::string>();
    for (const char* l : kPsdtouLocals) p.psdtou_terms[l] = p.psdtou_ns + l;
  }
  if (j.contains("psdtou_terms"))
    for (const auto& [k, v] : j["psdtou_terms"].items()) p.psdtou_terms[k] = v.get<std::string>();
  return p;
}

ConversionProfile ConversionProfile::load(const std::filesystem::path& path) {
  return from_json(json::parse(corpus::read_text_file(path)));
}

std::string ConversionProfile::psdtou(std::string_view local) const {
  auto it = psdtou_terms.find(std::string(local));
  return it != psdtou_terms.end() ? it->second : psdtou_ns + std::string(local);
}

json ConversionReport::to_json() const {
  return json{{"policies", policies}, {"rules", rules}, {"skipped", skipped}, {"unmapped", unmapped}};
}

std::vector<std::pair<std::string, std::string>> output_prefixes(const ConversionProfile& profile) {
  auto p = graph::default_prefixes();
  p.emplace_back("odrl", std::string(rdf::ns::kOdrl));
  p.emplace_back("psd", profile.psdtou_ns);
  return p;
}

ConversionOutput to_odrl(const rdf::Graph& g, const ConversionProfile& profile) {
  ConversionOutput out;
  auto& o = out.graph;
  const std::string type = rdf::rdf_type();
  const std::string label = std::string(rdf::ns::kRdfs) + "label";
  const std::string has_data = graph::core::iri(graph::core::kHasData);
  const std::string has_purpose = graph::core::iri(graph::core::kHasPurpose);

  for (const auto& policy : g.instances_of(graph::core::iri(graph::core::kPrivacyPolicy))) {
    ++out.report.policies;
    o.add(policy, Term::iri(type), Term::iri(odrl("Set")));
    o.add(policy, Term::iri(odrl("uid")), policy);
    for (const auto& pr : practices_of(g, policy)) {
      auto action = profile.odrl_actions.find(pr.cls);
      if (action == profile.odrl_actions.end()) {
        out.report.unmapped.push_back(practice_json(pr, "practice type has no ODRL action mapping"));
        continue;
      }
      const auto data = g.objects(pr.node, has_data);
      if (data.empty()) {
        out.report.skipped.push_back(practice_json(pr, "practice has no data links"));
        continue;
      }
      const auto purposes = g.objects(pr.node, has_purpose);
      // Party links, in predicate order.
      std::vector<std::pair<std::string, Term>> parties;
      for (const auto& [pred, fn] : profile.odrl_party_functions)
        for (const auto& party : g.objects(pr.node, pred)) parties.emplace_back(fn, party);

      for (const auto& target : data) {
        const Term perm = Term::blank(blank_label("perm", pr.node.value() + "|" + target.value()));
        ++out.report.rules;
        o.add(policy, Term::iri(odrl("permission")), perm);
        o.add(perm, Term::iri(odrl("action")), Term::iri(action->second));
        o.add(perm, Term::iri(odrl("target")), target);
        for (const auto& purpose : purposes) {
          const Term c = Term::blank(blank_label("cons", perm.value() + "|" + purpose.value()));
          o.add(perm, Term::iri(odrl("constraint")), c);
          o.add(c, Term::iri(odrl("leftOperand")), Term::iri(odrl("purpose")));
          o.add(c, Term::iri(odrl("operator")), Term::iri(odrl("eq")));
          o.add(c, Term::iri(odrl("rightOperand")), purpose);
        }
        for (const auto& [fn, party] : parties) {
          const Term pn = Term::blank(blank_label("party", perm.value() + "|" + fn + "|" + party.value()));
          o.add(perm, Term::iri(fn), pn);
          o.add(pn, Term::iri(type), Term::iri(odrl("Party")));
          for (const auto& t : g.objects(party, type)) o.add(pn, Term::iri(type), t);
          for (const auto& l : g.objects(party, label)) o.add(pn, Term::iri(label), l);
        }
      }
    }
  }
  return out;
}

ConversionOutput to_psdtou(const rdf::Graph& g, const ConversionProfile& profile) {
  ConversionOutput out;
  auto& o = out.graph;
  const Term a = Term::iri(rdf::rdf_type());
  auto P = [&](std::string_view local) { return Term::iri(profile.psdtou(local)); };
  const std::string has_data = graph::core::iri(graph::core::kHasData);
  const std::string has_purpose = graph::core::iri(graph::core::kHasPurpose);
  const std::string shared_with = graph::core::iri(graph::core::kSharedWith);
  const std::string sharing_cls = graph::core::iri(graph::core::kThirdPartySharingDisclosure);

  for (const auto& policy : g.instances_of(graph::core::iri(graph::core::kPrivacyPolicy))) {
    ++out.report.policies;
    const Term app = Term::blank(blank_label("app", policy.value()));
    o.add(app, a, P("AppPolicy"));
    o.add(app, P("forPolicy"), policy);
    std::map<Term, Term> inputs;  // data class -> input spec node
    for (const auto& pr : practices_of(g, policy)) {
      const auto data = g.objects(pr.node, has_data);
      if (data.empty()) {
        out.report.skipped.push_back(practice_json(pr, "practice has no data links"));
        continue;
      }
      ++out.report.rules;
      const auto purposes = g.objects(pr.node, has_purpose);
      for (const auto& d : data) {
        auto it = inputs.find(d);
        if (it == inputs.end()) {
          const Term spec = Term::blank(blank_label("input", policy.value() + "|" + d.value()));
          o.add(app, P("inputSpec"), spec);
          o.add(spec, a, P("InputSpec"));
          o.add(spec, P("dataClass"), d);
          it = inputs.emplace(d, spec).first;
        }
        const Term usage = Term::blank(blank_label("usage", it->second.value() + "|" + pr.node.value()));
        o.add(it->second, P("usage"), usage);
        o.add(usage, a, P("Usage"));
        o.add(usage, P("practice"), pr.node);
        if (!pr.cls.empty()) o.add(usage, P("practiceType"), Term::iri(pr.cls));
        for (const auto& pu : purposes) o.add(usage, P("purpose"), pu);
      }
      if (pr.cls != sharing_cls) continue;
      const Term entry = Term::blank(blank_label("share", policy.value() + "|" + pr.node.value()));
      o.add(app, P("sharingEntry"), entry);
      o.add(entry, a, P("SharingEntry"));
      o.add(entry, P("practice"), pr.node);
      for (const auto& d : data) o.add(entry, P("dataClass"), d);
      bool any = false;
      for (const auto& party : g.objects(pr.node, shared_with))
        for (const auto& t : g.objects(party, rdf::rdf_type())) {
          o.add(entry, P("recipient"), t);
          any = true;
        }
      if (!any) {
        o.add(entry, P("recipient"), P("UnknownRecipient"));
        out.report.unmapped.push_back(practice_json(pr, "sharing practice without a typed recipient"));
      }
    }
  }
  return out;
}

}  // namespace ppa::policyconv
