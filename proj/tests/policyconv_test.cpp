#include <gtest/gtest.h>

#include "ppa/graph.hpp"
#include "ppa/policyconv.hpp"
#include "support/fixtures.hpp"

using namespace ppa;
using namespace ppa::policyconv;
using rdf::Term;

namespace {

const std::string kOdrl = "http://www.w3.org/ns/odrl/2/";
const std::string kPsd = "urn:pp-analyze:psdtou#";
const std::string kEmail = "https://w3id.org/dpv/pd#EmailAddress";
const std::string kAge = "https://w3id.org/dpv/pd#Age";
const std::string kMarketing = "https://w3id.org/dpv#Marketing";

std::string core(std::string_view l) { return graph::core::iri(l); }

// Hand-built practice graph.
struct G {
  rdf::Graph g;
  Term policy = Term::iri("urn:pp-analyze:policy:p");
  int n = 0;

  G() {
    g.add(policy, Term::iri(rdf::rdf_type()), Term::iri(core(graph::core::kPrivacyPolicy)));
  }
  Term practice(std::string_view cls, std::vector<std::string> data, std::vector<std::string> purposes) {
    Term p = Term::iri("urn:pp-analyze:practice:" + std::to_string(n++));
    g.add(policy, Term::iri(core(graph::core::kHasPractice)), p);
    g.add(p, Term::iri(rdf::rdf_type()), Term::iri(core(cls)));
    for (const auto& d : data) g.add(p, Term::iri(core(graph::core::kHasData)), Term::iri(d));
    for (const auto& u : purposes) g.add(p, Term::iri(core(graph::core::kHasPurpose)), Term::iri(u));
    return p;
  }
  void party(const Term& p, std::string_view pred, std::string_view cls, const std::string& label) {
    Term b = Term::blank("party" + std::to_string(n++));
    g.add(b, Term::iri(rdf::rdf_type()), Term::iri(core(cls)));
    g.add(b, Term::iri(std::string(rdf::ns::kRdfs) + "label"), Term::literal(label));
    g.add(p, Term::iri(core(pred)), b);
  }
};

std::vector<Term> permissions(const rdf::Graph& o, const Term& policy) { return o.objects(policy, kOdrl + "permission"); }

}  // namespace

TEST(Odrl, OneCollectionPractice) {
  G s;
  s.practice(graph::core::kDataCollectionUse, {kEmail}, {kMarketing});
  const auto out = to_odrl(s.g);
  EXPECT_TRUE(out.graph.has_type(s.policy, kOdrl + "Set"));
  const auto perms = permissions(out.graph, s.policy);
  ASSERT_EQ(perms.size(), 1u);
  EXPECT_EQ(out.graph.object(perms[0], kOdrl + "action")->value(), kOdrl + "use");
  EXPECT_EQ(out.graph.object(perms[0], kOdrl + "target")->value(), kEmail);
  const auto cons = out.graph.objects(perms[0], kOdrl + "constraint");
  ASSERT_EQ(cons.size(), 1u);
  EXPECT_EQ(out.graph.object(cons[0], kOdrl + "leftOperand")->value(), kOdrl + "purpose");
  EXPECT_EQ(out.graph.object(cons[0], kOdrl + "rightOperand")->value(), kMarketing);
}

TEST(Odrl, EmptyGraphHasNoRules) {
  G s;
  const auto out = to_odrl(s.g);
  EXPECT_EQ(out.report.policies, 1u);
  EXPECT_EQ(out.report.rules, 0u);
  EXPECT_TRUE(permissions(out.graph, s.policy).empty());
  EXPECT_EQ(to_odrl(rdf::Graph{}).graph.size(), 0u);
}

TEST(Odrl, CartesianExpansion) {
  G s;
  s.practice(graph::core::kDataCollectionUse, {kEmail, kAge}, {kMarketing});
  const auto out = to_odrl(s.g);
  const auto perms = permissions(out.graph, s.policy);
  ASSERT_EQ(perms.size(), 2u);
  std::set<std::string> targets;
  for (const auto& p : perms) {
    targets.insert(out.graph.object(p, kOdrl + "target")->value());
    EXPECT_EQ(out.graph.objects(p, kOdrl + "constraint").size(), 1u);
  }
  EXPECT_EQ(targets, (std::set<std::string>{kEmail, kAge}));
}

TEST(Odrl, SharingRecipientAndAssignee) {
  G s;
  const auto p = s.practice(graph::core::kThirdPartySharingDisclosure, {kEmail}, {});
  s.party(p, graph::core::kSharedWith, graph::core::kThirdParty, "partners");
  s.party(p, graph::core::kPerformedBy, graph::core::kFirstParty, "We");
  const auto out = to_odrl(s.g);
  const auto perms = permissions(out.graph, s.policy);
  ASSERT_EQ(perms.size(), 1u);
  EXPECT_EQ(out.graph.object(perms[0], kOdrl + "action")->value(), kOdrl + "share");
  const auto recv = out.graph.objects(perms[0], kOdrl + "recipient");
  ASSERT_EQ(recv.size(), 1u);
  EXPECT_TRUE(out.graph.has_type(recv[0], core(graph::core::kThirdParty)));
  EXPECT_EQ(out.graph.objects(perms[0], kOdrl + "assignee").size(), 1u);
}

TEST(Odrl, SkippedAndUnmappedReported) {
  G s;
  s.practice(graph::core::kDataCollectionUse, {}, {kMarketing});
  s.practice(graph::core::kDataPractice, {kEmail}, {});
  const auto out = to_odrl(s.g);
  EXPECT_EQ(out.report.skipped.size(), 1u);
  EXPECT_EQ(out.report.unmapped.size(), 1u);
  EXPECT_EQ(out.report.rules, 0u);
}

TEST(Odrl, ProfileOverridesMapping) {
  G s;
  s.practice(graph::core::kDataPractice, {kEmail}, {});
  const auto prof = ConversionProfile::from_json(nlohmann::json{{"odrl_actions", {{"DataPractice", "process"}}}});
  const auto out = to_odrl(s.g, prof);
  ASSERT_EQ(out.report.rules, 1u);
  EXPECT_EQ(out.graph.object(permissions(out.graph, s.policy)[0], kOdrl + "action")->value(), kOdrl + "process");
  EXPECT_THROW(ConversionProfile::from_json(nlohmann::json{{"data_identifier", "hash"}}), std::invalid_argument);
}

TEST(Psdtou, OnePractice) {
  G s;
  s.practice(graph::core::kDataCollectionUse, {kEmail}, {kMarketing});
  const auto out = to_psdtou(s.g);
  const auto apps = out.graph.instances_of(kPsd + "AppPolicy");
  ASSERT_EQ(apps.size(), 1u);
  const auto specs = out.graph.objects(apps[0], kPsd + "inputSpec");
  ASSERT_EQ(specs.size(), 1u);
  EXPECT_EQ(out.graph.object(specs[0], kPsd + "dataClass")->value(), kEmail);
  const auto usages = out.graph.objects(specs[0], kPsd + "usage");
  ASSERT_EQ(usages.size(), 1u);
  EXPECT_EQ(out.graph.object(usages[0], kPsd + "purpose")->value(), kMarketing);
  EXPECT_TRUE(out.graph.objects(apps[0], kPsd + "sharingEntry").empty());
}

TEST(Psdtou, SharingEntryRecipientType) {
  G s;
  const auto p = s.practice(graph::core::kThirdPartySharingDisclosure, {kEmail}, {});
  s.party(p, graph::core::kSharedWith, graph::core::kThirdParty, "partners");
  const auto out = to_psdtou(s.g);
  const auto apps = out.graph.instances_of(kPsd + "AppPolicy");
  const auto entries = out.graph.objects(apps[0], kPsd + "sharingEntry");
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_EQ(out.graph.object(entries[0], kPsd + "recipient")->value(), core(graph::core::kThirdParty));
}

TEST(Psdtou, SameClassDeduplicated) {
  G s;
  s.practice(graph::core::kDataCollectionUse, {kEmail}, {kMarketing});
  s.practice(graph::core::kDataCollectionUse, {kEmail}, {"https://w3id.org/dpv#ServiceProvision"});
  const auto out = to_psdtou(s.g);
  const auto apps = out.graph.instances_of(kPsd + "AppPolicy");
  const auto specs = out.graph.objects(apps[0], kPsd + "inputSpec");
  ASSERT_EQ(specs.size(), 1u);
  const auto usages = out.graph.objects(specs[0], kPsd + "usage");
  ASSERT_EQ(usages.size(), 2u);
  std::size_t purposes = 0;
  for (const auto& u : usages) purposes += out.graph.objects(u, kPsd + "purpose").size();
  EXPECT_EQ(purposes, 2u);
}

TEST(Conversion, DeterministicAndWritable) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = fixtures::random_extraction(seed, "svc");
    const auto g = graph::build_graph(r, "svc", r.source_uri, "v").graph.triples;
    const auto prefixes = output_prefixes(ConversionProfile::defaults());
    const auto a = rdf::write_turtle(to_odrl(g).graph, prefixes);
    EXPECT_EQ(a, rdf::write_turtle(to_odrl(g).graph, prefixes));
    EXPECT_EQ(rdf::parse_turtle(a), to_odrl(g).graph);
    EXPECT_EQ(rdf::parse_turtle(rdf::write_turtle(to_psdtou(g).graph, prefixes)), to_psdtou(g).graph);
  }
}
