#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "ppa/eval.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace ppa;
using namespace ppa::eval;
namespace oracle = ppa::fixtures::oracle;

namespace {

std::vector<ScoredSample> scored(std::initializer_list<std::pair<double, bool>> v) {
  std::vector<ScoredSample> out;
  for (auto [f, e] : v) out.push_back({f, e});
  return out;
}

}  // namespace

TEST(LcsRatio, Examples) {
  EXPECT_DOUBLE_EQ(lcs_ratio("device information", "device information"), 1.0);
  EXPECT_DOUBLE_EQ(lcs_ratio("abc", "xyz"), 0.0);
  EXPECT_DOUBLE_EQ(lcs_ratio("email address", "e-mail address"), 12.0 / 14.0);
  EXPECT_DOUBLE_EQ(lcs_ratio("", ""), 1.0);
  EXPECT_DOUBLE_EQ(lcs_ratio("", "a"), 0.0);
  EXPECT_DOUBLE_EQ(lcs_ratio("Email  Address", "email address"), 1.0);
}

TEST(LcsRatio, DenominatorKnob) {
  EXPECT_DOUBLE_EQ(lcs_ratio("your email address", "email address", Denominator::Gold), 1.0);
  EXPECT_DOUBLE_EQ(lcs_ratio("your email address", "email address", Denominator::Mean), 13.0 / 15.5);
  EXPECT_EQ(parse_denominator("gold"), Denominator::Gold);
  EXPECT_FALSE(parse_denominator("median"));
}

TEST(LcsRatio, AgreesWithBruteForce) {
  oracle::InstanceGen gen(42);
  for (int i = 0; i < 500; ++i) {
    const std::string a = gen.word(0, 30), b = gen.below(2) ? gen.mutate(a) : gen.word(0, 30);
    EXPECT_DOUBLE_EQ(lcs_ratio(a, b), oracle::lcs_ratio(a, b)) << a << " | " << b;
  }
}

TEST(LcsRatio, Properties) {
  oracle::InstanceGen gen(9);
  for (int i = 0; i < 300; ++i) {
    const std::string a = gen.word(1, 16), b = gen.mutate(a);
    const double r = lcs_ratio(a, b);
    EXPECT_DOUBLE_EQ(r, lcs_ratio(b, a));
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
    const auto na = text::normalize_for_match(a), nb = text::normalize_for_match(b);
    EXPECT_EQ(r == 1.0, na == nb);
    const bool share = std::any_of(na.begin(), na.end(), [&](char c) { return nb.find(c) != std::string::npos; });
    EXPECT_EQ(r == 0.0, !share && !(na.empty() && nb.empty()));
  }
}

TEST(MatchSpans, WorkedExamples) {
  auto m = match_spans({"email address"}, {"email address"});
  EXPECT_DOUBLE_EQ(m.tp, 1.0);
  EXPECT_EQ(m.fp, 0u);
  EXPECT_EQ(m.fn, 0u);

  EXPECT_NEAR(lcs_ratio("your email address", "email address"), 13.0 / 18.0, 1e-12);
  m = match_spans({"your email address"}, {"email address"});
  EXPECT_DOUBLE_EQ(m.tp, 0.0);
  EXPECT_EQ(m.fp, 1u);
  EXPECT_EQ(m.fn, 1u);

  m = match_spans({"personal information we collect."}, {"personal information we collect"});
  EXPECT_DOUBLE_EQ(m.tp, 31.0 / 32.0);
  EXPECT_EQ(m.fp, 0u);
  EXPECT_EQ(m.fn, 0u);
}

TEST(MatchSpans, ExactPassFirst) {
  // "abcdefghij" is an exact match for gold[1]; the relaxed pair must not steal it.
  const auto m = match_spans({"abcdefghij", "abcdefghijk"}, {"abcdefghijk", "abcdefghij"});
  EXPECT_DOUBLE_EQ(m.tp, 2.0);
}

TEST(MatchSpans, StrictModeIgnoresNearMatches) {
  MatchConfig c;
  c.relaxed = false;
  const auto m = match_spans({"personal information we collect."}, {"personal information we collect"}, c);
  EXPECT_DOUBLE_EQ(m.tp, 0.0);
}

TEST(MatchSpans, ConservationAndOracle) {
  oracle::InstanceGen gen(17);
  int equal = 0;
  const int n = 400;
  for (int i = 0; i < n; ++i) {
    auto [pred, gold] = gen.instance();
    const auto m = match_spans(pred, gold);
    EXPECT_EQ(m.pairs.size() + m.fp, pred.size());
    EXPECT_EQ(m.pairs.size() + m.fn, gold.size());
    EXPECT_LE(m.tp, static_cast<double>(std::min(pred.size(), gold.size())) + 1e-12);
    for (const auto& p : m.pairs) {
      EXPECT_GT(p.credit, 0.0);
      EXPECT_LE(p.credit, 1.0);
    }
    const double opt = oracle::optimal_credit(pred, gold, 0.9);
    EXPECT_LE(m.tp, opt + 1e-9);
    equal += std::abs(m.tp - opt) < 1e-9;
  }
  EXPECT_GE(equal, n * 95 / 100);
}

TEST(Prf1, Examples) {
  auto r = prf1(1, 0, 0);
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 1.0);
  EXPECT_DOUBLE_EQ(r.f1, 1.0);
  r = prf1(0, 1, 1);
  EXPECT_DOUBLE_EQ(r.f1, 0.0);
  EXPECT_DOUBLE_EQ(prf1(0.969, 0, 0).f1, 1.0);
  r = prf1(2, 1, 3);
  EXPECT_DOUBLE_EQ(r.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.recall, 2.0 / 5.0);
}

TEST(Prf1, SwapInvariant) {
  eval::SeededRng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const double tp = static_cast<double>(rng.below(1000)) / 7.0;
    const double fp = static_cast<double>(rng.below(50)), fn = static_cast<double>(rng.below(50));
    if (tp + fp == 0 || tp + fn == 0) continue;
    const double p = tp / (tp + fn), r = tp / (tp + fp);  // swapped orientation
    const double f_swapped = p + r == 0 ? 0.0 : 2 * p * r / (p + r);
    EXPECT_NEAR(prf1(tp, fp, fn).f1, f_swapped, 1e-12);
  }
}

TEST(MacroF1, Conventions) {
  auto f = macro_f1({{{}, {}}, {{"a"}, {"a"}}});
  EXPECT_DOUBLE_EQ(*f.f1, 1.0);
  EXPECT_DOUBLE_EQ(*f.f1_n, 1.0);
  EXPECT_DOUBLE_EQ(*f.f1_e, 1.0);

  f = macro_f1({{{"a"}, {}}});
  EXPECT_DOUBLE_EQ(*f.f1, 0.0);
  EXPECT_DOUBLE_EQ(*f.f1_e, 0.0);
  EXPECT_FALSE(f.f1_n.has_value());

  f = macro_f1({{{"x"}, {"x"}}, {{"y"}, {"y"}}, {{}, {}}, {{"z"}, {}}});
  EXPECT_DOUBLE_EQ(*f.f1, 0.75);
  EXPECT_DOUBLE_EQ(*f.f1_n, 1.0);
  EXPECT_DOUBLE_EQ(*f.f1_e, 0.5);

  f = macro_f1({});
  EXPECT_FALSE(f.f1.has_value());
}

TEST(MacroF1, PermutationInvariant) {
  oracle::InstanceGen gen(23);
  std::vector<Sample> samples;
  for (int i = 0; i < 40; ++i) {
    auto [p, g] = gen.instance();
    samples.push_back({p, g});
  }
  const auto a = macro_f1(samples);
  eval::SeededRng rng(1);
  rng.shuffle(samples);
  const auto b = macro_f1(samples);
  EXPECT_NEAR(*a.f1, *b.f1, 1e-12);
  EXPECT_NEAR(*a.f1_n, *b.f1_n, 1e-12);
}

TEST(Aggregate, MeansOverFacets) {
  const auto f = aggregate(scored({{1.0, false}, {0.5, false}, {0.0, true}}));
  EXPECT_DOUBLE_EQ(*f.f1, 0.5);
  EXPECT_DOUBLE_EQ(*f.f1_n, 0.75);
  EXPECT_DOUBLE_EQ(*f.f1_e, 0.0);
  EXPECT_EQ(f.nonempty, 2u);
  EXPECT_EQ(f.empty, 1u);
}

TEST(ScoreClassification, Rules) {
  const auto& tax = fixtures::vendored_taxonomy();
  const auto k = taxonomy::TermKind::Data;
  auto m = score_classification({{"email address", "pd:EmailAddress"}}, {{"email address", "EmailAddress"}}, tax, k);
  EXPECT_DOUBLE_EQ(m.tp, 1.0);
  // Parent class instead of the gold leaf.
  m = score_classification({{"email address", "pd:Contact"}}, {{"email address", "pd:EmailAddress"}}, tax, k);
  EXPECT_DOUBLE_EQ(m.tp, 0.0);
  EXPECT_EQ(m.fp, 1u);
  EXPECT_EQ(m.fn, 1u);
  // Relaxed entity match with the right term: credit is the entity ratio.
  const std::string gold = "the devices ip address";  // 22 code points
  const std::string pred = "the devices ip address.";  // ratio 22/23
  m = score_classification({{pred, "pd:IPAddress"}}, {{gold, "pd:IPAddress"}}, tax, k);
  EXPECT_DOUBLE_EQ(m.tp, 22.0 / 23.0);
  m = score_classification({{"email address", "Nonsense"}}, {{"email address", "pd:EmailAddress"}}, tax, k);
  EXPECT_EQ(m.fp, 1u);
}

TEST(FinetuneSpecs, ParseAndPrint) {
  const auto s = FinetuneSpec::parse("10-30-2-6", 3);
  EXPECT_EQ(s.n_train_nonempty, 10u);
  EXPECT_EQ(s.n_train_empty, 30u);
  EXPECT_EQ(s.n_val_nonempty, 2u);
  EXPECT_EQ(s.n_val_empty, 6u);
  EXPECT_EQ(s.seed, 3u);
  EXPECT_EQ(s.to_string(), "10-30-2-6");
  EXPECT_ANY_THROW(FinetuneSpec::parse("10-30-2"));
  EXPECT_ANY_THROW(FinetuneSpec::parse("a-b-c-d"));
}

class FinetuneCorpus : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fixtures::TempDir("ft");
    info_ = fixtures::write_synthetic_gold(dir_->path(), 8, 30, 2024);
    corpus_ = new std::vector<corpus::GoldDocument>(corpus::load_gold_corpus(dir_->path()));
  }
  static void TearDownTestSuite() {
    delete corpus_;
    delete dir_;
  }
  static fixtures::TempDir* dir_;
  static fixtures::SyntheticCorpus info_;
  static std::vector<corpus::GoldDocument>* corpus_;
};
fixtures::TempDir* FinetuneCorpus::dir_ = nullptr;
fixtures::SyntheticCorpus FinetuneCorpus::info_;
std::vector<corpus::GoldDocument>* FinetuneCorpus::corpus_ = nullptr;

TEST_F(FinetuneCorpus, Cardinality) {
  ASSERT_GE(info_.segments, 150u);
  ASSERT_GE(info_.nonempty_segments, 50u);
  const std::pair<const char*, std::pair<std::size_t, std::size_t>> cases[] = {
      {"10-30-2-6", {40, 8}}, {"20-20-4-4", {40, 8}}, {"40-80-10-20", {120, 30}}, {"0-0-0-0", {0, 0}}};
  for (const auto& [spec, sizes] : cases) {
    const auto e = select_finetune_data(*corpus_, TaskKind::DataRecognition, FinetuneSpec::parse(spec, 7));
    EXPECT_EQ(e.train.size(), sizes.first) << spec;
    EXPECT_EQ(e.validation.size(), sizes.second) << spec;
    std::set<std::string> ids;
    for (const auto& r : e.train) ids.insert(r.sample_id);
    for (const auto& r : e.validation) EXPECT_FALSE(ids.count(r.sample_id)) << r.sample_id;
    EXPECT_EQ(ids.size(), e.train.size());
  }
}

TEST_F(FinetuneCorpus, StratumCountsAndMessages) {
  const auto e = select_finetune_data(*corpus_, TaskKind::DataRecognition, FinetuneSpec::parse("10-30-2-6", 1));
  std::size_t ne = 0;
  for (const auto& r : e.train) {
    ne += r.nonempty;
    ASSERT_EQ(r.messages.size(), 3u);
    EXPECT_EQ(r.messages[0]["role"], "system");
    EXPECT_EQ(r.messages[2]["role"], "assistant");
    const auto answer = nlohmann::json::parse(r.messages[2]["content"].get<std::string>());
    EXPECT_EQ(answer["entities"].empty(), !r.nonempty);
  }
  EXPECT_EQ(ne, 10u);
}

TEST_F(FinetuneCorpus, SeedStable) {
  auto dump = [&](std::uint64_t seed) {
    const auto e = select_finetune_data(*corpus_, TaskKind::PurposeRecognition, FinetuneSpec::parse("20-20-4-4", seed));
    std::string s;
    for (const auto& r : e.train) s += r.to_jsonl() + "\n";
    for (const auto& r : e.validation) s += r.to_jsonl() + "\n";
    return s;
  };
  EXPECT_EQ(dump(11), dump(11));
  EXPECT_NE(dump(11), dump(12));
}

TEST_F(FinetuneCorpus, InsufficientStratum) {
  try {
    select_finetune_data(*corpus_, TaskKind::DataRecognition, FinetuneSpec::parse("5000-0-0-0"));
    FAIL();
  } catch (const InsufficientDataError& e) {
    EXPECT_EQ(e.stratum(), "non-empty");
    EXPECT_EQ(e.available(), info_.nonempty_segments);
  }
}

TEST_F(FinetuneCorpus, ClassificationAnswersUseGoldTerms) {
  const auto e = select_finetune_data(*corpus_, TaskKind::DataClassification, FinetuneSpec::parse("5-0-0-0"),
                                      &fixtures::vendored_taxonomy());
  ASSERT_EQ(e.train.size(), 5u);
  for (const auto& r : e.train) {
    const auto answer = nlohmann::json::parse(r.messages[2]["content"].get<std::string>());
    ASSERT_FALSE(answer["classifications"].empty());
    EXPECT_NO_THROW(fixtures::vendored_taxonomy().resolve_term(answer["classifications"][0]["term"].get<std::string>(),
                                                              taxonomy::TermKind::Data));
  }
}

TEST_F(FinetuneCorpus, WriteFiles) {
  fixtures::TempDir out("ftout");
  const auto e = select_finetune_data(*corpus_, TaskKind::RelationRecognition, FinetuneSpec::parse("3-0-1-0"));
  write_finetune(e, out.path());
  const auto train = fixtures::read_file(out.path() / "train.jsonl");
  EXPECT_EQ(std::count(train.begin(), train.end(), '\n'), 3);
  EXPECT_TRUE(std::filesystem::exists(out.path() / "validation.jsonl"));
}

// Benchmark over the synthetic corpus through a scripted backend.
namespace {

std::unique_ptr<backend::Backend> answering(const std::vector<corpus::GoldDocument>& corpus, bool correct) {
  const auto segs = gold_segments(corpus, GoldSchema::defaults());
  auto client = std::make_shared<backend::ScriptedClient>();
  client->set_fallback([segs, correct](const backend::ChatRequest& r) -> std::string {
    if (!correct) return "[]";
    const std::string seg = fixtures::prompt_segment(r.messages.user);
    for (const auto& s : segs)
      if (s.text == seg) return expected_answer(r.task, s, &fixtures::vendored_taxonomy()).dump();
    return "[]";
  });
  backend::BackendConfig cfg;
  cfg.cache_mode = backend::CacheMode::Live;
  return std::make_unique<backend::Backend>(cfg, client, nullptr);
}

}  // namespace

TEST_F(FinetuneCorpus, BenchmarkPerfectScores) {
  auto b = answering(*corpus_, true);
  const auto rep = run_benchmark(*corpus_, *b, {kAllTasks.begin(), kAllTasks.end()}, fixtures::vendored_taxonomy());
  for (const auto& t : rep.tasks) {
    EXPECT_DOUBLE_EQ(t.strict.f1.value_or(-1), 1.0) << task_name(t.task);
    EXPECT_DOUBLE_EQ(t.rx.f1.value_or(-1), 1.0) << task_name(t.task);
    if (t.strict.f1_n) EXPECT_DOUBLE_EQ(*t.strict.f1_n, 1.0);
    if (t.strict.f1_e) EXPECT_DOUBLE_EQ(*t.strict.f1_e, 1.0);
    EXPECT_EQ(t.failures, 0u);
  }
}

TEST_F(FinetuneCorpus, BenchmarkAllEmptyAnswers) {
  auto b = answering(*corpus_, false);
  const auto rep =
      run_benchmark(*corpus_, *b, {TaskKind::DataRecognition, TaskKind::PartyRecognition}, fixtures::vendored_taxonomy());
  for (const auto& t : rep.tasks) {
    EXPECT_DOUBLE_EQ(*t.strict.f1_e, 1.0);
    EXPECT_DOUBLE_EQ(*t.strict.f1_n, 0.0);
  }
  const std::string table = benchmark_table({rep});
  EXPECT_NE(table.find("DR f1_n"), std::string::npos);
  EXPECT_NE(table.find("rx"), std::string::npos);
}

TEST_F(FinetuneCorpus, DocumentAggregation) {
  auto b = answering(*corpus_, false);
  BenchmarkOptions o;
  o.aggregation = Aggregation::Document;
  const auto rep = run_benchmark(*corpus_, *b, {TaskKind::DataRecognition}, fixtures::vendored_taxonomy(), o);
  EXPECT_EQ(rep.tasks[0].strict.samples, corpus_->size());
}

// Facets recomputed from the per-sample rows.
TEST_F(FinetuneCorpus, FacetsMatchSampleRows) {
  auto client = std::make_shared<backend::ScriptedClient>();
  eval::SeededRng rng(3);
  const std::string answers[] = {R"(["email address"])", "[]", R"(["your phone number", "location"])", "None"};
  client->set_fallback([&](const backend::ChatRequest&) { return answers[rng.below(4)]; });
  backend::BackendConfig cfg;
  cfg.cache_mode = backend::CacheMode::Live;
  backend::Backend b(cfg, client, nullptr);
  const auto rep = run_benchmark(*corpus_, b, {TaskKind::DataRecognition}, fixtures::vendored_taxonomy());
  const auto& t = rep.tasks[0];
  double all = 0, ne = 0, em = 0;
  std::size_t n_ne = 0, n_em = 0;
  for (const auto& s : t.samples) {
    all += s.f1_rx;
    (s.gold.empty() ? em : ne) += s.f1_rx;
    (s.gold.empty() ? n_em : n_ne) += 1;
  }
  EXPECT_NEAR(*t.rx.f1, all / t.samples.size(), 1e-12);
  EXPECT_NEAR(*t.rx.f1_n, ne / n_ne, 1e-12);
  EXPECT_NEAR(*t.rx.f1_e, em / n_em, 1e-12);
}
