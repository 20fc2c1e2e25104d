#pragma once

// Relaxed-match scoring, benchmark runs against gold corpora, and fine-tune
// dataset export.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppa/backend.hpp"
#include "ppa/corpus.hpp"
#include "ppa/prompt.hpp"
#include "ppa/repair.hpp"
#include "ppa/taxonomy.hpp"
#include "ppa/types.hpp"

namespace ppa::eval {

// ---------------------------------------------------------------------------
// metrics

enum class Denominator { Max, Gold, Mean };

std::optional<Denominator> parse_denominator(std::string_view s);
std::string_view to_string(Denominator d);

struct MatchConfig {
  double threshold = 0.9;
  Denominator denominator = Denominator::Max;
  bool relaxed = true;  // false: exact (case-folded) matches only
};

// Longest common contiguous substring length, in code points.
std::size_t lcs_length(std::u32string_view a, std::u32string_view b);

// Computed on case-folded, whitespace-collapsed text. Both empty -> 1,
// exactly one empty -> 0. With Denominator::Gold, b is the gold side.
double lcs_ratio(std::string_view a, std::string_view b, Denominator d = Denominator::Max);

struct MatchedPair {
  std::size_t pred = 0;
  std::size_t gold = 0;
  double credit = 0.0;
  bool operator==(const MatchedPair&) const = default;
};

struct MatchOutcome {
  double tp = 0.0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::vector<MatchedPair> pairs;
};

// Pass 1 matches equal texts (credit 1); pass 2 matches the remaining pairs
// with ratio >= threshold greedily by descending ratio, ties by (pred, gold)
// index, credit = ratio.
MatchOutcome match_spans(const std::vector<std::string>& pred, const std::vector<std::string>& gold,
                         const MatchConfig& config = {});

// Same procedure restricted to pairs accepted by eligible(pred, gold).
template <class Eligible>
MatchOutcome match_spans_if(const std::vector<std::string>& pred, const std::vector<std::string>& gold,
                            const MatchConfig& config, Eligible eligible);

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Conventional orientation: precision = tp/(tp+fp), recall = tp/(tp+fn).
PRF prf1(double tp, double fp, double fn);

// Empty gold: 1 if the prediction is empty too, else 0.
double sample_f1(const MatchOutcome& m, std::size_t n_pred, std::size_t n_gold);

struct Facets {
  std::optional<double> f1;
  std::optional<double> f1_n;  // samples with non-empty gold
  std::optional<double> f1_e;  // samples with empty gold
  std::size_t samples = 0;
  std::size_t nonempty = 0;
  std::size_t empty = 0;
};

struct Sample {
  std::vector<std::string> pred;
  std::vector<std::string> gold;
};

struct ScoredSample {
  double f1 = 0.0;
  bool gold_empty = false;
};

Facets aggregate(const std::vector<ScoredSample>& samples);
Facets macro_f1(const std::vector<Sample>& samples, const MatchConfig& config = {});

struct ClassifiedEntity {
  std::string entity;
  std::string term;  // IRI, compact IRI or label
};

// A prediction scores only against a gold entity with the same resolved term
// IRI; credit is the entity match credit. Unresolved predictions count as fp.
MatchOutcome score_classification(const std::vector<ClassifiedEntity>& pred, const std::vector<ClassifiedEntity>& gold,
                                  const taxonomy::Taxonomy& taxonomy, taxonomy::TermKind kind,
                                  const MatchConfig& config = {});

// ---------------------------------------------------------------------------
// gold schema: how brat labels map onto the pipeline's vocabulary

struct GoldSchema {
  // normalized brat entity label -> span kind
  std::map<std::string, SpanKind> entity_kinds;
  // normalized brat entity label -> party subtype (for labels that imply one)
  std::map<std::string, std::string> party_subtypes;
  // normalized attribute names whose value gives a party subtype
  std::vector<std::string> party_subtype_attributes;
  // normalized event / trigger label -> action subtype
  std::map<std::string, std::string> event_subtypes;
  // normalized role or relation label -> event type (HAS_DATA, ...)
  std::map<std::string, std::string> roles;

  static GoldSchema defaults();
  static GoldSchema from_json(const nlohmann::json& j);  // entries merge into defaults
};

// Gold view of one segment in pipeline terms.
struct GoldSegment {
  std::string doc_id;
  std::size_t segment_index = 0;
  std::string text;
  std::vector<EntitySpan> entities;  // data, purpose, party with ids e0..
  std::vector<EntitySpan> actions;   // a0..
  std::vector<RelationTuple> relations;
  std::map<std::string, std::string> terms;  // entity id -> dpv term as written in gold
};

std::vector<GoldSegment> gold_segments(const corpus::GoldDocument& doc, const GoldSchema& schema);
std::vector<GoldSegment> gold_segments(const std::vector<corpus::GoldDocument>& corpus, const GoldSchema& schema);

// Extras handed to classification / relation prompts for this segment.
std::vector<prompt::PromptEntity> task_extras(TaskKind task, const GoldSegment& seg);
// Whether the task has a data point for this segment (classification needs
// gold entities of its kind; relations need an action and another span).
bool task_applies(TaskKind task, const GoldSegment& seg);
// Canonical string items compared by the scorer.
std::vector<std::string> gold_items(TaskKind task, const GoldSegment& seg);
// Expected model answer, as JSON in the prompt's output schema.
nlohmann::json expected_answer(TaskKind task, const GoldSegment& seg, const taxonomy::Taxonomy* taxonomy = nullptr);

// ---------------------------------------------------------------------------
// benchmark

enum class Aggregation { Segment, Document };

struct BenchmarkOptions {
  MatchConfig match;
  Aggregation aggregation = Aggregation::Segment;
  GoldSchema schema = GoldSchema::defaults();
  prompt::PromptOptions prompt;  // vocabulary filled from the taxonomy when empty
  bool vocabulary_in_prompt = true;
  repair::RefusalTable refusals;
};

struct SampleDetail {
  std::string doc_id;
  std::size_t segment_index = 0;
  std::vector<std::string> pred;
  std::vector<std::string> gold;
  double f1_strict = 0.0;
  double f1_rx = 0.0;
  std::optional<std::string> error;
};

struct TaskScore {
  TaskKind task = TaskKind::DataRecognition;
  Facets strict;
  Facets rx;
  std::size_t failures = 0;
  std::vector<SampleDetail> samples;
};

struct ScoreReport {
  std::string model;
  std::vector<TaskScore> tasks;

  const TaskScore* task(TaskKind t) const;
  nlohmann::json to_json() const;
};

// Runs each task on every applicable gold segment through the backend and
// scores it. Failed queries are scored as empty predictions.
ScoreReport run_benchmark(const std::vector<corpus::GoldDocument>& corpus, backend::Backend& backend,
                          const std::vector<TaskKind>& tasks, const taxonomy::Taxonomy& taxonomy,
                          const BenchmarkOptions& options = {});

// One row per report; per task the columns f1_n, f1_e, f1, then rx f1_n,
// rx f1_e, rx f1. Absent facets print as "-".
std::string benchmark_table(const std::vector<ScoreReport>& reports);

// ---------------------------------------------------------------------------
// fine-tune export

struct FinetuneSpec {
  std::size_t n_train_nonempty = 0;
  std::size_t n_train_empty = 0;
  std::size_t n_val_nonempty = 0;
  std::size_t n_val_empty = 0;
  std::uint64_t seed = 0;

  static FinetuneSpec parse(std::string_view dash_form, std::uint64_t seed = 0);
  std::string to_string() const;
  std::size_t train_size() const { return n_train_nonempty + n_train_empty; }
  std::size_t val_size() const { return n_val_nonempty + n_val_empty; }
};

class InsufficientDataError : public std::runtime_error {
 public:
  InsufficientDataError(std::string stratum, std::size_t needed, std::size_t available);
  const std::string& stratum() const { return stratum_; }
  std::size_t available() const { return available_; }

 private:
  std::string stratum_;
  std::size_t available_;
};

struct FinetuneRecord {
  std::string sample_id;  // "<doc_id>#<segment index>"
  bool nonempty = false;
  nlohmann::json messages;  // [{role, content}] system, user, assistant

  std::string to_jsonl() const;  // {"messages": [...]}
};

struct FinetuneExport {
  std::vector<FinetuneRecord> train;
  std::vector<FinetuneRecord> validation;
};

struct FinetuneOptions {
  GoldSchema schema = GoldSchema::defaults();
  prompt::PromptOptions prompt;
  bool vocabulary_in_prompt = true;
};

FinetuneExport select_finetune_data(const std::vector<corpus::GoldDocument>& corpus, TaskKind task,
                                    const FinetuneSpec& spec, const taxonomy::Taxonomy* taxonomy = nullptr,
                                    const FinetuneOptions& options = {});

// Writes train.jsonl and validation.jsonl into dir.
void write_finetune(const FinetuneExport& e, const std::filesystem::path& dir);

// Seeded generator with a portable bounded draw and shuffle (the standard
// distributions are not specified bit-for-bit across library versions).
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}
  // Uniform in [0, bound) by rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound);
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------

namespace detail {
MatchOutcome match_with(const std::vector<std::string>& pred, const std::vector<std::string>& gold,
                        const MatchConfig& config, const std::vector<std::vector<bool>>& allowed);
}

template <class Eligible>
MatchOutcome match_spans_if(const std::vector<std::string>& pred, const std::vector<std::string>& gold,
                            const MatchConfig& config, Eligible eligible) {
  std::vector<std::vector<bool>> allowed(pred.size(), std::vector<bool>(gold.size()));
  for (std::size_t i = 0; i < pred.size(); ++i)
    for (std::size_t j = 0; j < gold.size(); ++j) allowed[i][j] = eligible(i, j);
  return detail::match_with(pred, gold, config, allowed);
}

}  // namespace ppa::eval
