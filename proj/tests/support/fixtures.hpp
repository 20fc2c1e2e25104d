#pragma once

// Shared helpers for tests: fixture paths, the scripted answer table behind
// the shipped replay cache, and a synthetic brat corpus generator.

#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "ppa/backend.hpp"
#include "ppa/extraction.hpp"
#include "ppa/taxonomy.hpp"

namespace ppa::fixtures {

std::filesystem::path fixture_dir();
std::filesystem::path fixture_policy_path();
std::filesystem::path fixture_answers_path();
std::filesystem::path fixture_cache_path();
std::filesystem::path taxonomy_path();

const taxonomy::Taxonomy& vendored_taxonomy();

// Segment text of a prompt: the user text for recognition prompts, the part
// between the segment marks otherwise.
std::string prompt_segment(const std::string& user);

// segment text -> task name -> raw response
using AnswerTable = std::map<std::string, std::map<std::string, std::string>>;
AnswerTable load_answers(const std::filesystem::path& path);

// Looks answers up by (segment, task). Recognition tasks without an entry
// answer "[]"; anything else is a miss.
std::shared_ptr<backend::ScriptedClient> scripted_client(const AnswerTable& answers);

// Runs the fixture policy through a record-mode backend over the scripted
// client, writing the cache to cache_path (replaced if present).
void record_fixture_cache(const std::filesystem::path& cache_path);

std::unique_ptr<backend::Backend> replay_backend(const std::filesystem::path& cache_path);

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Writes n_docs brat documents of segments_per_doc lines each. Roughly one
// line in three carries annotations (a collection or sharing event with data,
// purpose and party arguments, grounded in the vendored snapshot); the others
// are plain filler sentences.
struct SyntheticCorpus {
  std::size_t documents = 0;
  std::size_t segments = 0;
  std::size_t nonempty_segments = 0;
};
SyntheticCorpus write_synthetic_gold(const std::filesystem::path& dir, std::size_t n_docs,
                                     std::size_t segments_per_doc, std::uint64_t seed);

// Random but well-formed extraction result: spans occur verbatim in their
// segment, data/purpose spans are mostly grounded in the vendored snapshot,
// relations link actions to spans of a fitting kind.
extraction::ExtractionResult random_extraction(std::uint64_t seed, const std::string& service_id);

void write_file(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace ppa::fixtures
