#pragma once

// Run configuration. Values are layered: defaults, then the config file,
// then PPA_* environment variables, then command-line flags. The API key is
// never part of this structure; it is read from the environment variable
// named by backend.api_key_env when a live client is created.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "ppa/backend.hpp"
#include "ppa/eval.hpp"

namespace ppa::config {

struct RunConfig {
  backend::BackendConfig backend;
  std::filesystem::path taxonomy_path;
  eval::MatchConfig match;
  eval::Aggregation aggregation = eval::Aggregation::Segment;
  std::filesystem::path profile_path;      // conversion profile; empty = built-in
  std::filesystem::path gold_schema_path;  // brat label mapping; empty = built-in
  std::filesystem::path out_dir = "out";
  std::size_t jobs = 1;
  std::uint64_t seed = 0;

  // Effective values, for the startup report.
  nlohmann::json to_json() const;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
EnvLookup process_env();

// Recognized keys and the environment variable for each.
const std::map<std::string, std::string>& env_names();

// file: parsed config file or null; flags: key -> value as given on the
// command line. Unknown keys and credential keys in the file are errors.
RunConfig resolve(const nlohmann::json* file, const EnvLookup& env, const std::map<std::string, std::string>& flags);

nlohmann::json load_file(const std::filesystem::path& path);

}  // namespace ppa::config
