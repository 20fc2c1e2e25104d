#include "ppa/config.hpp"

#include <cstdlib>

#include "ppa/corpus.hpp"
#include "ppa/text.hpp"

#ifndef PPA_DEFAULT_TAXONOMY
#define PPA_DEFAULT_TAXONOMY "data/dpv-snapshot.ttl"
#endif

namespace ppa::config {

using nlohmann::json;

const std::map<std::string, std::string>& env_names() {
  static const std::map<std::string, std::string> k = {
      {"model", "PPA_MODEL"},
      {"cache_mode", "PPA_CACHE_MODE"},
      {"cache", "PPA_CACHE"},
      {"api_base", "PPA_API_BASE"},
      {"max_retries", "PPA_MAX_RETRIES"},
      {"temperature", "PPA_TEMPERATURE"},
      {"min_interval_ms", "PPA_MIN_INTERVAL_MS"},
      {"taxonomy", "PPA_TAXONOMY"},
      {"threshold", "PPA_THRESHOLD"},
      {"denominator", "PPA_DENOMINATOR"},
      {"aggregation", "PPA_AGGREGATION"},
      {"profile", "PPA_PROFILE"},
      {"gold_schema", "PPA_GOLD_SCHEMA"},
      {"out", "PPA_OUT"},
      {"jobs", "PPA_JOBS"},
      {"seed", "PPA_SEED"},
  };
  return k;
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (v == nullptr) return std::nullopt;
    return std::string(v);
  };
}

namespace {

std::string scalar(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("setting '" + key + "' expects a number, got '" + v + "'");
  }
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("setting '" + key + "' expects a non-negative integer, got '" + v + "'");
  return std::stoull(v);
}

}  // namespace

RunConfig resolve(const json* file, const EnvLookup& env, const std::map<std::string, std::string>& flags) {
  std::map<std::string, std::string> values = {
      {"model", "gpt-4o"},      {"cache_mode", "replay"},  {"api_base", "https://api.openai.com/v1"},
      {"max_retries", "3"},     {"temperature", "0"},      {"min_interval_ms", "0"},
      {"taxonomy", PPA_DEFAULT_TAXONOMY},                 {"threshold", "0.9"},
      {"denominator", "max"},   {"aggregation", "segment"}, {"out", "out"},
      {"jobs", "1"},            {"seed", "0"},
  };
  const auto& known = env_names();
  if (file) {
    if (!file->is_object()) throw ConfigError("config file must hold a JSON object");
    for (const auto& [k, v] : file->items()) {
      const auto lk = text::to_lower_ascii(k);
      if (lk.find("key") != std::string::npos || lk.find("token") != std::string::npos ||
          lk.find("secret") != std::string::npos || lk.find("password") != std::string::npos)
        throw ConfigError("config file must not contain credentials ('" + k +
                          "'); set the API key in the PPA_API_KEY environment variable");
      if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
      values[k] = scalar(v);
    }
  }
  for (const auto& [k, name] : known)
    if (auto v = env(name)) values[k] = *v;
  for (const auto& [k, v] : flags) {
    if (!known.count(k)) throw ConfigError("unknown setting '" + k + "'");
    values[k] = v;
  }

  RunConfig c;
  c.backend.model_name = values["model"];
  auto mode = backend::parse_cache_mode(values["cache_mode"]);
  if (!mode) throw ConfigError("cache_mode must be live, record or replay, got '" + values["cache_mode"] + "'");
  c.backend.cache_mode = *mode;
  if (values.count("cache")) c.backend.cache_path = values["cache"];
  c.backend.api_base = values["api_base"];
  c.backend.max_retries = static_cast<int>(to_uint("max_retries", values["max_retries"]));
  c.backend.temperature = to_double("temperature", values["temperature"]);
  c.backend.min_interval = std::chrono::milliseconds(to_uint("min_interval_ms", values["min_interval_ms"]));
  c.taxonomy_path = values["taxonomy"];
  c.match.threshold = to_double("threshold", values["threshold"]);
  if (!(c.match.threshold > 0.0 && c.match.threshold <= 1.0))
    throw ConfigError("threshold must lie in (0, 1], got " + values["threshold"]);
  auto den = eval::parse_denominator(values["denominator"]);
  if (!den) throw ConfigError("denominator must be max, gold or mean");
  c.match.denominator = *den;
  const auto agg = text::to_lower_ascii(values["aggregation"]);
  if (agg == "segment") c.aggregation = eval::Aggregation::Segment;
  else if (agg == "document") c.aggregation = eval::Aggregation::Document;
  else throw ConfigError("aggregation must be segment or document");
  if (values.count("profile")) c.profile_path = values["profile"];
  if (values.count("gold_schema")) c.gold_schema_path = values["gold_schema"];
  c.out_dir = values["out"];
  c.jobs = static_cast<std::size_t>(to_uint("jobs", values["jobs"]));
  if (c.jobs == 0) throw ConfigError("jobs must be at least 1");
  c.seed = to_uint("seed", values["seed"]);
  return c;
}

json RunConfig::to_json() const {
  return json{{"model", backend.model_name},
              {"cache_mode", backend::to_string(backend.cache_mode)},
              {"cache", backend.cache_path.string()},
              {"api_base", backend.api_base},
              {"api_key_env", backend.api_key_env},
              {"max_retries", backend.max_retries},
              {"temperature", backend.temperature},
              {"min_interval_ms", backend.min_interval.count()},
              {"taxonomy", taxonomy_path.string()},
              {"threshold", match.threshold},
              {"denominator", eval::to_string(match.denominator)},
              {"aggregation", aggregation == eval::Aggregation::Segment ? "segment" : "document"},
              {"profile", profile_path.string()},
              {"gold_schema", gold_schema_path.string()},
              {"out", out_dir.string()},
              {"jobs", jobs},
              {"seed", seed}};
}

json load_file(const std::filesystem::path& path) {
  try {
    return json::parse(corpus::read_text_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
}

}  // namespace ppa::config
