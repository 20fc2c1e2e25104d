#pragma once

// Model invocation with a record/replay cache.
//
// Cache file format (JSON Lines, one record per line, append-only):
//   {"key": <hex sha256>, "model": ..., "task": ..., "prompt": {"system": ..., "user": ...},
//    "response": <raw text>, "timestamp": <ISO-8601 UTC>}
// key = sha256(model + "\x1f" + task + "\x1f" + system + "\x1f" + user).
// When a key occurs more than once the last record wins.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ppa/prompt.hpp"
#include "ppa/repair.hpp"
#include "ppa/types.hpp"

namespace ppa::backend {

enum class CacheMode { Live, Record, Replay };

std::string_view to_string(CacheMode m);
std::optional<CacheMode> parse_cache_mode(std::string_view s);

struct BackoffPolicy {
  std::chrono::milliseconds initial{500};
  double factor = 2.0;
  std::chrono::milliseconds max{8000};
};

struct BackendConfig {
  std::string model_name = "gpt-4o";
  double temperature = 0.0;
  int max_retries = 3;
  CacheMode cache_mode = CacheMode::Replay;
  std::filesystem::path cache_path;
  std::string api_base = "https://api.openai.com/v1";
  // Name of the environment variable holding the API key.
  std::string api_key_env = "PPA_API_KEY";
  BackoffPolicy backoff;
  // Minimum spacing between live invocations, shared by all workers.
  std::chrono::milliseconds min_interval{0};
  std::chrono::seconds timeout{120};
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, bool retryable, int status = 0)
      : std::runtime_error(what), retryable_(retryable), status_(status) {}
  bool retryable() const { return retryable_; }
  int status() const { return status_; }

 private:
  bool retryable_;
  int status_;
};

class ReplayMissError : public std::runtime_error {
 public:
  explicit ReplayMissError(std::string digest)
      : std::runtime_error("replay cache has no entry for prompt digest " + digest), digest_(std::move(digest)) {}
  const std::string& digest() const { return digest_; }

 private:
  std::string digest_;
};

struct ChatRequest {
  std::string model;
  double temperature = 0.0;
  TaskKind task = TaskKind::DataRecognition;
  prompt::PromptMessages messages;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  // Returns the assistant message content. Throws TransportError.
  virtual std::string complete(const ChatRequest& request) = 0;
};

// OpenAI-compatible chat completions endpoint over HTTPS.
class OpenAiClient : public ChatClient {
 public:
  OpenAiClient(std::string api_base, std::string api_key, std::chrono::seconds timeout);
  std::string complete(const ChatRequest& request) override;

 private:
  std::string scheme_host_;
  std::string path_prefix_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

// Answers from a table keyed by (task, user message). Used for tests and for
// producing fixture caches without network access.
class ScriptedClient : public ChatClient {
 public:
  using Handler = std::function<std::string(const ChatRequest&)>;

  void set(TaskKind task, const std::string& user, std::string response);
  // Consulted when no table entry matches; without one a miss throws.
  void set_fallback(Handler h) { fallback_ = std::move(h); }
  // Makes the next n calls fail with a retryable transport error.
  void fail_next(int n) { fail_next_ = n; }

  std::string complete(const ChatRequest& request) override;
  std::size_t calls() const { return calls_.load(); }
  std::vector<ChatRequest> log() const;

 private:
  mutable std::mutex mu_;
  std::map<std::pair<TaskKind, std::string>, std::string> table_;
  Handler fallback_;
  std::atomic<int> fail_next_{0};
  std::atomic<std::size_t> calls_{0};
  std::vector<ChatRequest> log_;
};

// Reads the key from the configured environment variable.
std::unique_ptr<ChatClient> make_live_client(const BackendConfig& config);

struct CacheRecord {
  std::string key;
  std::string model;
  std::string task;
  std::string system;
  std::string user;
  std::string response;
  std::string timestamp;

  nlohmann::json to_json() const;
  static CacheRecord from_json(const nlohmann::json& j);
};

std::string cache_key(std::string_view model, std::string_view task, std::string_view system, std::string_view user);

class CacheError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thread-safe; appends are flushed immediately.
class CacheStore {
 public:
  CacheStore() = default;  // in-memory only
  explicit CacheStore(std::filesystem::path path);

  std::optional<CacheRecord> find(const std::string& key) const;
  void append(CacheRecord record);
  std::size_t size() const;
  std::vector<CacheRecord> records() const;  // unique keys, sorted by key
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<std::string, CacheRecord> records_;
};

struct CallResult {
  std::string raw;
  std::string key;
  bool from_cache = false;
  int attempts = 0;  // live attempts (0 for cache hits)
};

class Backend {
 public:
  // client may be null in replay mode.
  Backend(BackendConfig config, std::shared_ptr<ChatClient> client, std::shared_ptr<CacheStore> cache);

  // Exactly one model invocation, plus transport retries, or one cache read.
  CallResult complete(TaskKind task, const prompt::PromptMessages& messages);

  const BackendConfig& config() const { return config_; }
  std::size_t invocations() const { return invocations_.load(); }
  // Replaces the sleep used for backoff and rate limiting (tests).
  void set_sleeper(std::function<void(std::chrono::milliseconds)> s) { sleep_ = std::move(s); }

 private:
  std::string invoke_with_retries(const ChatRequest& request, int& attempts);
  void throttle();

  BackendConfig config_;
  std::shared_ptr<ChatClient> client_;
  std::shared_ptr<CacheStore> cache_;
  std::atomic<std::size_t> invocations_{0};
  std::mutex rate_mu_;
  std::chrono::steady_clock::time_point last_call_{};
  std::function<void(std::chrono::milliseconds)> sleep_;
};

// Builds a backend from configuration. Live and record modes need the key in
// the environment and fail with ConfigError otherwise.
std::unique_ptr<Backend> make_backend(const BackendConfig& config);

struct TaskOutput {
  CallResult call;
  nlohmann::json parsed;  // array as produced by repair_and_parse
  std::vector<std::string> repairs;
};

// Builds the prompt, runs one invocation and parses the response. Throws
// repair::OutputParseError (carrying the raw text) on irrecoverable output.
TaskOutput run_task(TaskKind task, std::string_view segment, const std::vector<prompt::PromptEntity>& extras,
                    Backend& backend, const prompt::PromptOptions& options = {},
                    const repair::RefusalTable& refusals = repair::RefusalTable());

std::string utc_timestamp();

}  // namespace ppa::backend
