#include "ppa/backend.hpp"

#include <cstdlib>
#include <ctime>
#include <fstream>
#include <thread>

#include "ppa/digest.hpp"
#include "ppa/text.hpp"

namespace ppa::backend {

using nlohmann::json;

std::string_view to_string(CacheMode m) {
  switch (m) {
    case CacheMode::Live: return "live";
    case CacheMode::Record: return "record";
    case CacheMode::Replay: return "replay";
  }
  return "?";
}

std::optional<CacheMode> parse_cache_mode(std::string_view s) {
  const auto l = text::to_lower_ascii(text::trim(s));
  if (l == "live") return CacheMode::Live;
  if (l == "record") return CacheMode::Record;
  if (l == "replay") return CacheMode::Replay;
  return std::nullopt;
}

void ScriptedClient::set(TaskKind task, const std::string& user, std::string response) {
  std::lock_guard lock(mu_);
  table_[{task, user}] = std::move(response);
}

std::string ScriptedClient::complete(const ChatRequest& request) {
  ++calls_;
  {
    std::lock_guard lock(mu_);
    log_.push_back(request);
  }
  if (fail_next_.load() > 0) {
    --fail_next_;
    throw TransportError("scripted transport failure", true, 503);
  }
  {
    std::lock_guard lock(mu_);
    auto it = table_.find({request.task, request.messages.user});
    if (it != table_.end()) return it->second;
  }
  if (fallback_) return fallback_(request);
  throw TransportError("scripted client has no answer for " + std::string(task_name(request.task)), false);
}

std::vector<ChatRequest> ScriptedClient::log() const {
  std::lock_guard lock(mu_);
  return log_;
}

std::unique_ptr<ChatClient> make_live_client(const BackendConfig& config) {
  const char* key = std::getenv(config.api_key_env.c_str());
  if (key == nullptr || *key == '\0')
    throw ConfigError("environment variable " + config.api_key_env + " is not set; it is required in " +
                      std::string(to_string(config.cache_mode)) + " mode");
  return std::make_unique<OpenAiClient>(config.api_base, key, config.timeout);
}

json CacheRecord::to_json() const {
  return json{{"key", key},
              {"model", model},
              {"task", task},
              {"prompt", {{"system", system}, {"user", user}}},
              {"response", response},
              {"timestamp", timestamp}};
}

CacheRecord CacheRecord::from_json(const json& j) {
  CacheRecord r;
  r.key = j.at("key").get<std::string>();
  r.model = j.value("model", "");
  r.task = j.value("task", "");
  if (j.contains("prompt")) {
    r.system = j["prompt"].value("system", "");
    r.user = j["prompt"].value("user", "");
  }
  r.response = j.at("response").get<std::string>();
  r.timestamp = j.value("timestamp", "");
  return r;
}

std::string cache_key(std::string_view model, std::string_view task, std::string_view system, std::string_view user) {
  std::string material;
  material.reserve(model.size() + task.size() + system.size() + user.size() + 3);
  material.append(model).append("\x1f").append(task).append("\x1f").append(system).append("\x1f").append(user);
  return sha256_hex(material);
}

CacheStore::CacheStore(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_, std::ios::binary);
  if (!in) return;  // created on first append
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto r = CacheRecord::from_json(json::parse(line));
      records_[r.key] = std::move(r);
    } catch (const json::exception& e) {
      throw CacheError("cache " + path_.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::optional<CacheRecord> CacheStore::find(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = records_.find(key);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

void CacheStore::append(CacheRecord record) {
  std::lock_guard lock(mu_);
  if (!path_.empty()) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) throw CacheError("cannot append to cache " + path_.string());
    out << record.to_json().dump() << '\n';
    out.flush();
  }
  records_[record.key] = std::move(record);
}

std::size_t CacheStore::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

std::vector<CacheRecord> CacheStore::records() const {
  std::lock_guard lock(mu_);
  std::vector<CacheRecord> out;
  out.reserve(records_.size());
  for (const auto& [k, r] : records_) out.push_back(r);
  return out;
}

Backend::Backend(BackendConfig config, std::shared_ptr<ChatClient> client, std::shared_ptr<CacheStore> cache)
    : config_(std::move(config)),
      client_(std::move(client)),
      cache_(std::move(cache)),
      sleep_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  if (!cache_) cache_ = std::make_shared<CacheStore>();
  if (config_.cache_mode != CacheMode::Replay && !client_)
    throw ConfigError(std::string(to_string(config_.cache_mode)) + " mode needs a model client");
}

void Backend::throttle() {
  if (config_.min_interval.count() <= 0) return;
  std::lock_guard lock(rate_mu_);
  const auto now = std::chrono::steady_clock::now();
  const auto next = last_call_ + config_.min_interval;
  if (last_call_.time_since_epoch().count() != 0 && now < next)
    sleep_(std::chrono::duration_cast<std::chrono::milliseconds>(next - now));
  last_call_ = std::chrono::steady_clock::now();
}

std::string Backend::invoke_with_retries(const ChatRequest& request, int& attempts) {
  auto delay = config_.backoff.initial;
  for (int attempt = 0;; ++attempt) {
    throttle();
    ++attempts;
    try {
      return client_->complete(request);
    } catch (const TransportError& e) {
      if (!e.retryable() || attempt >= config_.max_retries) throw;
    }
    sleep_(delay);
    delay = std::min(config_.backoff.max,
                     std::chrono::milliseconds(static_cast<long long>(static_cast<double>(delay.count()) *
                                                                      config_.backoff.factor)));
  }
}

CallResult Backend::complete(TaskKind task, const prompt::PromptMessages& messages) {
  CallResult out;
  const std::string task_str(task_name(task));
  out.key = cache_key(config_.model_name, task_str, messages.system, messages.user);
  if (config_.cache_mode == CacheMode::Replay) {
    auto hit = cache_->find(out.key);
    if (!hit) throw ReplayMissError(out.key);
    out.raw = hit->response;
    out.from_cache = true;
    return out;
  }
  ChatRequest req{config_.model_name, config_.temperature, task, messages};
  ++invocations_;
  out.raw = invoke_with_retries(req, out.attempts);
  if (config_.cache_mode == CacheMode::Record) {
    cache_->append(CacheRecord{out.key, config_.model_name, task_str, messages.system, messages.user, out.raw,
                               utc_timestamp()});
  }
  return out;
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
  std::shared_ptr<ChatClient> client;
  if (config.cache_mode != CacheMode::Replay) client = make_live_client(config);
  std::shared_ptr<CacheStore> cache;
  if (!config.cache_path.empty()) {
    cache = std::make_shared<CacheStore>(config.cache_path);
  } else if (config.cache_mode != CacheMode::Live) {
    throw ConfigError(std::string(to_string(config.cache_mode)) + " mode needs a cache path");
  }
  return std::make_unique<Backend>(config, std::move(client), std::move(cache));
}

TaskOutput run_task(TaskKind task, std::string_view segment, const std::vector<prompt::PromptEntity>& extras,
                    Backend& backend, const prompt::PromptOptions& options, const repair::RefusalTable& refusals) {
  const auto messages = prompt::build_prompt(task, segment, extras, options);
  TaskOutput out;
  out.call = backend.complete(task, messages);
  auto r = repair::repair_and_parse(out.call.raw, repair::shape_for(task), refusals);
  out.parsed = std::move(r.value);
  out.repairs = std::move(r.repairs);
  return out;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace ppa::backend
