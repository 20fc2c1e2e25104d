// The HTTP client lives in its own translation unit; httplib is a large header.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "ppa/backend.hpp"

namespace ppa::backend {

using nlohmann::json;

OpenAiClient::OpenAiClient(std::string api_base, std::string api_key, std::chrono::seconds timeout)
    : api_key_(std::move(api_key)), timeout_(timeout) {
  while (!api_base.empty() && api_base.back() == '/') api_base.pop_back();
  const auto scheme_end = api_base.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("api base must be an absolute URL: " + api_base);
  const auto path_start = api_base.find('/', scheme_end + 3);
  scheme_host_ = api_base.substr(0, path_start);
  path_prefix_ = path_start == std::string::npos ? "" : api_base.substr(path_start);
}

std::string OpenAiClient::complete(const ChatRequest& request) {
  httplib::Client cli(scheme_host_);
  cli.set_connection_timeout(timeout_);
  cli.set_read_timeout(timeout_);
  cli.set_write_timeout(timeout_);
  cli.set_bearer_token_auth(api_key_);

  const json body{{"model", request.model},
                  {"temperature", request.temperature},
                  {"messages",
                   json::array({{{"role", "system"}, {"content", request.messages.system}},
                                {{"role", "user"}, {"content", request.messages.user}}})}};
  auto res = cli.Post(path_prefix_ + "/chat/completions", body.dump(), "application/json");
  if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()), true);
  if (res->status == 429 || res->status >= 500)
    throw TransportError("server returned HTTP " + std::to_string(res->status), true, res->status);
  if (res->status != 200)
    throw TransportError("server returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500), false,
                         res->status);
  try {
    const auto j = json::parse(res->body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    return content.is_string() ? content.get<std::string>() : std::string();
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed completion payload: ") + e.what(), false, res->status);
  }
}

}  // namespace ppa::backend
