#include <httplib.h>

#include "ctra/llm/backend.hpp"

#include <nlohmann/json.hpp>

#include <thread>

namespace ctra::llm {

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_endpoint(const std::string& endpoint) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) {
    throw LlmError(LlmError::Kind::transport, "endpoint must start with http:// or https://: " + endpoint);
  }
  const auto slash = endpoint.find('/', scheme + 3);
  Url u;
  u.origin = endpoint.substr(0, slash);
  std::string path = slash == std::string::npos ? "" : endpoint.substr(slash);
  while (!path.empty() && path.back() == '/') path.pop_back();
  const std::string suffix = "/chat/completions";
  if (path.size() < suffix.size() || path.compare(path.size() - suffix.size(), suffix.size(), suffix) != 0) {
    path += suffix;
  }
  u.path = path;
  return u;
}

std::optional<double> retry_after_seconds(const httplib::Response& res) {
  if (!res.has_header("Retry-After")) return std::nullopt;
  try {
    return std::stod(res.get_header_value("Retry-After"));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace

std::string HttpChatBackend::complete(const RoleModelConfig& config, const std::string& prompt) {
  const Url url = split_endpoint(config.endpoint);
  nlohmann::json body = {{"model", config.model_name},
                         {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
                         {"temperature", config.temperature},
                         {"max_tokens", config.max_tokens}};
  const std::string payload = body.dump();

  httplib::Client client(url.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

  for (int attempt = 0;; ++attempt) {
    const bool last = attempt >= options_.retries;
    auto wait = options_.backoff * (1 << attempt);
    auto res = client.Post(url.path, headers, payload, "application/json");
    if (!res) {
      const auto err = res.error();
      const bool timeout = err == httplib::Error::Read || err == httplib::Error::Write ||
                           err == httplib::Error::ConnectionTimeout;
      if (last) {
        throw LlmError(timeout ? LlmError::Kind::timeout : LlmError::Kind::transport,
                       "request to " + url.origin + url.path + " failed: " + httplib::to_string(err));
      }
    } else if (res->status == 429 || res->status >= 500) {
      const auto after = retry_after_seconds(*res);
      if (last) {
        LlmError e(LlmError::Kind::transport, "HTTP " + std::to_string(res->status) + " from " + url.origin +
                                                  url.path +
                                                  (after ? " (retry after " + std::to_string(*after) + " s)" : ""));
        e.http_status = res->status;
        e.retry_after = after;
        throw e;
      }
      if (after) {
        wait = std::min(options_.max_retry_wait,
                        std::chrono::milliseconds(static_cast<long long>(*after * 1000)));
      }
    } else if (res->status != 200) {
      LlmError e(LlmError::Kind::transport, "HTTP " + std::to_string(res->status) + " from " + url.origin + url.path);
      e.http_status = res->status;
      throw e;
    } else {
      try {
        const auto j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const std::exception& ex) {
        throw LlmError(LlmError::Kind::bad_response, std::string("malformed chat completion: ") + ex.what());
      }
    }
    std::this_thread::sleep_for(wait);
  }
}

}  // namespace ctra::llm
