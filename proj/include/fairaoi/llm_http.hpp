#pragma once

#include <cstdlib>
#include <optional>
#include <string>

#include <httplib.h>

#include "fairaoi/common.hpp"
#include "fairaoi/moead.hpp"

namespace fairaoi {

struct HttpCompletionSettings {
  std::string endpoint;  // full URL, e.g. http://127.0.0.1:8089/complete
  std::string model;     // sent as X-Model when non-empty
  std::string token;     // sent as Authorization: Bearer ... when non-empty
  double timeout_s = 10.0;

  // Environment overrides for fields left empty.
  static HttpCompletionSettings from_env(HttpCompletionSettings s) {
    auto pick = [](const char* name) -> std::string {
      const char* v = std::getenv(name);
      return v != nullptr ? std::string(v) : std::string();
    };
    if (s.endpoint.empty()) s.endpoint = pick("FAIRAOI_LLM_ENDPOINT");
    if (s.model.empty()) s.model = pick("FAIRAOI_LLM_MODEL");
    if (s.token.empty()) s.token = pick("FAIRAOI_LLM_TOKEN");
    return s;
  }
  static HttpCompletionSettings from_env() { return from_env(HttpCompletionSettings()); }
};

// One plain-text POST per offspring request; any transport or status
// problem is reported as nullopt so the caller can fall back.
class HttpCompletionClient : public CompletionClient {
 public:
  explicit HttpCompletionClient(HttpCompletionSettings settings) : settings_(std::move(settings)) {
    if (settings_.endpoint.empty())
      throw config_error("completion client: endpoint is empty");
    std::size_t scheme = settings_.endpoint.find("://");
    std::size_t path_start =
        settings_.endpoint.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) {
      base_ = settings_.endpoint;
      path_ = "/";
    } else {
      base_ = settings_.endpoint.substr(0, path_start);
      path_ = settings_.endpoint.substr(path_start);
    }
  }

  std::optional<std::string> complete(const std::string& prompt) override {
    httplib::Client cli(base_);
    auto secs = static_cast<time_t>(settings_.timeout_s);
    auto usecs = static_cast<time_t>((settings_.timeout_s - static_cast<double>(secs)) * 1e6);
    cli.set_connection_timeout(secs, usecs);
    cli.set_read_timeout(secs, usecs);
    cli.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!settings_.token.empty()) headers.emplace("Authorization", "Bearer " + settings_.token);
    if (!settings_.model.empty()) headers.emplace("X-Model", settings_.model);
    httplib::Result res = cli.Post(path_, headers, prompt, "text/plain");
    if (!res || res->status < 200 || res->status >= 300) return std::nullopt;
    return res->body;
  }

 private:
  HttpCompletionSettings settings_;
  std::string base_;
  std::string path_;
};

}  // namespace fairaoi
