#include "aerotask/net/remote_backend.hpp"

#include <cstdlib>
#include <regex>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "aerotask/error.hpp"

namespace aerotask::net {

namespace {

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

}  // namespace

RemoteConfig RemoteConfig::from_env(RemoteConfig base) {
  if (auto v = env("AEROTASK_REMOTE_URL")) base.base_url = *v;
  if (auto v = env("AEROTASK_REMOTE_MODEL")) base.model = *v;
  if (auto v = env("AEROTASK_REMOTE_KEY")) {
    base.api_key = *v;
  } else if (auto k = env("OPENAI_API_KEY")) {
    base.api_key = *k;
  }
  if (auto v = env("AEROTASK_REMOTE_TIMEOUT")) {
    try {
      base.timeout = std::chrono::seconds(std::stoi(*v));
    } catch (const std::exception&) {
      throw Error(Errc::BadParameter, "AEROTASK_REMOTE_TIMEOUT must be whole seconds");
    }
  }
  return base;
}

RemoteConfig RemoteConfig::from_env() { return from_env(RemoteConfig{}); }

RemoteBackend::RemoteBackend(RemoteConfig cfg) : cfg_(std::move(cfg)) {
  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(cfg_.base_url, m, url)) {
    throw Error(Errc::BadParameter, "remote url '" + cfg_.base_url + "'");
  }
  origin_ = m[1];
  path_ = m[2];
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (origin_.rfind("https://", 0) == 0) {
    throw Error(Errc::BackendUnavailable, "built without TLS; use an http:// endpoint");
  }
#endif
}

std::string RemoteBackend::request_body(const std::string& prompt) const {
  nlohmann::json body = {{"model", cfg_.model},
                         {"temperature", temperature()},
                         {"messages", {{{"role", "user"}, {"content", prompt}}}}};
  return body.dump();
}

std::string RemoteBackend::parse_response(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BackendUnavailable, std::string("unexpected response: ") + e.what());
  }
}

std::string RemoteBackend::complete(const std::string& prompt) {
  httplib::Client client(origin_);
  client.set_connection_timeout(cfg_.timeout);
  client.set_read_timeout(cfg_.timeout);
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
  auto res = client.Post(path_ + "/chat/completions", headers, request_body(prompt),
                         "application/json");
  if (!res) {
    throw Error(Errc::BackendUnavailable, origin_ + ": " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw Error(Errc::BackendUnavailable,
                origin_ + " answered " + std::to_string(res->status) + ": " + res->body);
  }
  return parse_response(res->body);
}

}  // namespace aerotask::net
