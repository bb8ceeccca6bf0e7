#pragma once

#include <chrono>
#include <string>

#include "aerotask/planning.hpp"

namespace aerotask::net {

/// An OpenAI-compatible chat completions endpoint.
struct RemoteConfig {
  std::string base_url = "http://127.0.0.1:11434/v1";  // scheme://host[:port][/path]
  std::string model = "llama3";
  std::string api_key;  // sent as a bearer token when set
  std::chrono::seconds timeout{60};

  /// AEROTASK_REMOTE_URL, AEROTASK_REMOTE_MODEL, AEROTASK_REMOTE_KEY (falls
  /// back to OPENAI_API_KEY), AEROTASK_REMOTE_TIMEOUT seconds.
  static RemoteConfig from_env(RemoteConfig base);
  static RemoteConfig from_env();
};

/// Sends each prompt as a single user message at the configured temperature.
/// Transport failures and non-2xx answers throw BackendUnavailable.
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteConfig cfg);
  std::string id() const override { return "remote:" + cfg_.model; }
  std::string complete(const std::string& prompt) override;

  /// Request body for a prompt; exposed for tests.
  std::string request_body(const std::string& prompt) const;
  /// Assistant text from a response body; throws BackendUnavailable.
  static std::string parse_response(const std::string& body);

 private:
  RemoteConfig cfg_;
  std::string origin_;  // scheme://host:port
  std::string path_;    // prefix before /chat/completions
};

}  // namespace aerotask::net
