#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "aerotask/gateway.hpp"
#include "aerotask/net/remote_backend.hpp"

namespace aerotask::net {

struct ServerConfig {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8080;  // 0 picks a free port
  std::filesystem::path data_dir = AEROTASK_DATA_DIR;
  std::filesystem::path transcript_dir = "transcripts";
  std::filesystem::path pipeline_config;  // optional JSON pipeline overrides
  std::size_t telemetry_stride = 5;
  std::optional<RemoteConfig> remote;     // registers the "remote" backend
};

/// Keys: host, port, data_dir, transcript_dir, pipeline_config,
/// telemetry_stride and a "remote" object (base_url, model, api_key, timeout).
ServerConfig load_server_config(const std::filesystem::path& path, ServerConfig base = {});
/// AEROTASK_HOST, AEROTASK_PORT, AEROTASK_DATA_DIR, AEROTASK_TRANSCRIPTS; a set
/// AEROTASK_REMOTE_URL enables the remote backend.
ServerConfig apply_env_overrides(ServerConfig cfg);

/// HTTP front end of a gateway: JSON endpoints plus a server-sent event stream
/// per session (docs/gateway_schema.md).
class Server {
 public:
  explicit Server(gateway::Gateway& gw);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and serves on a background thread; returns the bound port.
  std::uint16_t start(const std::string& host, std::uint16_t port);
  /// Serves on the calling thread until stop().
  void listen(const std::string& host, std::uint16_t port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Loads the workspace, builds the gateway and serves until interrupted.
int run_server(const ServerConfig& cfg);

}  // namespace aerotask::net
