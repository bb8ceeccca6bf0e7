#include "aerotask/net/server.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "aerotask/error.hpp"

namespace aerotask::net {

namespace {

using nlohmann::json;
using namespace std::chrono_literals;

int status_of(Errc code) {
  switch (code) {
    case Errc::UnknownSession: return 404;
    case Errc::SessionBusy:
    case Errc::SessionClosed:
    case Errc::NotExecuting: return 409;
    default: return 400;
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  send_json(res, status_of(e.code()), {{"error", to_string(e.code())}, {"detail", e.what()}});
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    auto j = json::parse(req.body);
    if (!j.is_object()) throw Error(Errc::MalformedDocument, "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedDocument, std::string("request body: ") + e.what());
  }
}

std::string field(const json& j, const char* key, const std::string& fallback = {}) {
  if (!j.contains(key)) {
    if (fallback.empty()) throw Error(Errc::MalformedDocument, std::string("missing '") + key + "'");
    return fallback;
  }
  if (!j[key].is_string()) throw Error(Errc::MalformedDocument, std::string("'") + key + "' must be a string");
  return j[key].get<std::string>();
}

std::uint64_t since_of(const httplib::Request& req) {
  std::string v;
  if (req.has_param("since")) v = req.get_param_value("since");
  else if (req.has_header("Last-Event-ID")) v = std::to_string(std::stoull(req.get_header_value("Last-Event-ID")) + 1);
  if (v.empty()) return 0;
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw Error(Errc::BadParameter, "since must be a sequence number");
  }
}

json events_json(const std::vector<gateway::ChatEvent>& ev) {
  json out = json::array();
  for (const auto& e : ev) out.push_back(gateway::to_json(e));
  return out;
}

std::string sse_frame(const gateway::ChatEvent& e) {
  return "id: " + std::to_string(e.seq) + "\nevent: " + std::string(gateway::to_string(e.kind)) +
         "\ndata: " + gateway::to_json(e).dump() + "\n\n";
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, e);
    }
  };
}

}  // namespace

struct Server::Impl {
  gateway::Gateway& gw;
  httplib::Server http;
  std::thread thread;

  explicit Impl(gateway::Gateway& g) : gw(g) { routes(); }

  void routes() {
    http.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"ok", true}});
    });
    http.Get("/worlds", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, gw.workspace().world_ids());
    });
    http.Get("/backends", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, gw.backends());
    });
    http.Get("/sessions", [this](const httplib::Request&, httplib::Response& res) {
      json out = json::array();
      for (const auto& s : gw.sessions()) out.push_back(gateway::to_json(s));
      send_json(res, 200, out);
    });
    http.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto b = body_of(req);
      const auto style = parse_prompt_style(field(b, "style", "cp"));
      if (!style) throw Error(Errc::BadParameter, "unknown prompt style");
      const auto info = gw.open_session(field(b, "world"), *style, field(b, "backend", "reference"));
      send_json(res, 201, gateway::to_json(info));
    }));
    http.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, 200, gateway::to_json(gw.info(req.matches[1])));
    }));
    http.Delete(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      gw.close_session(req.matches[1]);
      send_json(res, 200, gateway::to_json(gw.info(req.matches[1])));
    }));
    http.Post(R"(/sessions/([^/]+)/utterances)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                const auto seq = gw.submit_utterance(req.matches[1], field(body_of(req), "text"));
                send_json(res, 202, {{"seq", seq}});
              }));
    http.Post(R"(/sessions/([^/]+)/abort)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                gw.abort(req.matches[1]);
                send_json(res, 202, {{"aborting", true}});
              }));
    http.Get(R"(/sessions/([^/]+)/events)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               const bool visible = req.has_param("visible") && req.get_param_value("visible") != "0";
               send_json(res, 200, events_json(gw.events(req.matches[1], since_of(req), visible)));
             }));
    http.Get(R"(/sessions/([^/]+)/stream)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               const std::string id = req.matches[1];
               gw.info(id);  // UnknownSession before the stream starts
               auto next = std::make_shared<std::uint64_t>(since_of(req));
               res.set_header("Cache-Control", "no-cache");
               res.set_chunked_content_provider(
                   "text/event-stream", [this, id, next](std::size_t, httplib::DataSink& sink) {
                     std::vector<gateway::ChatEvent> ev;
                     try {
                       ev = gw.wait_events(id, *next, 1s);
                     } catch (const Error&) {
                       sink.done();
                       return true;
                     }
                     if (ev.empty()) {
                       if (gw.info(id).state == gateway::SessionState::closed) {
                         sink.done();
                         return true;
                       }
                       const std::string ping = ": keepalive\n\n";
                       return sink.write(ping.data(), ping.size());
                     }
                     for (const auto& e : ev) {
                       const auto frame = sse_frame(e);
                       if (!sink.write(frame.data(), frame.size())) return false;
                       *next = e.seq + 1;
                     }
                     return true;
                   });
             }));
  }
};

Server::Server(gateway::Gateway& gw) : impl_(std::make_unique<Impl>(gw)) {}

Server::~Server() { stop(); }

std::uint16_t Server::start(const std::string& host, std::uint16_t port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->http.bind_to_any_port(host);
  } else if (!impl_->http.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) throw Error(Errc::SinkUnavailable, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
  impl_->http.wait_until_ready();
  return static_cast<std::uint16_t>(bound);
}

void Server::listen(const std::string& host, std::uint16_t port) {
  if (!impl_->http.listen(host, port)) {
    throw Error(Errc::SinkUnavailable, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void Server::stop() {
  if (!impl_) return;
  impl_->http.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

ServerConfig load_server_config(const std::filesystem::path& path, ServerConfig cfg) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MalformedDocument, "cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
    if (!j.is_object()) throw Error(Errc::MalformedDocument, "server config must be an object");
    if (j.contains("host")) cfg.host = j["host"].get<std::string>();
    if (j.contains("port")) cfg.port = j["port"].get<std::uint16_t>();
    if (j.contains("data_dir")) cfg.data_dir = j["data_dir"].get<std::string>();
    if (j.contains("transcript_dir")) cfg.transcript_dir = j["transcript_dir"].get<std::string>();
    if (j.contains("pipeline_config")) cfg.pipeline_config = j["pipeline_config"].get<std::string>();
    if (j.contains("telemetry_stride")) cfg.telemetry_stride = j["telemetry_stride"].get<std::size_t>();
    if (j.contains("remote")) {
      const auto& r = j["remote"];
      RemoteConfig rc = cfg.remote.value_or(RemoteConfig{});
      if (r.contains("base_url")) rc.base_url = r["base_url"].get<std::string>();
      if (r.contains("model")) rc.model = r["model"].get<std::string>();
      if (r.contains("api_key")) rc.api_key = r["api_key"].get<std::string>();
      if (r.contains("timeout")) rc.timeout = std::chrono::seconds(r["timeout"].get<int>());
      cfg.remote = rc;
    }
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedDocument, "server config: " + std::string(e.what()));
  }
  return cfg;
}

ServerConfig apply_env_overrides(ServerConfig cfg) {
  auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
  if (auto v = env("AEROTASK_HOST")) cfg.host = *v;
  if (auto v = env("AEROTASK_PORT")) {
    try {
      const int p = std::stoi(*v);
      if (p < 0 || p > 65535) throw std::out_of_range("port");
      cfg.port = static_cast<std::uint16_t>(p);
    } catch (const std::exception&) {
      throw Error(Errc::BadParameter, "AEROTASK_PORT must be a port number");
    }
  }
  if (auto v = env("AEROTASK_DATA_DIR")) cfg.data_dir = *v;
  if (auto v = env("AEROTASK_TRANSCRIPTS")) cfg.transcript_dir = *v;
  if (env("AEROTASK_REMOTE_URL") || cfg.remote) {
    cfg.remote = RemoteConfig::from_env(cfg.remote.value_or(RemoteConfig{}));
  }
  return cfg;
}

namespace {
volatile std::sig_atomic_t g_stop = 0;
}

int run_server(const ServerConfig& cfg) {
  const auto ws = Workspace::load(cfg.data_dir);
  gateway::GatewayConfig gcfg;
  gcfg.pipeline = ws.default_config();
  if (!cfg.pipeline_config.empty()) {
    gcfg.pipeline = load_pipeline_config(cfg.pipeline_config, gcfg.pipeline);
  }
  gcfg.transcript_dir = cfg.transcript_dir;
  gcfg.telemetry_stride = cfg.telemetry_stride;
  gateway::Gateway gw(ws, gcfg);
  if (cfg.remote) {
    const auto rc = *cfg.remote;
    RemoteBackend probe(rc);  // rejects a malformed url up front
    gw.register_backend("remote", [rc] { return std::make_unique<RemoteBackend>(rc); });
  }
  Server server(gw);
  g_stop = 0;
  std::signal(SIGINT, [](int) { g_stop = 1; });
  std::signal(SIGTERM, [](int) { g_stop = 1; });
  const auto port = server.start(cfg.host, cfg.port);
  std::cerr << "gateway on http://" << cfg.host << ":" << port << std::endl;
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return 0;
}

}  // namespace aerotask::net
