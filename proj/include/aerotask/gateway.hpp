#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "aerotask/pipeline.hpp"

/// Interactive sessions over the task pipeline, with an ordered event log per
/// session. Transport-agnostic; the HTTP layer lives in aerotask/net.
namespace aerotask::gateway {

enum class Role { user, planner, executor, system };
std::string_view to_string(Role r);

enum class EventKind {
  system_prompt,
  utterance,
  label,
  plan,
  segment,
  telemetry,
  report,
  abort,
  cleared,
  closed,
  error,
};
std::string_view to_string(EventKind k);

struct ChatEvent {
  std::uint64_t seq = 0;  // 0-based position in the full transcript
  double t = 0.0;         // seconds since the session opened, non-decreasing
  Role role = Role::system;
  EventKind kind = EventKind::system_prompt;
  nlohmann::json payload;
};
nlohmann::json to_json(const ChatEvent& e);
ChatEvent event_from_json(const nlohmann::json& j);

enum class SessionState { idle, planning, executing, aborted, closed };
std::string_view to_string(SessionState s);

struct SessionInfo {
  std::string id;
  std::string world;
  PromptStyle style = PromptStyle::cp;
  std::string backend;
  SessionState state = SessionState::idle;
  std::uint64_t visible_from = 0;  // first event after the latest "!clear"
  std::uint64_t events = 0;
};
nlohmann::json to_json(const SessionInfo& s);

using BackendFactory = std::function<std::unique_ptr<Backend>()>;

struct GatewayConfig {
  PipelineConfig pipeline;
  /// One JSON line per event in <dir>/<session>.jsonl; empty disables.
  std::filesystem::path transcript_dir;
  /// Every n-th telemetry sample is published; the last one of a segment always is.
  std::size_t telemetry_stride = 5;
  /// Wraps the simulator sink of every run (latency or fault injection).
  std::function<std::unique_ptr<CommandSink>(SimSession&)> sink_factory;
};

class Gateway {
 public:
  /// Registers the reference backend as "reference".
  Gateway(const Workspace& ws, GatewayConfig cfg);
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  void register_backend(const std::string& id, BackendFactory factory);
  std::vector<std::string> backends() const;
  const Workspace& workspace() const { return ws_; }

  /// Throws UnknownWorld, UnknownBackend.
  SessionInfo open_session(const std::string& world, PromptStyle style, const std::string& backend);
  /// Control tokens "!quit", "!exit" and "!clear" act at once; anything else
  /// starts a pipeline run. Returns the sequence number of the utterance event.
  /// Throws UnknownSession, SessionClosed, SessionBusy.
  std::uint64_t submit_utterance(const std::string& session, const std::string& text);
  /// Throws UnknownSession, NotExecuting.
  void abort(const std::string& session);
  /// Same as "!quit"; waits for a running pipeline to stop.
  void close_session(const std::string& session);

  SessionInfo info(const std::string& session) const;
  std::vector<SessionInfo> sessions() const;
  /// Events with seq >= `since`; `visible_only` skips what "!clear" hid.
  std::vector<ChatEvent> events(const std::string& session, std::uint64_t since = 0,
                                bool visible_only = false) const;
  /// Blocks until an event with seq >= `since` exists, the session closes or the
  /// timeout passes.
  std::vector<ChatEvent> wait_events(const std::string& session, std::uint64_t since,
                                     std::chrono::milliseconds timeout) const;
  /// Blocks until no pipeline run is active. False on timeout.
  bool wait_idle(const std::string& session, std::chrono::milliseconds timeout) const;

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id) const;
  void append(Session& s, Role role, EventKind kind, nlohmann::json payload);
  void run(std::shared_ptr<Session> s, std::string text, std::stop_token stop);

  const Workspace& ws_;
  GatewayConfig cfg_;
  mutable std::mutex mutex_;
  std::map<std::string, BackendFactory> backends_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
};

/// Reads a transcript file back into events.
std::vector<ChatEvent> load_transcript(const std::filesystem::path& path);

}  // namespace aerotask::gateway
