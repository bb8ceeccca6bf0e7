#include "aerotask/gateway.hpp"

#include <algorithm>

#include "aerotask/energy.hpp"
#include "aerotask/error.hpp"

namespace aerotask::gateway {

namespace {

using Clock = std::chrono::steady_clock;

nlohmann::json vec_json(Vec3 v) { return nlohmann::json::array({v.x, v.y, v.z}); }

nlohmann::json sample_json(const TelemetryPoint& p) {
  return {{"t", p.t},
          {"position", vec_json(p.position)},
          {"yaw", p.yaw_deg},
          {"velocity", vec_json(p.velocity)},
          {"motors", p.motors}};
}

nlohmann::json label_json(const Classification& c) {
  return {{"label", to_string(c.label)},
          {"computed", to_string(c.computed)},
          {"instruction", c.instruction},
          {"features", {{"p", c.features.p}, {"d", c.features.d}, {"l", c.features.l}}},
          {"score", {{"state", c.score.state}, {"motion", c.score.motion}, {"total", c.score.total}}},
          {"keywords", c.keywords},
          {"unknown", c.unknown}};
}

nlohmann::json decision_json(const ExecutionDecision& d) {
  nlohmann::json b = nlohmann::json::array();
  for (const auto& x : d.bindings) {
    b.push_back({{"step", x.step}, {"tool", x.tool}, {"args", x.args}});
  }
  return {{"mode", d.mode == ExecutionMode::direct ? "direct" : "tool_assisted"}, {"bindings", b}};
}

nlohmann::json segment_json(const SegmentReport& r) {
  nlohmann::json acks = nlohmann::json::array();
  for (const auto& a : r.acks) acks.push_back({{"index", a.index}, {"ok", a.ok}, {"detail", a.detail}});
  return {{"index", r.index}, {"mlv", to_json(r.mlv)}, {"ok", r.ok}, {"cause", r.cause}, {"acks", acks}};
}

nlohmann::json report_json(const TaskOutcome& o, double dt) {
  nlohmann::json photos = nlohmann::json::array();
  for (const auto& p : o.photos) {
    photos.push_back({{"target", p.target}, {"achieved", p.achieved}, {"t", p.t},
                      {"position", vec_json(p.position)}});
  }
  std::vector<std::string> executed;
  for (const auto& c : o.executed) executed.push_back(render_command(c));
  double energy = 0.0;
  if (!o.trajectory.empty()) energy = energy_report(o.trajectory, dt).energy;
  return {{"success", o.ok()},
          {"aborted", o.report.aborted},
          {"failed_stage", to_string(o.failed_stage)},
          {"failure", o.failure},
          {"segments", o.report.segments.size()},
          {"tools_invoked", o.report.tools_invoked},
          {"photos", photos},
          {"collided", o.collided},
          {"landed", !o.airborne_at_end},
          {"final_position", vec_json(o.final_pose.position)},
          {"flight_time", o.flight_time},
          {"energy", energy},
          {"executed", executed}};
}

}  // namespace

std::string_view to_string(Role r) {
  switch (r) {
    case Role::user: return "user";
    case Role::planner: return "planner";
    case Role::executor: return "executor";
    case Role::system: return "system";
  }
  return "?";
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::system_prompt: return "system_prompt";
    case EventKind::utterance: return "utterance";
    case EventKind::label: return "label";
    case EventKind::plan: return "plan";
    case EventKind::segment: return "segment";
    case EventKind::telemetry: return "telemetry";
    case EventKind::report: return "report";
    case EventKind::abort: return "abort";
    case EventKind::cleared: return "cleared";
    case EventKind::closed: return "closed";
    case EventKind::error: return "error";
  }
  return "?";
}

std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::idle: return "idle";
    case SessionState::planning: return "planning";
    case SessionState::executing: return "executing";
    case SessionState::aborted: return "aborted";
    case SessionState::closed: return "closed";
  }
  return "?";
}

nlohmann::json to_json(const ChatEvent& e) {
  return {{"seq", e.seq},
          {"t", e.t},
          {"role", to_string(e.role)},
          {"kind", to_string(e.kind)},
          {"payload", e.payload}};
}

ChatEvent event_from_json(const nlohmann::json& j) {
  ChatEvent e;
  try {
    e.seq = j.at("seq").get<std::uint64_t>();
    e.t = j.at("t").get<double>();
    const auto role = j.at("role").get<std::string>();
    const auto kind = j.at("kind").get<std::string>();
    const Role roles[] = {Role::user, Role::planner, Role::executor, Role::system};
    const auto r = std::find_if(std::begin(roles), std::end(roles),
                                [&](Role x) { return to_string(x) == role; });
    if (r == std::end(roles)) throw Error(Errc::MalformedDocument, "event role '" + role + "'");
    e.role = *r;
    int k = 0;
    while (k <= static_cast<int>(EventKind::error) && to_string(static_cast<EventKind>(k)) != kind) ++k;
    if (k > static_cast<int>(EventKind::error)) {
      throw Error(Errc::MalformedDocument, "event kind '" + kind + "'");
    }
    e.kind = static_cast<EventKind>(k);
    e.payload = j.at("payload");
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::MalformedDocument, std::string("event: ") + ex.what());
  }
  return e;
}

nlohmann::json to_json(const SessionInfo& s) {
  return {{"id", s.id},
          {"world", s.world},
          {"style", to_string(s.style)},
          {"backend", s.backend},
          {"state", to_string(s.state)},
          {"visible_from", s.visible_from},
          {"events", s.events}};
}

struct Gateway::Session {
  SessionInfo info;
  Clock::time_point opened = Clock::now();
  double last_t = 0.0;
  std::vector<ChatEvent> log;
  std::ofstream transcript;
  std::unique_ptr<Backend> backend;
  FailureMemory memory;
  bool running = false;
  bool abort_requested = false;
  std::jthread worker;
  mutable std::mutex m;
  mutable std::condition_variable cv;
};

Gateway::Gateway(const Workspace& ws, GatewayConfig cfg) : ws_(ws), cfg_(std::move(cfg)) {
  if (cfg_.telemetry_stride == 0) cfg_.telemetry_stride = 1;
  backends_["reference"] = [] { return std::make_unique<ReferenceBackend>(); };
  if (!cfg_.transcript_dir.empty()) std::filesystem::create_directories(cfg_.transcript_dir);
}

Gateway::~Gateway() {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::lock_guard lock(mutex_);
    for (auto& [id, s] : sessions_) all.push_back(s);
  }
  for (auto& s : all) {
    std::jthread w;
    {
      std::lock_guard lock(s->m);
      w = std::move(s->worker);
    }
    // Leaving scope stops and joins the worker outside the session lock.
  }
}

void Gateway::register_backend(const std::string& id, BackendFactory factory) {
  std::lock_guard lock(mutex_);
  backends_[id] = std::move(factory);
}

std::vector<std::string> Gateway::backends() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, f] : backends_) out.push_back(id);
  return out;
}

std::shared_ptr<Gateway::Session> Gateway::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(Errc::UnknownSession, "no session '" + id + "'");
  return it->second;
}

// Caller holds s.m.
void Gateway::append(Session& s, Role role, EventKind kind, nlohmann::json payload) {
  ChatEvent e;
  e.seq = s.log.size();
  e.t = std::max(s.last_t, std::chrono::duration<double>(Clock::now() - s.opened).count());
  s.last_t = e.t;
  e.role = role;
  e.kind = kind;
  e.payload = std::move(payload);
  if (s.transcript) s.transcript << to_json(e).dump() << '\n' << std::flush;
  s.log.push_back(std::move(e));
  s.info.events = s.log.size();
  s.cv.notify_all();
}

SessionInfo Gateway::open_session(const std::string& world, PromptStyle style,
                                  const std::string& backend) {
  if (!ws_.has_world(world)) throw Error(Errc::UnknownWorld, "no world named '" + world + "'");
  BackendFactory factory;
  auto s = std::make_shared<Session>();
  {
    std::lock_guard lock(mutex_);
    auto it = backends_.find(backend);
    if (it == backends_.end()) throw Error(Errc::UnknownBackend, "no backend '" + backend + "'");
    factory = it->second;
    s->info.id = "s" + std::to_string(next_id_++);
  }
  s->backend = factory();
  s->info.world = world;
  s->info.style = style;
  s->info.backend = backend;
  if (!cfg_.transcript_dir.empty()) {
    s->transcript.open(cfg_.transcript_dir / (s->info.id + ".jsonl"), std::ios::app);
  }
  std::string prompt;
  for (const auto& line : describe_objects(ws_.world(world))) prompt += line + "\n";
  {
    std::lock_guard lock(s->m);
    append(*s, Role::system, EventKind::system_prompt,
           {{"world", world},
            {"style", to_string(style)},
            {"backend", s->backend->id()},
            {"system_prompt", prompt}});
  }
  std::lock_guard lock(mutex_);
  sessions_[s->info.id] = s;
  return s->info;
}

std::uint64_t Gateway::submit_utterance(const std::string& id, const std::string& text) {
  auto s = find(id);
  std::jthread previous;
  std::uint64_t seq = 0;
  {
    std::lock_guard lock(s->m);
    if (s->info.state == SessionState::closed) throw Error(Errc::SessionClosed, id);
    if (s->running) throw Error(Errc::SessionBusy, id + " is " + std::string(to_string(s->info.state)));
    seq = s->log.size();
    append(*s, Role::user, EventKind::utterance, {{"text", text}});
    if (text == "!quit" || text == "!exit") {
      s->info.state = SessionState::closed;
      append(*s, Role::system, EventKind::closed, {{"reason", text}});
      s->transcript.close();
      return seq;
    }
    if (text == "!clear") {
      append(*s, Role::system, EventKind::cleared, nlohmann::json::object());
      s->info.visible_from = s->log.size();
      s->info.state = SessionState::idle;
      return seq;
    }
    s->running = true;
    s->abort_requested = false;
    s->info.state = SessionState::planning;
    previous = std::move(s->worker);
  }
  if (previous.joinable()) previous.join();
  std::lock_guard lock(s->m);
  s->worker = std::jthread([this, s, text](std::stop_token stop) { run(s, text, stop); });
  return seq;
}

void Gateway::run(std::shared_ptr<Session> s, std::string text, std::stop_token stop) {
  PipelineConfig cfg = cfg_.pipeline;
  cfg.style = s->info.style;
  PipelineHooks hooks;
  hooks.stop = stop;
  hooks.sink_factory = cfg_.sink_factory;
  hooks.on_label = [&](const Classification& c) {
    std::lock_guard lock(s->m);
    append(*s, Role::planner, EventKind::label, label_json(c));
  };
  hooks.on_plan = [&](const Plan& p, const ExecutionDecision& d) {
    std::lock_guard lock(s->m);
    append(*s, Role::planner, EventKind::plan, {{"plan", to_json(p)}, {"decision", decision_json(d)}});
    if (s->info.state == SessionState::planning) s->info.state = SessionState::executing;
  };
  hooks.on_segment = [&](const SegmentReport& r, const SegmentOutcome& o) {
    std::lock_guard lock(s->m);
    append(*s, Role::executor, EventKind::segment, segment_json(r));
    const auto& tel = o.telemetry;
    for (std::size_t i = 0; i < tel.size(); ++i) {
      if (i % cfg_.telemetry_stride == 0 || i + 1 == tel.size()) {
        append(*s, Role::executor, EventKind::telemetry, sample_json(tel[i]));
      }
    }
  };

  // An implicit request is anything the instruction grammar cannot parse directly.
  TaskRequest req{text, s->info.world, Phrasing::explicit_};
  try {
    extract_scene_and_actions(req);
  } catch (const Error&) {
    req.phrasing = Phrasing::implicit;
  }

  nlohmann::json report;
  bool aborted = false;
  try {
    FailureMemory mem;
    {
      std::lock_guard lock(s->m);
      mem = s->memory;
    }
    const auto out = run_task(req, ws_, *s->backend, cfg, mem, hooks);
    report = report_json(out, cfg.sim.dt);
    aborted = out.report.aborted;
    std::lock_guard lock(s->m);
    s->memory = std::move(mem);
  } catch (const std::exception& e) {
    report = {{"success", false}, {"aborted", false}, {"failure", e.what()}};
  }
  std::lock_guard lock(s->m);
  append(*s, Role::executor, EventKind::report, report);
  if (s->info.state != SessionState::closed) {
    s->info.state = aborted || s->abort_requested ? SessionState::aborted : SessionState::idle;
  }
  s->running = false;
  s->cv.notify_all();
}

void Gateway::abort(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->m);
  if (!s->running || s->abort_requested) throw Error(Errc::NotExecuting, id);
  s->abort_requested = true;
  append(*s, Role::user, EventKind::abort, {{"state", to_string(s->info.state)}});
  s->worker.request_stop();
}

void Gateway::close_session(const std::string& id) {
  auto s = find(id);
  std::jthread w;
  {
    std::lock_guard lock(s->m);
    if (s->info.state == SessionState::closed) return;
    w = std::move(s->worker);
  }
  if (w.joinable()) {
    w.request_stop();
    w.join();
  }
  std::lock_guard lock(s->m);
  s->info.state = SessionState::closed;
  append(*s, Role::system, EventKind::closed, {{"reason", "close"}});
  s->transcript.close();
}

SessionInfo Gateway::info(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->m);
  return s->info;
}

std::vector<SessionInfo> Gateway::sessions() const {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, s] : sessions_) all.push_back(s);
  }
  std::vector<SessionInfo> out;
  for (const auto& s : all) {
    std::lock_guard lock(s->m);
    out.push_back(s->info);
  }
  return out;
}

std::vector<ChatEvent> Gateway::events(const std::string& id, std::uint64_t since,
                                       bool visible_only) const {
  auto s = find(id);
  std::lock_guard lock(s->m);
  if (visible_only) since = std::max(since, s->info.visible_from);
  if (since >= s->log.size()) return {};
  return {s->log.begin() + static_cast<std::ptrdiff_t>(since), s->log.end()};
}

std::vector<ChatEvent> Gateway::wait_events(const std::string& id, std::uint64_t since,
                                            std::chrono::milliseconds timeout) const {
  auto s = find(id);
  std::unique_lock lock(s->m);
  s->cv.wait_for(lock, timeout, [&] {
    return s->log.size() > since || s->info.state == SessionState::closed;
  });
  if (since >= s->log.size()) return {};
  return {s->log.begin() + static_cast<std::ptrdiff_t>(since), s->log.end()};
}

bool Gateway::wait_idle(const std::string& id, std::chrono::milliseconds timeout) const {
  auto s = find(id);
  std::unique_lock lock(s->m);
  return s->cv.wait_for(lock, timeout, [&] { return !s->running; });
}

std::vector<ChatEvent> load_transcript(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MalformedDocument, "cannot read " + path.string());
  std::vector<ChatEvent> out;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    try {
      out.push_back(event_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::MalformedDocument, std::string("transcript: ") + e.what());
    }
  }
  return out;
}

}  // namespace aerotask::gateway
