#include "aerotask/pipeline.hpp"

#include <algorithm>

#include "aerotask/error.hpp"

namespace aerotask {

namespace {

std::string join_words(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

std::string scene_text(const WorldModel& w) {
  std::string out = "world: " + w.id + "\n";
  for (const auto& line : describe_objects(w)) out += line + "\n";
  return out;
}

}  // namespace

Workspace Workspace::load(const std::filesystem::path& root) {
  Workspace ws;
  ws.root_ = root;
  const auto worlds = root / "worlds";
  if (std::filesystem::is_directory(worlds)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(worlds)) {
      if (e.path().extension() == ".world") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) ws.add_world(load_world_file(f));
  }
  if (std::filesystem::exists(root / "knowledge.txt")) {
    ws.kb_ = load_knowledge_base_file(root / "knowledge.txt");
  }
  if (std::filesystem::exists(root / "calibration.txt")) {
    ws.calibration_ = load_calibration_file(root / "calibration.txt");
    if (!ws.calibration_.empty()) ws.calibrated_ = calibrate(ws.calibration_, ComplexityConfig{});
  }
  return ws;
}

const WorldModel& Workspace::world(const std::string& id) const {
  auto it = worlds_.find(id);
  if (it == worlds_.end()) throw Error(Errc::UnknownWorld, "no world named '" + id + "'");
  return it->second;
}

std::vector<std::string> Workspace::world_ids() const {
  std::vector<std::string> out;
  for (const auto& [id, w] : worlds_) out.push_back(id);
  return out;
}

void Workspace::add_world(WorldModel w) {
  const std::string id = w.id;
  worlds_[id] = std::move(w);
}

PipelineConfig Workspace::default_config() const {
  PipelineConfig cfg;
  cfg.complexity = calibrated_;
  return cfg;
}

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::none: return "none";
    case Stage::rewrite: return "rewrite";
    case Stage::classify: return "classify";
    case Stage::plan: return "plan";
    case Stage::translate: return "translate";
    case Stage::execute: return "execute";
  }
  return "?";
}

Classification classify_request(const TaskRequest& req, const Workspace& ws, Backend& backend,
                                const PipelineConfig& cfg, const FailureMemory& mem) {
  const WorldModel& world = ws.world(req.scene);
  Classification c;
  c.instruction = req.instruction;
  if (req.phrasing == Phrasing::implicit) {
    PlanningContext scene;
    scene.system_prompt = scene_text(world);
    c.instruction = rewrite_request(req, backend, cfg.style, scene, mem);
  }
  const TaskRequest explicit_req{c.instruction, req.scene, Phrasing::explicit_};
  c.context = extract_scene_and_actions(explicit_req, &world);
  c.features = extract_features(explicit_req, world);
  c.score = complexity_score(c.features, cfg.complexity);
  const KnowledgeBase kb = ws.knowledge().with_scene(world);
  c.keywords = extract_keywords(c.instruction);
  c.unknown = unknown_keywords(c.keywords, kb);
  std::vector<std::string> known;
  for (const auto& k : c.keywords) {
    if (kb.knows(k)) known.push_back(k);
  }
  c.computed = {classify_complexity(c.score, cfg.complexity), classify_independence(c.keywords, kb)};

  const std::string features = "p=" + std::to_string(c.features.p) +
                               " d=" + std::to_string(c.features.d) +
                               " l=" + std::to_string(c.features.l) +
                               " score=" + format_number(c.score.total) +
                               " theta=" + format_number(cfg.complexity.theta);
  const std::string keywords = "known: " + join_words(known) + "\nunknown: " + join_words(c.unknown);
  c.label = request_label(explicit_req, backend, cfg.style, c.context, mem,
                          {{"FEATURES", features}, {"KEYWORDS", keywords}});
  return c;
}

TaskOutcome run_task(const TaskRequest& req, const Workspace& ws, Backend& backend,
                     const PipelineConfig& cfg, FailureMemory& mem, const PipelineHooks& hooks) {
  TaskOutcome out;
  out.request = req;
  const WorldModel& world = ws.world(req.scene);
  Stage stage = Stage::classify;
  try {
    out.classification = classify_request(req, ws, backend, cfg, mem);
    const Classification& c = *out.classification;
    if (hooks.on_label) hooks.on_label(c);

    stage = Stage::plan;
    const TaskRequest explicit_req{c.instruction, req.scene, Phrasing::explicit_};
    const int attempts = 1 + (cfg.style == PromptStyle::eip ? std::max(0, cfg.eip_retries) : 0);
    for (int i = 0; i < attempts; ++i) {
      ++out.plan_attempts;
      Plan p = plan(explicit_req, c.label, backend, cfg.style, c.context, mem);
      const auto verdict = check_plan(p, c.instruction, world, cfg.constraints);
      out.plan = p;
      if (verdict.ok()) break;
      mem = record_failure(explicit_req, p, verdict.rule, std::move(mem));
      if (i + 1 == attempts) {
        throw Error(Errc::PlanRuleViolation,
                    std::string(to_string(verdict.rule)) + ": " + verdict.detail);
      }
    }

    stage = Stage::translate;
    // The executor derives its keywords independently of the planner.
    out.executor_keywords = extract_keywords(c.instruction);
    const ToolRegistry registry = cfg.tools_enabled ? default_registry() : ToolRegistry{};
    if (cfg.tools_enabled) {
      out.decision = decide_execution(c.label, *out.plan, registry, out.executor_keywords,
                                      ws.knowledge().with_scene(world));
    }
    if (hooks.on_plan) hooks.on_plan(*out.plan, out.decision);
    const Translation t =
        translate(*out.plan, out.decision, backend, explicit_req, cfg.style, c.context, mem);
    out.commands = t.commands;
    if (auto g = over_length_group(t, cfg.constraints)) {
      throw Error(Errc::PlanRuleViolation, "over_length: step " + std::to_string(*g + 1) +
                                               " translates to " +
                                               std::to_string(t.groups[*g].size()) + " commands");
    }

    stage = Stage::execute;
    SimSession session(world, cfg.sim);
    std::unique_ptr<CommandSink> sink = hooks.sink_factory
                                            ? hooks.sink_factory(session)
                                            : std::make_unique<SimulatorSink>(session);
    ExecuteOptions opts;
    opts.constraints = cfg.constraints;
    opts.tools = &registry;
    opts.world = &world;
    opts.stop = hooks.stop;
    opts.on_segment = hooks.on_segment;
    out.report = execute(out.commands, out.decision, *sink, opts);
    out.trajectory = session.trajectory();
    out.executed = session.executed();
    out.photos = session.photos();
    out.collided = session.collided();
    out.airborne_at_end = session.state().airborne;
    out.final_pose = {session.state().position, session.state().yaw_deg};
    out.flight_time = session.flight_time();
    if (!out.report.success) {
      out.failed_stage = Stage::execute;
      out.failure = out.report.failure;
    }
  } catch (const Error& e) {
    out.failed_stage = stage;
    out.failure = e.what();
  }
  return out;
}

}  // namespace aerotask

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace aerotask {

PipelineConfig apply_config_json(std::string_view json_text, PipelineConfig cfg) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedDocument, std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw Error(Errc::MalformedDocument, "config must be a JSON object");
  try {
    if (j.contains("style")) {
      auto s = parse_prompt_style(j["style"].get<std::string>());
      if (!s) throw Error(Errc::BadParameter, "config: unknown style");
      cfg.style = *s;
    }
    auto num = [&](const nlohmann::json& obj, const char* key, double& field) {
      if (obj.contains(key)) field = obj[key].get<double>();
    };
    num(j, "alpha", cfg.complexity.alpha);
    num(j, "beta", cfg.complexity.beta);
    num(j, "gamma_p", cfg.complexity.gamma_p);
    num(j, "gamma_d", cfg.complexity.gamma_d);
    num(j, "gamma_a", cfg.complexity.gamma_a);
    num(j, "theta", cfg.complexity.theta);
    if (j.contains("l_min")) cfg.constraints.l_min = j["l_min"].get<std::size_t>();
    if (j.contains("l_max")) cfg.constraints.l_max = j["l_max"].get<std::size_t>();
    if (j.contains("tools_enabled")) cfg.tools_enabled = j["tools_enabled"].get<bool>();
    if (j.contains("eip_retries")) cfg.eip_retries = j["eip_retries"].get<int>();
    if (j.contains("sim")) {
      const auto& s = j["sim"];
      num(s, "dt", cfg.sim.dt);
      num(s, "cruise_speed", cfg.sim.cruise_speed);
      num(s, "max_speed", cfg.sim.max_speed);
      num(s, "acceleration", cfg.sim.acceleration);
      num(s, "yaw_rate", cfg.sim.yaw_rate);
      num(s, "takeoff_altitude", cfg.sim.takeoff_altitude);
      num(s, "capture_seconds", cfg.sim.capture_seconds);
      num(s, "hover_level", cfg.sim.hover_level);
      num(s, "maneuver_increment", cfg.sim.maneuver_increment);
      num(s, "photo_radius", cfg.sim.photo_radius);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedDocument, std::string("config: ") + e.what());
  }
  if (!cfg.complexity.valid()) throw Error(Errc::BadParameter, "config: invalid complexity weights");
  if (cfg.constraints.l_min == 0 || cfg.constraints.l_min > cfg.constraints.l_max) {
    throw Error(Errc::BadParameter, "config: need 0 < l_min <= l_max");
  }
  return cfg;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MalformedDocument, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return apply_config_json(buf.str(), base);
}

}  // namespace aerotask
