#include "aerotask/execution.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <deque>
#include <sstream>

#include "aerotask/avoidance.hpp"
#include "aerotask/error.hpp"

namespace aerotask {

namespace {

bool is_motion(const PlanStep& s) {
  if (s.action_hint == "move") return true;
  if (s.action_hint == "goto") return s.target.has_value();
  if (s.action_hint == "capture" || s.action_hint == "search") return s.target.has_value();
  return false;
}

std::map<std::string, std::string> step_args(const PlanStep& s) {
  if (s.target) return {{"target", *s.target}};
  if (s.action_hint == "move") {
    for (const auto& a : lexicon::parse_instruction(s.description).actions) {
      if (a.kind == lexicon::ActionKind::move) {
        return {{"direction", std::string(to_string(a.direction))},
                {"meters", format_number(a.amount.value_or(lexicon::kDefaultMoveMeters))}};
      }
    }
  }
  return {};
}

std::string render_args(const std::map<std::string, std::string>& args) {
  std::string out;
  for (const auto& [k, v] : args) out += " " + k + "=" + v;
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error(Errc::ToolFailure, "argument " + what + "='" + s + "' is not a number");
  }
  return v;
}

std::vector<Command> plan_avoiding(const ToolInvocation& inv) {
  if (!inv.world) throw Error(Errc::ToolFailure, "avoidance needs a world model");
  const auto& args = inv.args;
  const Vec3 here = inv.pose.position;
  Vec3 goal;
  if (auto t = args.find("target"); t != args.end()) {
    auto wp = inv.world->waypoint(t->second);
    if (!wp) throw Error(Errc::ToolFailure, "unknown target '" + t->second + "'");
    goal = *wp;
    goal.z = here.z;
  } else if (args.count("x") && args.count("y") && args.count("z")) {
    goal = {parse_double(args.at("x"), "x"), parse_double(args.at("y"), "y"),
            parse_double(args.at("z"), "z")};
  } else if (args.count("direction") && args.count("meters")) {
    auto dir = direction_from(args.at("direction"));
    if (!dir) throw Error(Errc::ToolFailure, "bad direction '" + args.at("direction") + "'");
    goal = here + body_axis(inv.pose.yaw_deg, *dir) * parse_double(args.at("meters"), "meters");
  } else {
    // No goal: hold position for a moment.
    return {Command::hover(1)};
  }

  const auto grid = OccupancyGrid::from_world(*inv.world);
  WaypointPath path;
  try {
    path = plan_path(grid, here, goal);
  } catch (const Error& e) {
    throw Error(Errc::ToolFailure, std::string("avoidance: ") + e.what());
  }
  std::vector<Command> out;
  auto near = [](Vec3 a, Vec3 b) { return distance(a, b) < 1e-9; };
  if (!near(here, path.waypoints.front())) out.push_back(Command::go_to(path.waypoints.front()));
  auto body = to_commands(path, inv.pose.yaw_deg);
  out.insert(out.end(), body.begin(), body.end());
  if (!near(goal, path.waypoints.back())) out.push_back(Command::go_to(goal));
  double yaw = inv.pose.yaw_deg;
  for (const auto& c : body) {
    if (const auto* r = c.as<Rotate>()) yaw += r->degrees;
  }
  const double back = normalize_degrees(inv.pose.yaw_deg - yaw);
  if (std::abs(back) > 1e-9) out.push_back(Command::rotate(back));
  return out;
}

}  // namespace

void ToolRegistry::add(ToolSpec spec) {
  if (find(spec.name)) throw Error(Errc::BadParameter, "tool '" + spec.name + "' already registered");
  for (const auto& cap : spec.capabilities) {
    if (serving(cap)) {
      throw Error(Errc::BadParameter, "capability '" + cap + "' already served");
    }
  }
  tools_.push_back(std::move(spec));
}

const ToolSpec* ToolRegistry::find(std::string_view name) const {
  for (const auto& t : tools_) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const ToolSpec* ToolRegistry::serving(std::string_view keyword) const {
  for (const auto& t : tools_) {
    if (t.capabilities.count(std::string(keyword))) return &t;
  }
  return nullptr;
}

ToolSpec avoidance_tool() {
  return {"avoidance", {"target", "x", "y", "z", "direction", "meters"}, {"avoid", "obstacle", "dodge"},
          plan_avoiding};
}

ToolRegistry default_registry() {
  ToolRegistry reg;
  reg.add(avoidance_tool());
  return reg;
}

std::string_view to_string(ExecutionMode m) {
  return m == ExecutionMode::direct ? "direct" : "tool_assisted";
}

std::map<std::string, std::string> match_tool_keywords(const std::set<std::string>& keywords,
                                                       const KnowledgeBase& kb,
                                                       const ToolRegistry& reg) {
  std::map<std::string, std::string> out;
  for (const auto& k : keywords) {
    if (kb.knows(k)) continue;
    const ToolSpec* t = reg.serving(k);
    if (!t) throw Error(Errc::NoToolForKeyword, "no registered tool serves '" + k + "'");
    out[k] = t->name;
  }
  return out;
}

ExecutionDecision decide_execution(const TaskLabel& label, const Plan& plan,
                                   const ToolRegistry& reg, const std::set<std::string>& keywords,
                                   const KnowledgeBase& kb) {
  ExecutionDecision d;
  if (label.autonomy == Autonomy::independent) return d;
  const auto matched = match_tool_keywords(keywords, kb, reg);
  std::set<std::string> tools;
  for (const auto& [k, t] : matched) tools.insert(t);
  if (tools.empty()) {
    throw Error(Errc::NoToolForKeyword, "tool-assisted label but every keyword is known");
  }
  d.mode = ExecutionMode::tool_assisted;
  std::vector<std::size_t> steps;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    if (is_motion(plan.steps[i])) steps.push_back(i);
  }
  if (steps.empty()) steps.push_back(0);
  for (std::size_t i : steps) {
    for (const auto& t : tools) d.bindings.push_back({i, t, step_args(plan.steps[i])});
  }
  return d;
}

Translation translate(const Plan& plan, const ExecutionDecision& decision, Backend& backend,
                      const TaskRequest& req, PromptStyle style, const PlanningContext& ctx,
                      const FailureMemory& mem) {
  PromptTask task{PromptKind::translate, plan.label, {}};
  task.blocks.emplace_back("STEPS", render_plan(plan));
  std::string tools;
  for (const auto& b : decision.bindings) {
    tools += "step " + std::to_string(b.step + 1) + ": " + b.tool + render_args(b.args) + "\n";
  }
  if (!tools.empty()) task.blocks.emplace_back("TOOLS", tools);

  Translation t;
  t.raw = backend.complete(build_prompt(style, ctx, req, mem, task));
  t.groups.assign(plan.steps.size(), {});
  std::optional<std::size_t> current;
  std::istringstream in(t.raw);
  for (std::string line; std::getline(in, line);) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    line = line.substr(b);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.rfind("#", 0) == 0) {
      std::istringstream marker(line.substr(1));
      std::string word;
      std::size_t n = 0;
      if (marker >> word >> n && word == "step" && n >= 1 && n <= plan.steps.size()) {
        current = n - 1;
        continue;
      }
      continue;
    }
    Command cmd;
    try {
      cmd = parse_command(line);
    } catch (const Error& e) {
      throw Error(Errc::UnparseableOutput, "backend line '" + line + "': " + e.what());
    }
    if (!current) throw Error(Errc::UnparseableOutput, "command before any '# step N' marker");
    t.groups[*current].push_back(cmd);
  }

  for (std::size_t i = 0; i < t.groups.size(); ++i) {
    if (t.groups[i].empty()) {
      throw Error(Errc::UnresolvedStep, "step " + std::to_string(i + 1) + " ('" +
                                            plan.steps[i].description + "') produced no command");
    }
    std::vector<const ToolBinding*> bound;
    for (const auto& b : decision.bindings) {
      if (b.step == i) bound.push_back(&b);
    }
    std::size_t invocations = 0;
    for (const auto& c : t.groups[i]) {
      const auto* inv = c.as<InvokeTool>();
      if (!inv) continue;
      ++invocations;
      bool matches = std::any_of(bound.begin(), bound.end(), [&](const ToolBinding* b) {
        return b->tool == inv->tool && b->args == inv->args;
      });
      if (!matches) {
        throw Error(Errc::UnparseableOutput,
                    "step " + std::to_string(i + 1) + " invokes unbound tool '" + inv->tool + "'");
      }
    }
    if (invocations < bound.size()) {
      throw Error(Errc::UnresolvedStep,
                  "step " + std::to_string(i + 1) + " is missing its tool invocation");
    }
    t.commands.insert(t.commands.end(), t.groups[i].begin(), t.groups[i].end());
  }
  if (t.commands.empty() || t.commands.front().kind() != CommandKind::takeoff) {
    t.commands.insert(t.commands.begin(), Command::takeoff());
  }
  if (t.commands.back().kind() != CommandKind::land) t.commands.push_back(Command::land());
  return t;
}

std::optional<std::size_t> over_length_group(const Translation& t, const MlvConstraints& c) {
  for (std::size_t i = 0; i < t.groups.size(); ++i) {
    if (t.groups[i].size() > c.l_max) return i;
  }
  return std::nullopt;
}

ExecutionReport execute(const std::vector<Command>& commands, const ExecutionDecision& decision,
                        CommandSink& sink, const ExecuteOptions& opts) {
  if (!sink.ready()) throw Error(Errc::SinkUnavailable, "command sink is not ready");
  const auto started = std::chrono::steady_clock::now();
  ExecutionReport report;
  report.success = true;
  auto finish = [&] {
    report.duration_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
  };
  auto fail = [&](std::string why) {
    report.success = false;
    report.failure = std::move(why);
    sink.failsafe();
  };
  auto aborted = [&] {
    if (!opts.stop.stop_requested()) return false;
    report.success = false;
    report.aborted = true;
    report.failure = "aborted";
    sink.failsafe();
    return true;
  };

  std::deque<Command> pending(commands.begin(), commands.end());
  std::vector<std::size_t> uses(decision.bindings.size(), 0);
  while (!pending.empty()) {
    std::vector<Command> prefix;
    while (!pending.empty() && pending.front().kind() != CommandKind::invoke_tool) {
      prefix.push_back(pending.front());
      pending.pop_front();
    }
    if (!prefix.empty()) {
      for (auto& mlv : segment_plan(prefix, opts.constraints)) {
        if (aborted()) return finish();
        SegmentReport seg;
        seg.index = report.segments.size();
        seg.mlv = std::move(mlv);
        const auto verdict = validate_mlv(seg.mlv, opts.constraints);
        if (!verdict.accepted()) {
          seg.cause = std::string(to_string(verdict.rule)) + ": " + verdict.detail;
          report.segments.push_back(seg);
          fail("segment " + std::to_string(seg.index) + " rejected: " + seg.cause);
          return finish();
        }
        SegmentOutcome out = sink.dispatch(seg.mlv);
        seg.ok = out.ok;
        seg.cause = out.cause;
        seg.acks = out.acks;
        report.photos.insert(report.photos.end(), out.photos.begin(), out.photos.end());
        report.segments.push_back(seg);
        if (opts.on_segment) opts.on_segment(seg, out);
        if (!out.ok) {
          fail("segment " + std::to_string(seg.index) + " failed: " + out.cause);
          return finish();
        }
      }
    }
    if (pending.empty()) break;
    if (aborted()) return finish();

    const InvokeTool inv = *pending.front().as<InvokeTool>();
    pending.pop_front();
    if (decision.mode == ExecutionMode::direct) {
      fail("direct execution cannot invoke tool '" + inv.tool + "'");
      return finish();
    }
    std::size_t slot = decision.bindings.size();
    for (std::size_t i = 0; i < decision.bindings.size(); ++i) {
      const auto& b = decision.bindings[i];
      if (b.tool == inv.tool && b.args == inv.args && uses[i] == 0) {
        slot = i;
        break;
      }
    }
    if (slot == decision.bindings.size()) {
      fail("tool '" + inv.tool + render_args(inv.args) + "' is not bound or was already used");
      return finish();
    }
    ++uses[slot];
    const ToolSpec* tool = opts.tools ? opts.tools->find(inv.tool) : nullptr;
    if (!tool) {
      fail("tool '" + inv.tool + "' is not registered");
      return finish();
    }
    std::vector<Command> expansion;
    try {
      expansion = tool->fn({inv.args, sink.pose(), opts.world});
    } catch (const Error& e) {
      fail(e.code() == Errc::ToolFailure ? e.what() : "ToolFailure: " + std::string(e.what()));
      return finish();
    }
    report.tools_invoked.push_back(inv.tool);
    pending.insert(pending.begin(), expansion.begin(), expansion.end());
  }
  return finish();
}

ExecutionReport dispatch_raw(const MachineLanguageVector& mlv, CommandSink& sink,
                             const MlvConstraints& c) {
  ExecutionReport report;
  SegmentReport seg;
  seg.mlv = mlv;
  const auto verdict = validate_mlv(mlv, c);
  if (!verdict.accepted()) {
    seg.cause = std::string(to_string(verdict.rule)) + ": " + verdict.detail;
    report.segments.push_back(seg);
    report.failure = "rejected before dispatch: " + seg.cause;
    return report;
  }
  if (!sink.ready()) throw Error(Errc::SinkUnavailable, "command sink is not ready");
  SegmentOutcome out = sink.dispatch(mlv);
  seg.ok = out.ok;
  seg.cause = out.cause;
  seg.acks = out.acks;
  report.segments.push_back(seg);
  report.photos = out.photos;
  report.success = out.ok;
  if (!out.ok) report.failure = out.cause;
  return report;
}

}  // namespace aerotask
