#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stop_token>
#include <string>
#include <vector>

#include "aerotask/classifier.hpp"
#include "aerotask/core.hpp"
#include "aerotask/planning.hpp"
#include "aerotask/sink.hpp"
#include "aerotask/world.hpp"

namespace aerotask {

struct ToolInvocation {
  std::map<std::string, std::string> args;
  Pose pose;
  const WorldModel* world = nullptr;
};

/// Returns commands to splice in place of the invocation; throws on failure.
using ToolFn = std::function<std::vector<Command>(const ToolInvocation&)>;

struct ToolSpec {
  std::string name;
  std::vector<std::string> arg_schema;  // accepted argument names
  std::set<std::string> capabilities;   // keywords the tool serves
  ToolFn fn;
};

class ToolRegistry {
 public:
  /// Throws BadParameter for a duplicate name or a capability already served.
  void add(ToolSpec spec);
  const ToolSpec* find(std::string_view name) const;
  const ToolSpec* serving(std::string_view keyword) const;
  const std::vector<ToolSpec>& tools() const { return tools_; }
  bool empty() const { return tools_.empty(); }

 private:
  std::vector<ToolSpec> tools_;
};

/// Grid path planner around obstacles. Arguments: target=<waypoint>,
/// or x/y/z, or direction/meters relative to the current pose.
ToolSpec avoidance_tool();
ToolRegistry default_registry();

enum class ExecutionMode { direct, tool_assisted };
std::string_view to_string(ExecutionMode m);

struct ToolBinding {
  std::size_t step = 0;  // zero-based plan step
  std::string tool;
  std::map<std::string, std::string> args;
  friend bool operator==(const ToolBinding&, const ToolBinding&) = default;
};

struct ExecutionDecision {
  ExecutionMode mode = ExecutionMode::direct;
  std::vector<ToolBinding> bindings;
};

/// Keywords outside the knowledge base mapped to the tool serving each.
std::map<std::string, std::string> match_tool_keywords(const std::set<std::string>& keywords,
                                                       const KnowledgeBase& kb,
                                                       const ToolRegistry& reg);

/// Binds each required tool to every motion step of the plan (step 0 when the
/// plan has no motion step).
ExecutionDecision decide_execution(const TaskLabel& label, const Plan& plan,
                                   const ToolRegistry& reg, const std::set<std::string>& keywords,
                                   const KnowledgeBase& kb);

struct Translation {
  std::vector<std::vector<Command>> groups;  // per plan step
  std::vector<Command> commands;             // framed with takeoff/land
  std::string raw;                           // backend answer
};

Translation translate(const Plan& plan, const ExecutionDecision& decision, Backend& backend,
                      const TaskRequest& req = {}, PromptStyle style = PromptStyle::cp,
                      const PlanningContext& ctx = {}, const FailureMemory& mem = FailureMemory{});

/// Index of the first step group longer than l_max.
std::optional<std::size_t> over_length_group(const Translation& t, const MlvConstraints& c);

struct SegmentReport {
  std::size_t index = 0;
  MachineLanguageVector mlv;
  bool ok = false;
  std::string cause;
  std::vector<CommandAck> acks;
};

struct ExecutionReport {
  std::vector<SegmentReport> segments;
  bool success = false;
  bool aborted = false;
  std::string failure;
  std::vector<std::string> tools_invoked;
  std::vector<PhotoEvent> photos;
  double duration_s = 0.0;  // wall clock
};

struct ExecuteOptions {
  MlvConstraints constraints;
  const ToolRegistry* tools = nullptr;
  const WorldModel* world = nullptr;
  std::stop_token stop;
  std::function<void(const SegmentReport&, const SegmentOutcome&)> on_segment;
};

/// Dispatches commands segment by segment, expanding tool invocations against
/// the sink's live pose. Throws SinkUnavailable; everything else is reported.
ExecutionReport execute(const std::vector<Command>& commands, const ExecutionDecision& decision,
                        CommandSink& sink, const ExecuteOptions& opts);

/// Validates a single backend-produced vector and dispatches it only if valid.
ExecutionReport dispatch_raw(const MachineLanguageVector& mlv, CommandSink& sink,
                             const MlvConstraints& c);

}  // namespace aerotask
