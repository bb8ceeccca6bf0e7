#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stop_token>
#include <string>
#include <vector>

#include "aerotask/classifier.hpp"
#include "aerotask/execution.hpp"
#include "aerotask/planning.hpp"
#include "aerotask/simulator.hpp"

namespace aerotask {

struct PipelineConfig {
  PromptStyle style = PromptStyle::cp;
  ComplexityConfig complexity;
  MlvConstraints constraints;
  SimConfig sim;
  bool tools_enabled = true;
  int eip_retries = 2;  // re-plans after a rule violation, EIP only
};

/// Worlds, vocabulary and calibration loaded from a data directory.
class Workspace {
 public:
  Workspace() = default;
  /// Reads worlds/*.world, knowledge.txt and calibration.txt under `root`.
  static Workspace load(const std::filesystem::path& root = AEROTASK_DATA_DIR);

  const std::filesystem::path& root() const { return root_; }
  /// Throws UnknownWorld.
  const WorldModel& world(const std::string& id) const;
  bool has_world(const std::string& id) const { return worlds_.count(id) > 0; }
  std::vector<std::string> world_ids() const;
  void add_world(WorldModel w);

  const KnowledgeBase& knowledge() const { return kb_; }
  void set_knowledge(KnowledgeBase kb) { kb_ = std::move(kb); }
  const std::vector<CalibrationExample>& calibration_set() const { return calibration_; }
  /// Complexity weights fitted on the calibration set (defaults when empty).
  const ComplexityConfig& calibrated() const { return calibrated_; }
  PipelineConfig default_config() const;

 private:
  std::filesystem::path root_;
  std::map<std::string, WorldModel> worlds_;
  KnowledgeBase kb_;
  std::vector<CalibrationExample> calibration_;
  ComplexityConfig calibrated_;
};

enum class Stage { none, rewrite, classify, plan, translate, execute };
std::string_view to_string(Stage s);

struct Classification {
  std::string instruction;  // explicit form the label was computed on
  TaskFeatures features;
  ComplexityScore score;
  std::set<std::string> keywords;
  std::vector<std::string> unknown;
  TaskLabel computed;  // from features and keywords
  TaskLabel label;     // as confirmed by the backend
  PlanningContext context;
};

struct TaskOutcome {
  TaskRequest request;
  std::optional<Classification> classification;
  std::optional<Plan> plan;
  int plan_attempts = 0;
  std::set<std::string> executor_keywords;
  ExecutionDecision decision;
  std::vector<Command> commands;
  ExecutionReport report;
  std::vector<Command> executed;  // as flown, tool calls expanded
  std::vector<TelemetryPoint> trajectory;
  std::vector<PhotoEvent> photos;
  bool collided = false;
  bool airborne_at_end = false;
  Pose final_pose;
  double flight_time = 0.0;

  Stage failed_stage = Stage::none;
  std::string failure;
  bool ok() const { return failed_stage == Stage::none && report.success; }
};

struct PipelineHooks {
  std::function<void(const Classification&)> on_label;
  std::function<void(const Plan&, const ExecutionDecision&)> on_plan;
  std::function<void(const SegmentReport&, const SegmentOutcome&)> on_segment;
  /// Wraps the simulator sink, e.g. to add latency or fault injection.
  std::function<std::unique_ptr<CommandSink>(SimSession&)> sink_factory;
  std::stop_token stop;
};

/// Rewrite (implicit requests), features, keywords and the backend-confirmed label.
Classification classify_request(const TaskRequest& req, const Workspace& ws, Backend& backend,
                                const PipelineConfig& cfg, const FailureMemory& mem);

/// The full loop on a fresh simulator session. Throws UnknownWorld for a missing
/// scene; later library errors become a failed outcome. `mem` collects plan-rule
/// violations.
TaskOutcome run_task(const TaskRequest& req, const Workspace& ws, Backend& backend,
                     const PipelineConfig& cfg, FailureMemory& mem, const PipelineHooks& hooks = {});

}  // namespace aerotask

namespace aerotask {

/// Overrides `base` with the keys present in a JSON object: style, alpha, beta,
/// gamma_p, gamma_d, gamma_a, theta, l_min, l_max, tools_enabled, eip_retries,
/// and a "sim" object with SimConfig field names.
PipelineConfig apply_config_json(std::string_view json_text, PipelineConfig base);
PipelineConfig load_pipeline_config(const std::filesystem::path& path, PipelineConfig base);

}  // namespace aerotask
