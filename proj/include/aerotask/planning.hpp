#pragma once

#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "aerotask/core.hpp"
#include "aerotask/lexicon.hpp"
#include "aerotask/world.hpp"

namespace aerotask {

// ---------------------------------------------------------------------------
// Backend contract
// ---------------------------------------------------------------------------

/// Text in, text out. With temperature 0 identical prompts must give identical
/// responses. Implementations throw BackendUnavailable when unreachable.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string id() const = 0;
  virtual std::string complete(const std::string& prompt) = 0;

  double temperature() const { return temperature_; }
  void set_temperature(double t) { temperature_ = t; }

 private:
  double temperature_ = 0.0;
};

/// Rule-based backend built on the instruction grammar. Deterministic regardless
/// of temperature.
class ReferenceBackend : public Backend {
 public:
  std::string id() const override { return "reference"; }
  std::string complete(const std::string& prompt) override;
};

/// Answers through a caller-supplied function; used for scripted replays.
class ScriptedBackend : public Backend {
 public:
  using Responder = std::function<std::string(const std::string& prompt)>;
  ScriptedBackend(std::string id, Responder responder)
      : id_(std::move(id)), responder_(std::move(responder)) {}
  std::string id() const override { return id_; }
  std::string complete(const std::string& prompt) override { return responder_(prompt); }

 private:
  std::string id_;
  Responder responder_;
};

/// Forwards to another backend and reports every exchange.
class RecordingBackend : public Backend {
 public:
  using Observer = std::function<void(const std::string& prompt, const std::string& response)>;
  RecordingBackend(Backend& inner, Observer observer)
      : inner_(inner), observer_(std::move(observer)) {}
  std::string id() const override { return inner_.id(); }
  std::string complete(const std::string& prompt) override;

 private:
  Backend& inner_;
  Observer observer_;
};

// ---------------------------------------------------------------------------
// Prompts
// ---------------------------------------------------------------------------

enum class PromptStyle { rp, cp, eip };
std::string_view to_string(PromptStyle s);
std::optional<PromptStyle> parse_prompt_style(std::string_view s);

enum class PlanRule { none, unresolved_target, missing_target, duplicate_target, execution_detail,
                      over_length };
std::string_view to_string(PlanRule r);
std::optional<PlanRule> parse_plan_rule(std::string_view s);

struct FailureEntry {
  std::string digest;
  std::string request;
  std::string plan_summary;
  PlanRule rule = PlanRule::none;
};

/// Bounded, digest-deduplicated negative templates; oldest entries go first.
class FailureMemory {
 public:
  FailureMemory() = default;
  explicit FailureMemory(std::size_t capacity) : capacity_(capacity) {}

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::deque<FailureEntry>& entries() const { return entries_; }

  void add(FailureEntry entry);

  /// One JSON object per line.
  void save(const std::filesystem::path& path) const;
  static FailureMemory load(const std::filesystem::path& path, std::size_t capacity = 32);

 private:
  std::size_t capacity_ = 32;
  std::deque<FailureEntry> entries_;
};

struct PlanningContext {
  std::set<std::string> scene_keywords;
  std::vector<lexicon::ActionKind> actions;
  std::string system_prompt;  // object lines of the scene, one per line
};

/// Throws NoActionFound when no verb of the instruction grammar appears.
PlanningContext extract_scene_and_actions(const TaskRequest& req,
                                          const WorldModel* world = nullptr);

enum class PromptKind { classify, rewrite, plan, translate };
std::string_view to_string(PromptKind k);

/// Request-specific blocks appended after the style's context blocks.
struct PromptTask {
  PromptKind kind = PromptKind::plan;
  std::optional<TaskLabel> label;
  std::vector<std::pair<std::string, std::string>> blocks;  // heading, body
};

std::string build_prompt(PromptStyle style, const PlanningContext& ctx, const TaskRequest& req,
                         const FailureMemory& mem, const PromptTask& task = {});

/// "### HEADING" sections of a prompt, body text trimmed of the trailing newline.
std::map<std::string, std::string> prompt_sections(std::string_view prompt);

// ---------------------------------------------------------------------------
// Plans
// ---------------------------------------------------------------------------

/// Lines "N. [hint] @target description" or "N. [hint] description".
Plan parse_plan(std::string_view text, TaskLabel label);
std::string render_plan(const Plan& plan);
std::string summarize_plan(const Plan& plan);

/// Rewrites an implicit request into the instruction grammar. Throws
/// UnparseablePlan when the backend answer has no instruction line.
std::string rewrite_request(const TaskRequest& req, Backend& backend, PromptStyle style,
                            const PlanningContext& ctx, const FailureMemory& mem);

/// Asks the backend to confirm a label from computed features and keywords.
TaskLabel request_label(const TaskRequest& req, Backend& backend, PromptStyle style,
                        const PlanningContext& ctx, const FailureMemory& mem,
                        const std::vector<std::pair<std::string, std::string>>& evidence);

Plan plan(const TaskRequest& req, TaskLabel label, Backend& backend, PromptStyle style,
          const PlanningContext& ctx, const FailureMemory& mem);

struct PlanVerdict {
  PlanRule rule = PlanRule::none;
  std::string detail;
  bool ok() const { return rule == PlanRule::none; }
};

/// First violated plan rule against the instruction as resolved in `world`.
PlanVerdict check_plan(const Plan& plan, std::string_view instruction, const WorldModel& world,
                       const MlvConstraints& c = {});

FailureMemory record_failure(const TaskRequest& req, const Plan& failed, PlanRule rule,
                             FailureMemory mem);

/// FNV-1a 64-bit, lowercase hex.
std::string fnv1a_hex(std::string_view data);

}  // namespace aerotask
