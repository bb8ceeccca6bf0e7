#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "aerotask/geometry.hpp"

namespace aerotask {

// ---------------------------------------------------------------------------
// Command vocabulary
// ---------------------------------------------------------------------------

enum class CommandKind { takeoff, land, hover, move, rotate, capture, go_to, invoke_tool };
enum class Direction { forward, back, left, right, up, down };

std::string_view to_string(CommandKind kind);
std::string_view to_string(Direction dir);
std::optional<CommandKind> command_kind_from(std::string_view verb);
std::optional<Direction> direction_from(std::string_view word);

/// Unit vector of `dir` in the world frame for a body heading of `yaw_deg`.
Vec3 body_axis(double yaw_deg, Direction dir);

struct Takeoff {
  friend bool operator==(const Takeoff&, const Takeoff&) = default;
};
struct Land {
  friend bool operator==(const Land&, const Land&) = default;
};
struct Hover {
  double seconds = 1.0;
  friend bool operator==(const Hover&, const Hover&) = default;
};
struct Move {
  Direction direction = Direction::forward;
  double meters = 1.0;
  friend bool operator==(const Move&, const Move&) = default;
};
/// Positive degrees turn counter-clockwise (to the left), seen from above.
struct Rotate {
  double degrees = 0.0;
  friend bool operator==(const Rotate&, const Rotate&) = default;
};
/// Empty target photographs whatever is in view.
struct Capture {
  std::string target;
  friend bool operator==(const Capture&, const Capture&) = default;
};
struct GoTo {
  std::variant<std::string, Vec3> destination;
  friend bool operator==(const GoTo&, const GoTo&) = default;
};
struct InvokeTool {
  std::string tool;
  std::map<std::string, std::string> args;
  friend bool operator==(const InvokeTool&, const InvokeTool&) = default;
};

/// One atomic UAV action. The variant index order matches CommandKind.
struct Command {
  std::variant<Takeoff, Land, Hover, Move, Rotate, Capture, GoTo, InvokeTool> op;

  CommandKind kind() const { return static_cast<CommandKind>(op.index()); }
  template <typename T>
  const T* as() const {
    return std::get_if<T>(&op);
  }

  static Command takeoff() { return {Takeoff{}}; }
  static Command land() { return {Land{}}; }
  static Command hover(double seconds) { return {Hover{seconds}}; }
  static Command move(Direction d, double meters) { return {Move{d, meters}}; }
  static Command rotate(double degrees) { return {Rotate{degrees}}; }
  static Command capture(std::string target = {}) { return {Capture{std::move(target)}}; }
  static Command go_to(std::string waypoint) { return {GoTo{std::move(waypoint)}}; }
  static Command go_to(Vec3 point) { return {GoTo{point}}; }
  static Command invoke(std::string tool, std::map<std::string, std::string> args = {}) {
    return {InvokeTool{std::move(tool), std::move(args)}};
  }

  friend bool operator==(const Command&, const Command&) = default;
};

inline constexpr double kMaxMoveMeters = 50.0;

/// Shortest decimal text that reads back to the same double.
std::string format_number(double value);

/// Parses one line of the canonical command grammar (docs/command_grammar.md).
/// Verbs and names are case-insensitive; the result renders canonically.
Command parse_command(std::string_view text);
std::string render_command(const Command& cmd);

/// The first per-command invariant the command breaks, if any.
std::optional<std::string> command_violation(const Command& cmd);

bool is_identifier(std::string_view s);

// ---------------------------------------------------------------------------
// Machine-language vectors
// ---------------------------------------------------------------------------

struct MlvConstraints {
  std::size_t l_min = 3;
  std::size_t l_max = 7;

  bool valid() const { return l_min >= 1 && l_min <= l_max; }
  friend bool operator==(const MlvConstraints&, const MlvConstraints&) = default;
};

/// A bounded command sequence dispatched as one unit. `padding` counts the
/// trailing 1 s hovers added by segment_plan to reach l_min.
struct MachineLanguageVector {
  std::vector<Command> commands;
  std::size_t padding = 0;

  std::size_t size() const { return commands.size(); }
  friend bool operator==(const MachineLanguageVector&, const MachineLanguageVector&) = default;
};

enum class MlvRule { none, too_short, too_long, invalid_command };
std::string_view to_string(MlvRule rule);

struct MlvVerdict {
  MlvRule rule = MlvRule::none;
  std::size_t index = 0;  // offending command for invalid_command
  std::string detail;

  bool accepted() const { return rule == MlvRule::none; }
};

MlvVerdict validate_mlv(const MachineLanguageVector& mlv, const MlvConstraints& c);

/// Greedy split into l_max-sized segments; a short tail is padded with 1 s hovers.
std::vector<MachineLanguageVector> segment_plan(std::span<const Command> commands,
                                                const MlvConstraints& c);

/// Commands with padding removed.
std::vector<Command> strip_padding(const MachineLanguageVector& mlv);

/// Line-oriented text block, one canonical command per line.
std::string render_mlv(const MachineLanguageVector& mlv);
MachineLanguageVector parse_mlv(std::string_view block);

nlohmann::json to_json(const MachineLanguageVector& mlv);
MachineLanguageVector mlv_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Tasks, labels, plans
// ---------------------------------------------------------------------------

enum class Phrasing { explicit_, implicit };
enum class Complexity { simple, complex };
enum class Autonomy { independent, tool_assisted };

std::string_view to_string(Phrasing p);
std::string_view to_string(Complexity c);
std::string_view to_string(Autonomy a);

struct TaskRequest {
  std::string instruction;
  std::string scene;  // world id
  Phrasing phrasing = Phrasing::explicit_;
};

struct TaskLabel {
  Complexity complexity = Complexity::simple;
  Autonomy autonomy = Autonomy::independent;

  friend bool operator==(const TaskLabel&, const TaskLabel&) = default;
};

/// "SI", "ST", "CI" or "CT".
std::string to_string(const TaskLabel& label);
std::optional<TaskLabel> parse_label(std::string_view code);

struct PlanStep {
  std::string description;
  std::optional<std::string> target;  // waypoint or room id
  std::string action_hint;            // command verb or tool capability

  friend bool operator==(const PlanStep&, const PlanStep&) = default;
};

struct Plan {
  std::vector<PlanStep> steps;
  TaskLabel label;

  friend bool operator==(const Plan&, const Plan&) = default;
};

nlohmann::json to_json(const Plan& plan);

}  // namespace aerotask
