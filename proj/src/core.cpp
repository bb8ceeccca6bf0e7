#include "aerotask/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "aerotask/error.hpp"

namespace aerotask {

namespace {

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : text) {
    if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

double parse_number(const std::string& word, std::string_view what) {
  double value = 0.0;
  const char* first = word.data();
  const char* last = word.data() + word.size();
  if (!word.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
    throw Error(Errc::MalformedSyntax, std::string(what) + " is not a decimal number: '" + word + "'");
  }
  return value;
}

void expect_arity(const std::vector<std::string>& words, std::size_t lo, std::size_t hi) {
  std::size_t args = words.size() - 1;
  if (args < lo || args > hi) {
    throw Error(Errc::MalformedSyntax,
                "'" + words[0] + "' takes " + std::to_string(lo) +
                    (lo == hi ? "" : "-" + std::to_string(hi)) + " argument(s), got " +
                    std::to_string(args));
  }
}

}  // namespace

std::string_view to_string(CommandKind kind) {
  switch (kind) {
    case CommandKind::takeoff: return "takeoff";
    case CommandKind::land: return "land";
    case CommandKind::hover: return "hover";
    case CommandKind::move: return "move";
    case CommandKind::rotate: return "rotate";
    case CommandKind::capture: return "capture";
    case CommandKind::go_to: return "goto";
    case CommandKind::invoke_tool: return "invoke_tool";
  }
  return "?";
}

std::string_view to_string(Direction dir) {
  switch (dir) {
    case Direction::forward: return "forward";
    case Direction::back: return "back";
    case Direction::left: return "left";
    case Direction::right: return "right";
    case Direction::up: return "up";
    case Direction::down: return "down";
  }
  return "?";
}

std::optional<CommandKind> command_kind_from(std::string_view verb) {
  for (int i = 0; i <= static_cast<int>(CommandKind::invoke_tool); ++i) {
    auto kind = static_cast<CommandKind>(i);
    if (to_string(kind) == verb) return kind;
  }
  return std::nullopt;
}

std::optional<Direction> direction_from(std::string_view word) {
  for (int i = 0; i <= static_cast<int>(Direction::down); ++i) {
    auto dir = static_cast<Direction>(i);
    if (to_string(dir) == word) return dir;
  }
  return std::nullopt;
}

Vec3 body_axis(double yaw_deg, Direction dir) {
  const double r = yaw_deg * M_PI / 180.0;
  const Vec3 fwd{std::cos(r), std::sin(r), 0.0};
  const Vec3 left{-std::sin(r), std::cos(r), 0.0};
  switch (dir) {
    case Direction::forward: return fwd;
    case Direction::back: return fwd * -1.0;
    case Direction::left: return left;
    case Direction::right: return left * -1.0;
    case Direction::up: return {0, 0, 1};
    case Direction::down: return {0, 0, -1};
  }
  return {};
}

std::string format_number(double value) {
  if (value == 0.0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
  if (res.ec != std::errc{}) res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

bool is_identifier(std::string_view s) {
  if (s.empty() || !(s[0] >= 'a' && s[0] <= 'z')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

std::optional<std::string> command_violation(const Command& cmd) {
  switch (cmd.kind()) {
    case CommandKind::takeoff:
    case CommandKind::land:
      return std::nullopt;
    case CommandKind::hover: {
      double s = cmd.as<Hover>()->seconds;
      if (!(std::isfinite(s) && s > 0)) return "hover duration must be > 0 s";
      return std::nullopt;
    }
    case CommandKind::move: {
      double m = cmd.as<Move>()->meters;
      if (!(std::isfinite(m) && m > 0 && m <= kMaxMoveMeters)) {
        return "move distance must be in (0, 50] m";
      }
      return std::nullopt;
    }
    case CommandKind::rotate: {
      double d = cmd.as<Rotate>()->degrees;
      if (!(std::isfinite(d) && d >= -360 && d <= 360)) {
        return "rotation must be in [-360, 360] degrees";
      }
      return std::nullopt;
    }
    case CommandKind::capture: {
      const auto& t = cmd.as<Capture>()->target;
      if (!t.empty() && !is_identifier(t)) return "capture target must be an identifier";
      return std::nullopt;
    }
    case CommandKind::go_to: {
      const auto& dest = cmd.as<GoTo>()->destination;
      if (const auto* name = std::get_if<std::string>(&dest)) {
        if (!is_identifier(*name)) return "goto waypoint must be an identifier";
      } else {
        Vec3 p = std::get<Vec3>(dest);
        if (!kWorkspace.contains(p)) return "goto point outside the 50 m workspace";
      }
      return std::nullopt;
    }
    case CommandKind::invoke_tool: {
      const auto* t = cmd.as<InvokeTool>();
      if (!is_identifier(t->tool)) return "tool name must be an identifier";
      for (const auto& [k, v] : t->args) {
        if (!is_identifier(k)) return "tool argument keys must be identifiers";
        if (v.empty() || v.find_first_of(" \t=") != std::string::npos) {
          return "tool argument values must be non-empty and contain no spaces or '='";
        }
      }
      return std::nullopt;
    }
  }
  return "unknown command";
}

Command parse_command(std::string_view text) {
  auto words = split_words(text);
  if (words.empty()) throw Error(Errc::MalformedSyntax, "empty command line");
  auto kind = command_kind_from(words[0]);
  if (!kind) throw Error(Errc::UnknownVerb, "'" + words[0] + "'");

  Command cmd;
  switch (*kind) {
    case CommandKind::takeoff:
      expect_arity(words, 0, 0);
      cmd = Command::takeoff();
      break;
    case CommandKind::land:
      expect_arity(words, 0, 0);
      cmd = Command::land();
      break;
    case CommandKind::hover:
      expect_arity(words, 1, 1);
      cmd = Command::hover(parse_number(words[1], "hover duration"));
      break;
    case CommandKind::move: {
      expect_arity(words, 2, 2);
      auto dir = direction_from(words[1]);
      if (!dir) throw Error(Errc::MalformedSyntax, "unknown direction '" + words[1] + "'");
      cmd = Command::move(*dir, parse_number(words[2], "move distance"));
      break;
    }
    case CommandKind::rotate:
      expect_arity(words, 1, 1);
      cmd = Command::rotate(parse_number(words[1], "rotation"));
      break;
    case CommandKind::capture:
      expect_arity(words, 0, 1);
      if (words.size() == 2 && !is_identifier(words[1])) {
        throw Error(Errc::MalformedSyntax, "capture target '" + words[1] + "'");
      }
      cmd = Command::capture(words.size() == 2 ? words[1] : std::string{});
      break;
    case CommandKind::go_to:
      if (words.size() == 2) {
        if (!is_identifier(words[1])) {
          throw Error(Errc::MalformedSyntax, "goto waypoint '" + words[1] + "'");
        }
        cmd = Command::go_to(words[1]);
      } else {
        expect_arity(words, 3, 3);
        cmd = Command::go_to(Vec3{parse_number(words[1], "x"), parse_number(words[2], "y"),
                                  parse_number(words[3], "z")});
      }
      break;
    case CommandKind::invoke_tool: {
      if (words.size() < 2 || !is_identifier(words[1])) {
        throw Error(Errc::MalformedSyntax, "invoke_tool needs a tool name");
      }
      std::map<std::string, std::string> args;
      for (std::size_t i = 2; i < words.size(); ++i) {
        auto eq = words[i].find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == words[i].size()) {
          throw Error(Errc::MalformedSyntax, "tool argument '" + words[i] + "' is not key=value");
        }
        auto key = words[i].substr(0, eq);
        if (!is_identifier(key) || !args.emplace(key, words[i].substr(eq + 1)).second) {
          throw Error(Errc::MalformedSyntax, "tool argument key '" + key + "'");
        }
      }
      cmd = Command::invoke(words[1], std::move(args));
      break;
    }
  }
  if (auto why = command_violation(cmd)) throw Error(Errc::BadParameter, *why);
  return cmd;
}

std::string render_command(const Command& cmd) {
  std::string out(to_string(cmd.kind()));
  switch (cmd.kind()) {
    case CommandKind::takeoff:
    case CommandKind::land:
      break;
    case CommandKind::hover:
      out += " " + format_number(cmd.as<Hover>()->seconds);
      break;
    case CommandKind::move: {
      const auto* m = cmd.as<Move>();
      out += " " + std::string(to_string(m->direction)) + " " + format_number(m->meters);
      break;
    }
    case CommandKind::rotate:
      out += " " + format_number(cmd.as<Rotate>()->degrees);
      break;
    case CommandKind::capture:
      if (!cmd.as<Capture>()->target.empty()) out += " " + cmd.as<Capture>()->target;
      break;
    case CommandKind::go_to: {
      const auto& dest = cmd.as<GoTo>()->destination;
      if (const auto* name = std::get_if<std::string>(&dest)) {
        out += " " + *name;
      } else {
        Vec3 p = std::get<Vec3>(dest);
        out += " " + format_number(p.x) + " " + format_number(p.y) + " " + format_number(p.z);
      }
      break;
    }
    case CommandKind::invoke_tool: {
      const auto* t = cmd.as<InvokeTool>();
      out += " " + t->tool;
      for (const auto& [k, v] : t->args) out += " " + k + "=" + v;
      break;
    }
  }
  return out;
}

std::string_view to_string(MlvRule rule) {
  switch (rule) {
    case MlvRule::none: return "accepted";
    case MlvRule::too_short: return "too_short";
    case MlvRule::too_long: return "too_long";
    case MlvRule::invalid_command: return "invalid_command";
  }
  return "?";
}

MlvVerdict validate_mlv(const MachineLanguageVector& mlv, const MlvConstraints& c) {
  if (mlv.size() < c.l_min) {
    return {MlvRule::too_short, 0,
            std::to_string(mlv.size()) + " < l_min=" + std::to_string(c.l_min)};
  }
  if (mlv.size() > c.l_max) {
    return {MlvRule::too_long, 0,
            std::to_string(mlv.size()) + " > l_max=" + std::to_string(c.l_max)};
  }
  for (std::size_t i = 0; i < mlv.commands.size(); ++i) {
    if (auto why = command_violation(mlv.commands[i])) {
      return {MlvRule::invalid_command, i, *why};
    }
  }
  return {};
}

std::vector<MachineLanguageVector> segment_plan(std::span<const Command> commands,
                                                const MlvConstraints& c) {
  if (commands.empty()) throw Error(Errc::EmptyInput, "nothing to segment");
  if (!c.valid()) throw Error(Errc::BadParameter, "constraints need 1 <= l_min <= l_max");
  std::vector<MachineLanguageVector> segments;
  for (std::size_t at = 0; at < commands.size(); at += c.l_max) {
    std::size_t n = std::min(c.l_max, commands.size() - at);
    MachineLanguageVector seg;
    seg.commands.assign(commands.begin() + at, commands.begin() + at + n);
    while (seg.commands.size() < c.l_min) {
      seg.commands.push_back(Command::hover(1.0));
      ++seg.padding;
    }
    segments.push_back(std::move(seg));
  }
  return segments;
}

std::vector<Command> strip_padding(const MachineLanguageVector& mlv) {
  return {mlv.commands.begin(), mlv.commands.end() - static_cast<std::ptrdiff_t>(mlv.padding)};
}

std::string render_mlv(const MachineLanguageVector& mlv) {
  std::string out;
  for (const auto& cmd : mlv.commands) out += render_command(cmd) + "\n";
  return out;
}

MachineLanguageVector parse_mlv(std::string_view block) {
  MachineLanguageVector mlv;
  std::istringstream in{std::string(block)};
  std::string line;
  while (std::getline(in, line)) {
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    mlv.commands.push_back(parse_command(line));
  }
  return mlv;
}

nlohmann::json to_json(const MachineLanguageVector& mlv) {
  nlohmann::json cmds = nlohmann::json::array();
  for (const auto& c : mlv.commands) cmds.push_back(render_command(c));
  return {{"commands", cmds}, {"length", mlv.size()}, {"padding", mlv.padding}};
}

MachineLanguageVector mlv_from_json(const nlohmann::json& j) {
  MachineLanguageVector mlv;
  try {
    for (const auto& line : j.at("commands")) {
      mlv.commands.push_back(parse_command(line.get<std::string>()));
    }
    mlv.padding = j.value("padding", std::size_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedSyntax, e.what());
  }
  if (mlv.padding > mlv.size()) throw Error(Errc::MalformedSyntax, "padding exceeds length");
  return mlv;
}

std::string_view to_string(Phrasing p) {
  return p == Phrasing::explicit_ ? "explicit" : "implicit";
}
std::string_view to_string(Complexity c) { return c == Complexity::simple ? "simple" : "complex"; }
std::string_view to_string(Autonomy a) {
  return a == Autonomy::independent ? "independent" : "tool_assisted";
}

std::string to_string(const TaskLabel& label) {
  std::string code;
  code += label.complexity == Complexity::simple ? 'S' : 'C';
  code += label.autonomy == Autonomy::independent ? 'I' : 'T';
  return code;
}

std::optional<TaskLabel> parse_label(std::string_view code) {
  if (code.size() != 2) return std::nullopt;
  TaskLabel label;
  switch (code[0]) {
    case 'S': case 's': label.complexity = Complexity::simple; break;
    case 'C': case 'c': label.complexity = Complexity::complex; break;
    default: return std::nullopt;
  }
  switch (code[1]) {
    case 'I': case 'i': label.autonomy = Autonomy::independent; break;
    case 'T': case 't': label.autonomy = Autonomy::tool_assisted; break;
    default: return std::nullopt;
  }
  return label;
}

nlohmann::json to_json(const Plan& plan) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : plan.steps) {
    nlohmann::json step{{"description", s.description}, {"action", s.action_hint}};
    if (s.target) step["target"] = *s.target;
    steps.push_back(std::move(step));
  }
  return {{"label", to_string(plan.label)}, {"steps", steps}};
}

}  // namespace aerotask
