#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "aerotask/core.hpp"

namespace aerotask {
struct WorldModel;
}

/// Fixed English normalization and the controlled instruction grammar shared by
/// the classifier, the planner and the reference backend.
namespace aerotask::lexicon {

/// Bumped whenever the stopword list, lemma table or verb table changes.
inline constexpr std::string_view kVersion = "lexicon-1";

struct Token {
  std::string text;  // lowercase surface form
  std::string lemma;
  bool is_number = false;
  double value = 0.0;
  bool is_separator = false;  // , . ; : ! ?
};

std::vector<Token> tokenize(std::string_view text);

bool is_stopword(std::string_view word);
std::string lemmatize(std::string_view word);

/// Lowercase, stopword-free, lemmatized content tokens.
std::set<std::string> extract_keywords(std::string_view instruction);

enum class ActionKind { takeoff, land, hover, move, rotate, capture, go_to, search, avoid, track };
std::string_view to_string(ActionKind kind);

/// A noun phrase naming one or more scene entities. count < 0 means "all".
struct TargetPhrase {
  std::string phrase;
  int count = 1;
  friend bool operator==(const TargetPhrase&, const TargetPhrase&) = default;
};

struct Action {
  ActionKind kind = ActionKind::hover;
  Direction direction = Direction::forward;  // move
  std::optional<double> amount;              // meters, seconds or degrees
  std::optional<TargetPhrase> target;
  friend bool operator==(const Action&, const Action&) = default;
};

struct ParsedInstruction {
  std::vector<Action> actions;
  std::vector<TargetPhrase> targets;  // every target phrase in order of mention
};

ParsedInstruction parse_instruction(std::string_view text);

/// One atomic step after plural targets are expanded into individual names.
struct ResolvedAction {
  ActionKind kind = ActionKind::hover;
  Direction direction = Direction::forward;
  double amount = 0.0;
  std::optional<std::string> target;  // waypoint name
};

/// Expands targets against the world. Throws UnresolvableTarget for phrases the
/// world lacks and AutonomousInstruction for searches without a named target.
std::vector<ResolvedAction> resolve_actions(const ParsedInstruction& parsed,
                                            const WorldModel& world);

/// Action verbs in order, with targets expanded by their stated count only.
std::vector<ActionKind> action_sequence(const ParsedInstruction& parsed);

/// Default amounts when the instruction omits them.
inline constexpr double kDefaultMoveMeters = 1.0;
inline constexpr double kDefaultHoverSeconds = 2.0;
inline constexpr double kDefaultTurnDegrees = 90.0;

}  // namespace aerotask::lexicon
