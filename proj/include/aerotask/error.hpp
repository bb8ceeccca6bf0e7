#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aerotask {

/// Every failure the library signals through exceptions carries one of these.
enum class Errc {
  // core
  UnknownVerb,
  BadParameter,
  MalformedSyntax,
  EmptyInput,
  // classifier
  UnresolvableTarget,
  AutonomousInstruction,
  DegenerateLabels,
  // planning
  NoActionFound,
  BackendUnavailable,
  UnparseablePlan,
  PlanRuleViolation,
  // execution
  NoToolForKeyword,
  UnparseableOutput,
  UnresolvedStep,
  SinkUnavailable,
  ToolFailure,
  // avoidance
  Unreachable,
  InvalidEndpoint,
  // simulator
  GeometryOutOfBounds,
  DuplicateRoomName,
  MalformedDocument,
  NotAirborne,
  UnknownTarget,
  // energy
  LevelOutOfRange,
  MisalignedStreams,
  ZeroPowerWindow,
  // tello
  UnrepresentableCommand,
  HandshakeFailed,
  LinkTimeout,
  PreconditionViolation,
  // bench
  BadLabel,
  UnknownWorld,
  CountMismatch,
  WorldLoadFailure,
  UnsupportedFormat,
  // gateway
  UnknownBackend,
  SessionBusy,
  SessionClosed,
  NotExecuting,
  UnknownSession,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace aerotask
