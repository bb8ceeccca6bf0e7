#include "aerotask/error.hpp"

namespace aerotask {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::UnknownVerb: return "UnknownVerb";
    case Errc::BadParameter: return "BadParameter";
    case Errc::MalformedSyntax: return "MalformedSyntax";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::UnresolvableTarget: return "UnresolvableTarget";
    case Errc::AutonomousInstruction: return "AutonomousInstruction";
    case Errc::DegenerateLabels: return "DegenerateLabels";
    case Errc::NoActionFound: return "NoActionFound";
    case Errc::BackendUnavailable: return "BackendUnavailable";
    case Errc::UnparseablePlan: return "UnparseablePlan";
    case Errc::PlanRuleViolation: return "PlanRuleViolation";
    case Errc::NoToolForKeyword: return "NoToolForKeyword";
    case Errc::UnparseableOutput: return "UnparseableOutput";
    case Errc::UnresolvedStep: return "UnresolvedStep";
    case Errc::SinkUnavailable: return "SinkUnavailable";
    case Errc::ToolFailure: return "ToolFailure";
    case Errc::Unreachable: return "Unreachable";
    case Errc::InvalidEndpoint: return "InvalidEndpoint";
    case Errc::GeometryOutOfBounds: return "GeometryOutOfBounds";
    case Errc::DuplicateRoomName: return "DuplicateRoomName";
    case Errc::MalformedDocument: return "MalformedDocument";
    case Errc::NotAirborne: return "NotAirborne";
    case Errc::UnknownTarget: return "UnknownTarget";
    case Errc::LevelOutOfRange: return "LevelOutOfRange";
    case Errc::MisalignedStreams: return "MisalignedStreams";
    case Errc::ZeroPowerWindow: return "ZeroPowerWindow";
    case Errc::UnrepresentableCommand: return "UnrepresentableCommand";
    case Errc::HandshakeFailed: return "HandshakeFailed";
    case Errc::LinkTimeout: return "LinkTimeout";
    case Errc::PreconditionViolation: return "PreconditionViolation";
    case Errc::BadLabel: return "BadLabel";
    case Errc::UnknownWorld: return "UnknownWorld";
    case Errc::CountMismatch: return "CountMismatch";
    case Errc::WorldLoadFailure: return "WorldLoadFailure";
    case Errc::UnsupportedFormat: return "UnsupportedFormat";
    case Errc::UnknownBackend: return "UnknownBackend";
    case Errc::SessionBusy: return "SessionBusy";
    case Errc::SessionClosed: return "SessionClosed";
    case Errc::NotExecuting: return "NotExecuting";
    case Errc::UnknownSession: return "UnknownSession";
  }
  return "Unknown";
}

}  // namespace aerotask
