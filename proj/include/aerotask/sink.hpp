#pragma once

#include <array>
#include <string>
#include <vector>

#include "aerotask/core.hpp"
#include "aerotask/world.hpp"

namespace aerotask {

using MotorLevels = std::array<double, 4>;

/// One fixed-step sample; `velocity` is the mean over the step ending at `t`.
struct TelemetryPoint {
  double t = 0.0;
  Vec3 position;
  double yaw_deg = 0.0;
  Vec3 velocity;
  MotorLevels motors{};
};

struct PhotoEvent {
  std::string target;
  bool achieved = false;
  double t = 0.0;
  Vec3 position;
};

struct CommandAck {
  std::size_t index = 0;
  bool ok = false;
  std::string detail;  // vehicle response or failure cause
};

struct SegmentOutcome {
  std::vector<CommandAck> acks;
  bool ok = false;
  std::string cause;
  std::vector<TelemetryPoint> telemetry;
  std::vector<PhotoEvent> photos;
};

/// Accepts validated segments and acknowledges each command in order. A sink
/// stops at the first failed command and reports the rest as unsent.
class CommandSink {
 public:
  virtual ~CommandSink() = default;
  virtual bool ready() const = 0;
  virtual SegmentOutcome dispatch(const MachineLanguageVector& mlv) = 0;
  virtual Pose pose() const = 0;
  /// Emergency landing after an abort or a failed link.
  virtual void failsafe() = 0;
};

}  // namespace aerotask
