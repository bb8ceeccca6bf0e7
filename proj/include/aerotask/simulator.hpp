#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "aerotask/core.hpp"
#include "aerotask/sink.hpp"
#include "aerotask/world.hpp"

namespace aerotask {

/// Kinematic model and mixer constants. Motor numbering follows the quad-X
/// convention: 1 front-right, 2 rear-left, 3 front-left, 4 rear-right;
/// 1 and 2 spin counter-clockwise.
struct SimConfig {
  double dt = 0.02;
  double cruise_speed = 1.0;   // m/s
  double max_speed = 2.0;      // m/s
  double acceleration = 2.0;   // m/s^2; infinity gives a rectangular profile
  double yaw_rate = 90.0;      // deg/s
  double takeoff_altitude = 1.5;
  double capture_seconds = 1.0;
  double hover_level = 0.5;
  double maneuver_increment = 0.1;  // total extra level while maneuvering
  double photo_radius = 2.0;

  static SimConfig rectangular() {
    SimConfig c;
    c.acceleration = std::numeric_limits<double>::infinity();
    return c;
  }
};

struct UavState {
  Vec3 position;
  double yaw_deg = 0.0;
  Vec3 velocity;
  bool airborne = false;
  std::int64_t ticks = 0;

  double clock(const SimConfig& cfg) const { return static_cast<double>(ticks) * cfg.dt; }
};

UavState initial_state(const WorldModel& world);

struct StepResult {
  UavState end;
  std::vector<TelemetryPoint> samples;  // one per airborne tick
  bool ok = true;
  std::string cause;
  std::optional<PhotoEvent> photo;
};

/// Executes one command. Throws NotAirborne for motion while grounded and
/// UnknownTarget for waypoints the world lacks; a collision or a takeoff while
/// airborne is a failed outcome.
StepResult step(const UavState& state, const Command& cmd, const WorldModel& world,
                const SimConfig& cfg);

/// Inside any closed obstacle box, or outside the world bounds.
bool check_collision(Vec3 position, const WorldModel& world);

/// Photo verdict at the current state. Throws NotAirborne, UnknownTarget.
PhotoEvent capture(const UavState& state, std::string_view target, const WorldModel& world,
                   const SimConfig& cfg);

/// Time a straight move of `distance` meters takes under the config's profile.
double travel_time(double distance, const SimConfig& cfg);

/// A mutable flight over one world. Owns the full sample history.
class SimSession {
 public:
  SimSession(WorldModel world, SimConfig cfg = {});

  const WorldModel& world() const { return world_; }
  const SimConfig& config() const { return cfg_; }
  const UavState& state() const { return state_; }
  const std::vector<TelemetryPoint>& trajectory() const { return trajectory_; }
  const std::vector<PhotoEvent>& photos() const { return photos_; }
  const std::vector<Command>& executed() const { return executed_; }
  bool collided() const { return collided_; }
  double flight_time() const;

  /// Runs one command; errors become failed results.
  StepResult run(const Command& cmd);
  /// Lands from wherever the vehicle is; a blocked descent still ends grounded.
  void emergency_land();

 private:
  WorldModel world_;
  SimConfig cfg_;
  UavState state_;
  std::vector<TelemetryPoint> trajectory_;
  std::vector<PhotoEvent> photos_;
  std::vector<Command> executed_;
  bool collided_ = false;
};

class SimulatorSink : public CommandSink {
 public:
  explicit SimulatorSink(SimSession& session) : session_(session) {}

  bool ready() const override { return true; }
  SegmentOutcome dispatch(const MachineLanguageVector& mlv) override;
  Pose pose() const override;
  void failsafe() override;

 private:
  SimSession& session_;
};

/// "t,x,y,z,yaw,vx,vy,vz,n1,n2,n3,n4" with a header line.
std::string export_samples_csv(const std::vector<TelemetryPoint>& samples);

}  // namespace aerotask
