#include "aerotask/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "aerotask/error.hpp"

namespace aerotask {

namespace {

enum class Phase { accelerate, cruise, decelerate };

/// Distance-versus-time for a rest-to-rest straight move.
struct Profile {
  double distance = 0.0;
  double total = 0.0;     // seconds
  double ramp = 0.0;      // seconds spent accelerating (and again decelerating)
  double peak = 0.0;      // m/s
  double accel = 0.0;

  static Profile make(double d, double v, double a) {
    Profile p;
    p.distance = d;
    if (d <= 0.0) return p;
    if (!std::isfinite(a)) {
      p.peak = v;
      p.total = d / v;
      return p;
    }
    p.accel = a;
    const double ramp_dist = v * v / (2 * a);
    if (d >= 2 * ramp_dist) {
      p.peak = v;
      p.ramp = v / a;
      p.total = d / v + v / a;
    } else {
      p.ramp = std::sqrt(d / a);
      p.peak = a * p.ramp;
      p.total = 2 * p.ramp;
    }
    return p;
  }

  double at(double t) const {
    if (t >= total) return distance;
    if (t <= 0.0) return 0.0;
    if (ramp == 0.0) return peak * t;
    if (t < ramp) return 0.5 * accel * t * t;
    if (t > total - ramp) {
      const double r = total - t;
      return distance - 0.5 * accel * r * r;
    }
    return 0.5 * accel * ramp * ramp + peak * (t - ramp);
  }

  Phase phase(double t) const {
    if (ramp == 0.0) return Phase::cruise;
    if (t < ramp) return Phase::accelerate;
    if (t > total - ramp) return Phase::decelerate;
    return Phase::cruise;
  }
};

std::int64_t ticks_for(double seconds, double dt) {
  if (seconds <= 0.0) return 0;
  return static_cast<std::int64_t>(std::ceil(seconds / dt - 1e-9));
}

// Index pairs into MotorLevels (motor k is index k-1).
constexpr std::array<int, 2> kFront{0, 2};
constexpr std::array<int, 2> kRear{1, 3};
constexpr std::array<int, 2> kRightSide{0, 3};
constexpr std::array<int, 2> kLeftSide{1, 2};
constexpr std::array<int, 2> kCwSpinning{2, 3};
constexpr std::array<int, 2> kCcwSpinning{0, 1};

MotorLevels baseline(const SimConfig& cfg) {
  return {cfg.hover_level, cfg.hover_level, cfg.hover_level, cfg.hover_level};
}

MotorLevels boost_pair(const SimConfig& cfg, std::array<int, 2> pair) {
  MotorLevels m = baseline(cfg);
  for (int i : pair) m[i] += cfg.maneuver_increment / 2;
  return m;
}

MotorLevels boost_all(const SimConfig& cfg, double sign) {
  MotorLevels m = baseline(cfg);
  for (double& v : m) v += sign * cfg.maneuver_increment / 4;
  return m;
}

MotorLevels clamp(MotorLevels m) {
  for (double& v : m) v = std::clamp(v, 0.0, 1.0);
  return m;
}

/// Mixer output for a translational maneuver.
MotorLevels translate_mix(const SimConfig& cfg, std::optional<Direction> dir, Phase phase) {
  if (phase == Phase::cruise) return baseline(cfg);
  const bool acc = phase == Phase::accelerate;
  if (!dir) return boost_all(cfg, 1.0);
  switch (*dir) {
    case Direction::forward: return boost_pair(cfg, acc ? kRear : kFront);
    case Direction::back: return boost_pair(cfg, acc ? kFront : kRear);
    case Direction::left: return boost_pair(cfg, acc ? kRightSide : kLeftSide);
    case Direction::right: return boost_pair(cfg, acc ? kLeftSide : kRightSide);
    case Direction::up: return boost_all(cfg, acc ? 1.0 : -1.0);
    case Direction::down: return boost_all(cfg, acc ? -1.0 : 1.0);
  }
  return baseline(cfg);
}

std::string fmt_point(Vec3 p) {
  return "(" + format_number(p.x) + ", " + format_number(p.y) + ", " + format_number(p.z) + ")";
}

std::string collision_cause(Vec3 p, const WorldModel& world) {
  for (const auto& ob : world.obstacles) {
    if (ob.box.contains(p)) return "collision with " + ob.name + " at " + fmt_point(p);
  }
  return "left the workspace at " + fmt_point(p);
}

/// Straight rest-to-rest flight from the state's position to `to`.
void fly_straight(StepResult& r, Vec3 to, std::optional<Direction> body_dir,
                  const WorldModel& world, const SimConfig& cfg) {
  const Vec3 from = r.end.position;
  const double dist = distance(from, to);
  const Profile prof = Profile::make(dist, cfg.cruise_speed, cfg.acceleration);
  const std::int64_t n = ticks_for(prof.total, cfg.dt);
  const Vec3 unit = dist > 0 ? (to - from) * (1.0 / dist) : Vec3{};
  Vec3 prev = from;
  for (std::int64_t k = 1; k <= n; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    const Vec3 pos = k == n ? to : from + unit * prof.at(t);
    TelemetryPoint s;
    s.t = static_cast<double>(r.end.ticks + 1) * cfg.dt;
    s.position = pos;
    s.yaw_deg = r.end.yaw_deg;
    s.velocity = (pos - prev) * (1.0 / cfg.dt);
    s.motors = clamp(translate_mix(cfg, body_dir, prof.phase(t - cfg.dt / 2)));
    r.samples.push_back(s);
    ++r.end.ticks;
    r.end.position = pos;
    prev = pos;
    if (check_collision(pos, world)) {
      r.ok = false;
      r.cause = collision_cause(pos, world);
      r.end.velocity = {};
      return;
    }
  }
  r.end.velocity = {};
}

void hold(StepResult& r, double seconds, const SimConfig& cfg) {
  const std::int64_t n = ticks_for(seconds, cfg.dt);
  for (std::int64_t k = 0; k < n; ++k) {
    ++r.end.ticks;
    if (!r.end.airborne) continue;
    TelemetryPoint s;
    s.t = static_cast<double>(r.end.ticks) * cfg.dt;
    s.position = r.end.position;
    s.yaw_deg = r.end.yaw_deg;
    s.motors = clamp(baseline(cfg));
    r.samples.push_back(s);
  }
}

void require_airborne(const UavState& s, const Command& cmd) {
  if (!s.airborne) {
    throw Error(Errc::NotAirborne, "'" + render_command(cmd) + "' needs the vehicle airborne");
  }
}

}  // namespace

UavState initial_state(const WorldModel& world) {
  UavState s;
  s.position = world.start.position;
  s.yaw_deg = world.start.yaw_deg;
  return s;
}

bool check_collision(Vec3 position, const WorldModel& world) {
  if (!world.bounds.contains(position)) return true;
  for (const auto& ob : world.obstacles) {
    if (ob.box.contains(position)) return true;
  }
  return false;
}

double travel_time(double distance, const SimConfig& cfg) {
  return Profile::make(distance, cfg.cruise_speed, cfg.acceleration).total;
}

PhotoEvent capture(const UavState& state, std::string_view target, const WorldModel& world,
                   const SimConfig& cfg) {
  if (!state.airborne) throw Error(Errc::NotAirborne, "capture needs the vehicle airborne");
  PhotoEvent ev;
  ev.target = std::string(target);
  ev.t = state.clock(cfg);
  ev.position = state.position;
  if (target.empty()) {
    ev.achieved = true;
    return ev;
  }
  if (const auto* room = world.room(target)) {
    ev.achieved = room->box.contains(state.position);
    return ev;
  }
  const NamedPoint* point = world.photo_target(target);
  if (!point) point = world.monitor(target);
  if (!point) throw Error(Errc::UnknownTarget, "no capture target '" + std::string(target) + "'");
  ev.achieved = distance(state.position, point->position) <= cfg.photo_radius;
  for (const auto& ob : world.obstacles) {
    if (!ev.achieved) break;
    if (segment_intersects_box(state.position, point->position, ob.box)) ev.achieved = false;
  }
  return ev;
}

StepResult step(const UavState& state, const Command& cmd, const WorldModel& world,
                const SimConfig& cfg) {
  StepResult r;
  r.end = state;
  switch (cmd.kind()) {
    case CommandKind::takeoff: {
      if (state.airborne) {
        r.ok = false;
        r.cause = "already airborne";
        return r;
      }
      r.end.airborne = true;
      Vec3 to = state.position + Vec3{0, 0, cfg.takeoff_altitude};
      fly_straight(r, to, Direction::up, world, cfg);
      return r;
    }
    case CommandKind::land: {
      require_airborne(state, cmd);
      Vec3 to = state.position;
      to.z = world.bounds.lo.z;
      fly_straight(r, to, Direction::down, world, cfg);
      if (r.ok) r.end.airborne = false;
      return r;
    }
    case CommandKind::hover:
      hold(r, cmd.as<Hover>()->seconds, cfg);
      return r;
    case CommandKind::move: {
      require_airborne(state, cmd);
      const auto* m = cmd.as<Move>();
      fly_straight(r, state.position + body_axis(state.yaw_deg, m->direction) * m->meters,
                   m->direction, world, cfg);
      return r;
    }
    case CommandKind::rotate: {
      require_airborne(state, cmd);
      const double deg = cmd.as<Rotate>()->degrees;
      const std::int64_t n = ticks_for(std::abs(deg) / cfg.yaw_rate, cfg.dt);
      const MotorLevels mix = clamp(boost_pair(cfg, deg > 0 ? kCwSpinning : kCcwSpinning));
      for (std::int64_t k = 1; k <= n; ++k) {
        ++r.end.ticks;
        TelemetryPoint s;
        s.t = static_cast<double>(r.end.ticks) * cfg.dt;
        s.position = state.position;
        s.yaw_deg = k == n ? state.yaw_deg + deg
                           : state.yaw_deg + std::copysign(
                                                 std::min(std::abs(deg), cfg.yaw_rate * k * cfg.dt),
                                                 deg);
        s.motors = mix;
        r.samples.push_back(s);
      }
      r.end.yaw_deg = state.yaw_deg + deg;
      return r;
    }
    case CommandKind::capture: {
      require_airborne(state, cmd);
      const std::string& target = cmd.as<Capture>()->target;
      if (!target.empty() && !world.room(target) && !world.photo_target(target) &&
          !world.monitor(target)) {
        throw Error(Errc::UnknownTarget, "no capture target '" + target + "'");
      }
      hold(r, cfg.capture_seconds, cfg);
      r.photo = capture(r.end, target, world, cfg);
      return r;
    }
    case CommandKind::go_to: {
      require_airborne(state, cmd);
      const auto& dest = cmd.as<GoTo>()->destination;
      Vec3 to;
      if (const auto* name = std::get_if<std::string>(&dest)) {
        auto wp = world.waypoint(*name);
        if (!wp) throw Error(Errc::UnknownTarget, "no waypoint '" + *name + "'");
        to = *wp;
        to.z = state.position.z;
      } else {
        to = std::get<Vec3>(dest);
      }
      fly_straight(r, to, std::nullopt, world, cfg);
      return r;
    }
    case CommandKind::invoke_tool:
      r.ok = false;
      r.cause = "tool invocations are expanded before dispatch";
      return r;
  }
  return r;
}

SimSession::SimSession(WorldModel world, SimConfig cfg)
    : world_(std::move(world)), cfg_(cfg), state_(initial_state(world_)) {}

double SimSession::flight_time() const {
  return static_cast<double>(trajectory_.size()) * cfg_.dt;
}

StepResult SimSession::run(const Command& cmd) {
  StepResult r;
  try {
    r = step(state_, cmd, world_, cfg_);
  } catch (const Error& e) {
    r.end = state_;
    r.ok = false;
    r.cause = e.what();
  }
  executed_.push_back(cmd);
  state_ = r.end;
  trajectory_.insert(trajectory_.end(), r.samples.begin(), r.samples.end());
  if (r.photo) photos_.push_back(*r.photo);
  if (!r.ok && r.cause.rfind("collision", 0) == 0) collided_ = true;
  return r;
}

void SimSession::emergency_land() {
  if (!state_.airborne) return;
  StepResult r = run(Command::land());
  if (!r.ok) state_.airborne = false;
}

SegmentOutcome SimulatorSink::dispatch(const MachineLanguageVector& mlv) {
  SegmentOutcome out;
  out.ok = true;
  for (std::size_t i = 0; i < mlv.commands.size(); ++i) {
    StepResult r = session_.run(mlv.commands[i]);
    out.acks.push_back({i, r.ok, r.ok ? "ok" : r.cause});
    out.telemetry.insert(out.telemetry.end(), r.samples.begin(), r.samples.end());
    if (r.photo) out.photos.push_back(*r.photo);
    if (!r.ok) {
      out.ok = false;
      out.cause = "command " + std::to_string(i + 1) + " (" + render_command(mlv.commands[i]) +
                  "): " + r.cause;
      break;
    }
  }
  return out;
}

Pose SimulatorSink::pose() const { return {session_.state().position, session_.state().yaw_deg}; }

void SimulatorSink::failsafe() {
  session_.emergency_land();
}

std::string export_samples_csv(const std::vector<TelemetryPoint>& samples) {
  std::ostringstream out;
  out << "t,x,y,z,yaw,vx,vy,vz,n1,n2,n3,n4\n";
  for (const auto& s : samples) {
    out << format_number(s.t) << ',' << format_number(s.position.x) << ','
        << format_number(s.position.y) << ',' << format_number(s.position.z) << ','
        << format_number(s.yaw_deg) << ',' << format_number(s.velocity.x) << ','
        << format_number(s.velocity.y) << ',' << format_number(s.velocity.z);
    for (double m : s.motors) out << ',' << format_number(m);
    out << '\n';
  }
  return out.str();
}

}  // namespace aerotask
