#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aerotask/geometry.hpp"

namespace aerotask {

struct NamedBox {
  std::string name;
  Box box;
};

struct NamedPoint {
  std::string name;
  Vec3 position;
};

/// Position plus heading; yaw 0 faces +x, positive yaw turns toward +y.
struct Pose {
  Vec3 position;
  double yaw_deg = 0.0;
};

/// The bounded indoor scene a task runs in. Every box and point lies inside
/// `bounds`; all names are unique across the model.
struct WorldModel {
  std::string id;
  Box bounds = kWorkspace;
  Pose start{{2.5, 2.5, 0.0}, 0.0};
  std::vector<NamedBox> rooms;
  std::vector<NamedBox> obstacles;
  std::vector<NamedBox> dangers;
  std::vector<NamedPoint> monitors;
  std::vector<NamedPoint> photo_targets;

  const NamedBox* room(std::string_view name) const;
  const NamedPoint* photo_target(std::string_view name) const;
  const NamedPoint* monitor(std::string_view name) const;

  /// Anchor point of a named room (center), monitor, photo target, or "home".
  std::optional<Vec3> waypoint(std::string_view name) const;
  bool has_waypoint(std::string_view name) const { return waypoint(name).has_value(); }
};

/// Name of the waypoint that resolves to the start position.
inline constexpr std::string_view kHomeWaypoint = "home";

/// Parses the line-oriented world description (docs/formats.md).
WorldModel load_world(std::string_view document);
WorldModel load_world_file(const std::filesystem::path& path);

/// "living_room2" -> "living room".
std::string room_type(std::string_view room_name);

/// Resolves an instruction noun phrase ("kitchen", "bedroom" x2, "front door",
/// "bedroom 2", "home") to waypoint names. `count` < 0 means "all of them".
/// Returns an empty vector when the phrase names nothing in this world.
std::vector<std::string> resolve_target_phrase(const WorldModel& world, std::string_view phrase,
                                               int count);

/// The object lines ("kind name (x, y, z)") describing every entity in the scene.
std::vector<std::string> describe_objects(const WorldModel& world);

}  // namespace aerotask
