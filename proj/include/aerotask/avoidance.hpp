#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "aerotask/core.hpp"
#include "aerotask/world.hpp"

namespace aerotask {

struct Cell {
  int x = 0;
  int y = 0;
  int z = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Boolean voxel map with cubic cells of side `resolution` starting at `origin`.
class OccupancyGrid {
 public:
  OccupancyGrid(int nx, int ny, int nz, double resolution = 1.0, Vec3 origin = {});

  /// Cells covering the world bounds; a cell is occupied when its interior
  /// overlaps an obstacle interior. The outer layer is always occupied.
  static OccupancyGrid from_world(const WorldModel& world, double resolution = 1.0);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nz() const { return nz_; }
  double resolution() const { return res_; }
  Vec3 origin() const { return origin_; }

  bool in_bounds(Cell c) const {
    return c.x >= 0 && c.y >= 0 && c.z >= 0 && c.x < nx_ && c.y < ny_ && c.z < nz_;
  }
  bool occupied(Cell c) const { return occ_[index(c)] != 0; }
  void set_occupied(Cell c, bool value = true) { occ_[index(c)] = value ? 1 : 0; }

  Vec3 center(Cell c) const;
  Box cell_box(Cell c) const;
  std::optional<Cell> cell_of(Vec3 p) const;

  std::size_t index(Cell c) const {
    return (static_cast<std::size_t>(c.z) * ny_ + c.y) * nx_ + c.x;
  }

 private:
  int nx_, ny_, nz_;
  double res_;
  Vec3 origin_;
  std::vector<std::uint8_t> occ_;
};

struct WaypointPath {
  std::vector<Vec3> waypoints;  // cell centers, consecutive ones 6-adjacent
  std::vector<Cell> cells;
};

/// Neighbor expansion order, also the tie-break order.
inline constexpr Cell kNeighborSteps[6] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                                           {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};

/// Shortest 6-connected path by A* with the Manhattan heuristic.
/// Throws InvalidEndpoint or Unreachable.
WaypointPath plan_path(const OccupancyGrid& grid, Vec3 start, Vec3 goal);

/// Rotate-then-move commands flying the path from heading `initial_yaw_deg`
/// (0 faces +x). Collinear hops merge; vertical hops become move up/down.
std::vector<Command> to_commands(const WaypointPath& path, double initial_yaw_deg = 0.0);

/// Signed heading change in (-180, 180].
double normalize_degrees(double deg);

}  // namespace aerotask
