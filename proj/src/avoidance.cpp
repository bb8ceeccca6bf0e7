#include "aerotask/avoidance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <queue>
#include <tuple>

#include "aerotask/error.hpp"

namespace aerotask {

OccupancyGrid::OccupancyGrid(int nx, int ny, int nz, double resolution, Vec3 origin)
    : nx_(nx), ny_(ny), nz_(nz), res_(resolution), origin_(origin) {
  if (nx <= 0 || ny <= 0 || nz <= 0 || !(resolution > 0)) {
    throw Error(Errc::BadParameter, "grid dimensions and resolution must be positive");
  }
  occ_.assign(static_cast<std::size_t>(nx) * ny * nz, 0);
}

OccupancyGrid OccupancyGrid::from_world(const WorldModel& world, double resolution) {
  const Vec3 size = world.bounds.hi - world.bounds.lo;
  auto cells = [&](double extent) { return static_cast<int>(std::ceil(extent / resolution - 1e-9)); };
  OccupancyGrid g(cells(size.x), cells(size.y), cells(size.z), resolution, world.bounds.lo);
  for (int z = 0; z < g.nz_; ++z) {
    for (int y = 0; y < g.ny_; ++y) {
      for (int x = 0; x < g.nx_; ++x) {
        if (x == 0 || y == 0 || z == 0 || x == g.nx_ - 1 || y == g.ny_ - 1 || z == g.nz_ - 1) {
          g.set_occupied({x, y, z});
        }
      }
    }
  }
  for (const auto& ob : world.obstacles) {
    auto lo = [&](double v, double o) { return static_cast<int>(std::floor((v - o) / resolution)); };
    const int x0 = std::max(0, lo(ob.box.lo.x, g.origin_.x));
    const int y0 = std::max(0, lo(ob.box.lo.y, g.origin_.y));
    const int z0 = std::max(0, lo(ob.box.lo.z, g.origin_.z));
    const int x1 = std::min(g.nx_ - 1, lo(ob.box.hi.x, g.origin_.x));
    const int y1 = std::min(g.ny_ - 1, lo(ob.box.hi.y, g.origin_.y));
    const int z1 = std::min(g.nz_ - 1, lo(ob.box.hi.z, g.origin_.z));
    for (int z = z0; z <= z1; ++z) {
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          if (interiors_overlap(g.cell_box({x, y, z}), ob.box)) g.set_occupied({x, y, z});
        }
      }
    }
  }
  return g;
}

Vec3 OccupancyGrid::center(Cell c) const {
  return origin_ + Vec3{(c.x + 0.5) * res_, (c.y + 0.5) * res_, (c.z + 0.5) * res_};
}

Box OccupancyGrid::cell_box(Cell c) const {
  Vec3 lo = origin_ + Vec3{c.x * res_, c.y * res_, c.z * res_};
  return {lo, lo + Vec3{res_, res_, res_}};
}

std::optional<Cell> OccupancyGrid::cell_of(Vec3 p) const {
  Vec3 r = p - origin_;
  Cell c{static_cast<int>(std::floor(r.x / res_)), static_cast<int>(std::floor(r.y / res_)),
         static_cast<int>(std::floor(r.z / res_))};
  if (!in_bounds(c)) return std::nullopt;
  return c;
}

WaypointPath plan_path(const OccupancyGrid& grid, Vec3 start, Vec3 goal) {
  auto s = grid.cell_of(start);
  auto g = grid.cell_of(goal);
  if (!s || grid.occupied(*s)) throw Error(Errc::InvalidEndpoint, "start cell is outside or occupied");
  if (!g || grid.occupied(*g)) throw Error(Errc::InvalidEndpoint, "goal cell is outside or occupied");

  const std::size_t n = static_cast<std::size_t>(grid.nx()) * grid.ny() * grid.nz();
  constexpr int kUnseen = -1;
  std::vector<int> cost(n, kUnseen);
  std::vector<std::int64_t> parent(n, -1);
  std::vector<std::uint8_t> closed(n, 0);
  auto h = [&](Cell c) { return std::abs(c.x - g->x) + std::abs(c.y - g->y) + std::abs(c.z - g->z); };

  // (f, h, insertion sequence): lower h first reaches the goal sooner among equal f.
  using Entry = std::tuple<int, int, std::uint64_t, Cell>;
  auto cmp = [](const Entry& a, const Entry& b) {
    return std::tie(std::get<0>(a), std::get<1>(a), std::get<2>(a)) >
           std::tie(std::get<0>(b), std::get<1>(b), std::get<2>(b));
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> open(cmp);
  std::uint64_t seq = 0;
  cost[grid.index(*s)] = 0;
  open.emplace(h(*s), h(*s), seq++, *s);

  bool found = false;
  while (!open.empty()) {
    auto [f, hc, order, c] = open.top();
    open.pop();
    const std::size_t ci = grid.index(c);
    if (closed[ci]) continue;
    closed[ci] = 1;
    if (c == *g) {
      found = true;
      break;
    }
    for (const Cell& d : kNeighborSteps) {
      Cell nb{c.x + d.x, c.y + d.y, c.z + d.z};
      if (!grid.in_bounds(nb) || grid.occupied(nb)) continue;
      const std::size_t ni = grid.index(nb);
      const int ng = cost[ci] + 1;
      if (closed[ni] || (cost[ni] != kUnseen && cost[ni] <= ng)) continue;
      cost[ni] = ng;
      parent[ni] = static_cast<std::int64_t>(ci);
      open.emplace(ng + h(nb), h(nb), seq++, nb);
    }
  }
  if (!found) throw Error(Errc::Unreachable, "no free path between start and goal");

  WaypointPath path;
  auto from_index = [&](std::size_t i) {
    const int x = static_cast<int>(i % grid.nx());
    const int y = static_cast<int>((i / grid.nx()) % grid.ny());
    const int z = static_cast<int>(i / (static_cast<std::size_t>(grid.nx()) * grid.ny()));
    return Cell{x, y, z};
  };
  for (std::int64_t i = static_cast<std::int64_t>(grid.index(*g)); i >= 0; i = parent[i]) {
    path.cells.push_back(from_index(static_cast<std::size_t>(i)));
  }
  std::reverse(path.cells.begin(), path.cells.end());
  for (const Cell& c : path.cells) path.waypoints.push_back(grid.center(c));
  return path;
}

double normalize_degrees(double deg) {
  double d = std::fmod(deg, 360.0);
  if (d <= -180.0) d += 360.0;
  if (d > 180.0) d -= 360.0;
  return d;
}

std::vector<Command> to_commands(const WaypointPath& path, double initial_yaw_deg) {
  std::vector<Command> out;
  double yaw = initial_yaw_deg;
  const auto& w = path.waypoints;
  std::size_t i = 1;
  while (i < w.size()) {
    const Vec3 hop = w[i] - w[i - 1];
    std::size_t j = i + 1;
    while (j < w.size() && norm((w[j] - w[j - 1]) - hop) < 1e-9) ++j;
    const double length = norm(w[j - 1] - w[i - 1]);
    if (std::abs(hop.z) > 1e-9) {
      out.push_back(Command::move(hop.z > 0 ? Direction::up : Direction::down, length));
    } else {
      const double heading = std::atan2(hop.y, hop.x) * 180.0 / M_PI;
      const double turn = normalize_degrees(heading - yaw);
      if (std::abs(turn) > 1e-9) {
        out.push_back(Command::rotate(turn));
        yaw += turn;
      }
      out.push_back(Command::move(Direction::forward, length));
    }
    i = j;
  }
  return out;
}

}  // namespace aerotask
