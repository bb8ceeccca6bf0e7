#pragma once

// Independent reference computations shared by unit and acceptance tests.

#include <cmath>
#include <deque>
#include <vector>

#include "aerotask/avoidance.hpp"
#include "aerotask/classifier.hpp"
#include "aerotask/world.hpp"

namespace oracle {

// Breadth-first shortest path over 6-neighbour cells; cell count of the path or -1.
inline int bfs_length(const aerotask::OccupancyGrid& g, aerotask::Cell s, aerotask::Cell t) {
  using aerotask::Cell;
  if (!g.in_bounds(s) || !g.in_bounds(t) || g.occupied(s) || g.occupied(t)) return -1;
  std::vector<int> dist(static_cast<std::size_t>(g.nx()) * g.ny() * g.nz(), -1);
  std::deque<Cell> q{s};
  dist[g.index(s)] = 1;
  while (!q.empty()) {
    Cell c = q.front();
    q.pop_front();
    if (c == t) return dist[g.index(c)];
    const int d[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    for (auto& step : d) {
      Cell n{c.x + step[0], c.y + step[1], c.z + step[2]};
      if (!g.in_bounds(n) || g.occupied(n) || dist[g.index(n)] >= 0) continue;
      dist[g.index(n)] = dist[g.index(c)] + 1;
      q.push_back(n);
    }
  }
  return -1;
}

inline bool reachable(const aerotask::WorldModel& w, aerotask::Vec3 from, aerotask::Vec3 to) {
  const auto g = aerotask::OccupancyGrid::from_world(w);
  auto s = g.cell_of(from);
  auto t = g.cell_of(to);
  return s && t && bfs_length(g, *s, *t) > 0;
}

// Straight segment touches an obstacle (closed boxes), sampled every millimetre.
inline bool segment_blocked(const aerotask::WorldModel& w, aerotask::Vec3 a, aerotask::Vec3 b) {
  const double len = aerotask::distance(a, b);
  const int n = std::max(1, static_cast<int>(std::ceil(len / 1e-3)));
  for (int i = 0; i <= n; ++i) {
    const auto p = a + (b - a) * (double(i) / n);
    for (const auto& o : w.obstacles) {
      if (p.x >= o.box.lo.x && p.x <= o.box.hi.x && p.y >= o.box.lo.y && p.y <= o.box.hi.y &&
          p.z >= o.box.lo.z && p.z <= o.box.hi.z) {
        return true;
      }
    }
  }
  return false;
}

// Straight-line route of an instruction from the ground start is obstructed
// while the grid still connects every leg.
inline bool corridor_blocked(const aerotask::WorldModel& w, std::string_view instruction) {
  auto pts = aerotask::task_corridor(instruction, w);
  pts.insert(pts.begin(), w.start.position);
  bool blocked = false;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (segment_blocked(w, pts[i - 1], pts[i])) {
      blocked = true;
      if (i > 1 && !reachable(w, pts[i - 1], pts[i])) return false;
    }
  }
  return blocked;
}

}  // namespace oracle
