#include <doctest.h>

#include <deque>
#include <random>

#include "aerotask/avoidance.hpp"
#include "aerotask/error.hpp"
#include "aerotask/simulator.hpp"
#include "support/oracles.hpp"

using namespace aerotask;

namespace {

using oracle::bfs_length;

bool adjacent(Cell a, Cell b) {
  return std::abs(a.x - b.x) + std::abs(a.y - b.y) + std::abs(a.z - b.z) == 1;
}

}  // namespace

TEST_CASE("identity and wall-with-gap paths") {
  OccupancyGrid g(10, 10, 1);
  auto same = plan_path(g, {3.5, 3.5, 0.5}, {3.5, 3.5, 0.5});
  CHECK(same.waypoints.size() == 1);
  CHECK(to_commands(same).empty());

  for (int y = 0; y < 10; ++y) {
    if (y != 7) g.set_occupied({5, y, 0});
  }
  auto p = plan_path(g, {1.5, 1.5, 0.5}, {8.5, 1.5, 0.5});
  CHECK(int(p.cells.size()) == bfs_length(g, {1, 1, 0}, {8, 1, 0}));
  for (std::size_t i = 1; i < p.cells.size(); ++i) CHECK(adjacent(p.cells[i - 1], p.cells[i]));
}

TEST_CASE("endpoint errors") {
  OccupancyGrid g(5, 5, 5);
  g.set_occupied({2, 2, 2});
  CHECK_THROWS_AS(plan_path(g, {2.5, 2.5, 2.5}, {0.5, 0.5, 0.5}), Error);
  CHECK_THROWS_AS(plan_path(g, {0.5, 0.5, 0.5}, {9, 9, 9}), Error);
  // Sealed shell around the goal.
  OccupancyGrid h(7, 7, 7);
  for (int z = 1; z <= 5; ++z)
    for (int y = 1; y <= 5; ++y)
      for (int x = 1; x <= 5; ++x)
        if (x == 1 || x == 5 || y == 1 || y == 5 || z == 1 || z == 5) h.set_occupied({x, y, z});
  try {
    plan_path(h, {0.5, 0.5, 0.5}, {3.5, 3.5, 3.5});
    FAIL("expected Unreachable");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::Unreachable);
  }
}

TEST_CASE("random grids match the BFS oracle") {
  std::mt19937_64 rng(21);
  int solvable = 0;
  while (solvable < 60) {
    int n = 3 + int(rng() % 10);
    OccupancyGrid g(n, n, 1 + int(rng() % n));
    std::bernoulli_distribution block(0.3);
    for (int z = 0; z < g.nz(); ++z)
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) g.set_occupied({x, y, z}, block(rng));
    Cell s{int(rng() % n), int(rng() % n), int(rng() % g.nz())};
    Cell t{int(rng() % n), int(rng() % n), int(rng() % g.nz())};
    g.set_occupied(s, false);
    g.set_occupied(t, false);
    int oracle = bfs_length(g, s, t);
    if (oracle < 0) {
      CHECK_THROWS_AS(plan_path(g, g.center(s), g.center(t)), Error);
      continue;
    }
    ++solvable;
    auto p = plan_path(g, g.center(s), g.center(t));
    CHECK(int(p.cells.size()) == oracle);
    for (const auto& c : p.cells) CHECK_FALSE(g.occupied(c));
    CHECK(p.cells == plan_path(g, g.center(s), g.center(t)).cells);
  }
}

TEST_CASE("to_commands merges and turns") {
  WaypointPath straight;
  for (int i = 0; i <= 5; ++i) straight.waypoints.push_back({0.5 + i, 0.5, 0.5});
  auto cmds = to_commands(straight);
  REQUIRE(cmds.size() == 1);
  CHECK(cmds[0] == Command::move(Direction::forward, 5));

  WaypointPath l;
  for (int i = 0; i <= 3; ++i) l.waypoints.push_back({0.5 + i, 0.5, 1.5});
  for (int j = 1; j <= 2; ++j) l.waypoints.push_back({3.5, 0.5 + j, 1.5});
  auto lc = to_commands(l);
  CHECK(lc == std::vector<Command>{Command::move(Direction::forward, 3), Command::rotate(90),
                                   Command::move(Direction::forward, 2)});

  // Forward-kinematics replay through the simulator reproduces the waypoints.
  WorldModel open;
  SimSession sim(open, SimConfig::rectangular());
  UavState st;
  st.position = {0.5, 0.5, 1.5};
  st.airborne = true;
  for (const auto& c : lc) st = step(st, c, open, sim.config()).end;
  CHECK(distance(st.position, l.waypoints.back()) < 0.5);
}

TEST_CASE("grid from world") {
  auto w = load_world("obstacle wall 10 0 0 11 50 50\n");
  auto g = OccupancyGrid::from_world(w);
  CHECK(g.nx() == 50);
  CHECK(g.occupied({0, 5, 5}));
  CHECK(g.occupied({10, 5, 5}));
  CHECK_FALSE(g.occupied({9, 5, 5}));
  CHECK_FALSE(g.occupied({11, 5, 5}));
}
