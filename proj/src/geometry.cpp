#include "aerotask/geometry.hpp"

#include <algorithm>
#include <array>

namespace aerotask {

double distance_point_box(Vec3 p, const Box& b) {
  Vec3 q{std::clamp(p.x, b.lo.x, b.hi.x), std::clamp(p.y, b.lo.y, b.hi.y),
         std::clamp(p.z, b.lo.z, b.hi.z)};
  return distance(p, q);
}

double distance_point_segment(Vec3 p, Vec3 a, Vec3 b) {
  Vec3 ab = b - a;
  double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

bool segment_intersects_box(Vec3 a, Vec3 b, const Box& box) {
  const std::array<double, 3> start{a.x, a.y, a.z};
  const std::array<double, 3> delta{b.x - a.x, b.y - a.y, b.z - a.z};
  const std::array<double, 3> lo{box.lo.x, box.lo.y, box.lo.z};
  const std::array<double, 3> hi{box.hi.x, box.hi.y, box.hi.z};
  double t0 = 0.0;
  double t1 = 1.0;
  for (int i = 0; i < 3; ++i) {
    if (delta[i] == 0.0) {
      if (start[i] < lo[i] || start[i] > hi[i]) return false;
      continue;
    }
    double ta = (lo[i] - start[i]) / delta[i];
    double tb = (hi[i] - start[i]) / delta[i];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

double distance_segment_box(Vec3 a, Vec3 b, const Box& box) {
  if (segment_intersects_box(a, b, box)) return 0.0;
  // Distance to a convex set along a segment is convex in the parameter.
  auto at = [&](double t) { return distance_point_box(a + (b - a) * t, box); };
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    double m1 = lo + (hi - lo) / 3;
    double m2 = hi - (hi - lo) / 3;
    if (at(m1) <= at(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  return std::min({at(0.0), at(1.0), at((lo + hi) / 2)});
}

}  // namespace aerotask
