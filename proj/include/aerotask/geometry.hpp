#pragma once

#include <cmath>
#include <compare>

namespace aerotask {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
  friend constexpr Vec3 operator*(double s, Vec3 a) { return a * s; }
  friend constexpr bool operator==(Vec3, Vec3) = default;
};

constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
inline double distance(Vec3 a, Vec3 b) { return norm(a - b); }

/// Closed axis-aligned box [lo, hi].
struct Box {
  Vec3 lo;
  Vec3 hi;

  constexpr Vec3 center() const {
    return {(lo.x + hi.x) / 2, (lo.y + hi.y) / 2, (lo.z + hi.z) / 2};
  }
  constexpr bool contains(Vec3 p) const {
    return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z &&
           p.z <= hi.z;
  }
  constexpr bool contains(const Box& b) const { return contains(b.lo) && contains(b.hi); }
  constexpr bool well_formed() const { return lo.x < hi.x && lo.y < hi.y && lo.z < hi.z; }
  friend constexpr bool operator==(const Box&, const Box&) = default;
};

/// The fixed flight volume: 50 m on each axis from the origin.
inline constexpr Box kWorkspace{{0, 0, 0}, {50, 50, 50}};

/// Overlap of the open interiors (touching faces do not count).
constexpr bool interiors_overlap(const Box& a, const Box& b) {
  return a.lo.x < b.hi.x && b.lo.x < a.hi.x && a.lo.y < b.hi.y && b.lo.y < a.hi.y &&
         a.lo.z < b.hi.z && b.lo.z < a.hi.z;
}

double distance_point_box(Vec3 p, const Box& b);
double distance_point_segment(Vec3 p, Vec3 a, Vec3 b);
/// Minimum distance between segment [a,b] and the closed box.
double distance_segment_box(Vec3 a, Vec3 b, const Box& box);
/// True iff the closed segment touches the closed box (slab test).
bool segment_intersects_box(Vec3 a, Vec3 b, const Box& box);

}  // namespace aerotask
