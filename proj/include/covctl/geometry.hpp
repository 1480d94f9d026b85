#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "covctl/rng.hpp"
#include "covctl/vec2.hpp"

namespace covctl {

inline constexpr double kBoundaryTol = 1e-9;

/// Closest point on the boundary of a polygon, together with everything the
/// potentials and observations need: the offset p - P(p), its length, which
/// side of the boundary p lies on, the projecting edge and a unit direction
/// that falls back to the edge outward normal when p sits on the boundary.
struct BoundaryProjection {
  Vec2 point;        // P(p), on some polygon edge
  Vec2 offset;       // p - P(p)
  double distance;   // ||offset||
  bool inside;       // closed-region membership of p
  std::size_t edge;  // index of the projecting edge (lowest on ties)
  Vec2 dir;          // offset/distance, or edge outward normal if distance ~ 0

  double indicator() const { return inside ? -1.0 : 1.0; }
};

namespace detail {

inline Vec2 closest_point_on_segment(const Vec2& a, const Vec2& b,
                                     const Vec2& p) {
  const Vec2 ab = b - a;
  const double len2 = ab.squared_norm();
  if (len2 <= 0.0) return a;
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return a + ab * t;
}

inline double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

/// Whether segments [a,b] and [c,d] share any point (touching counts).
inline bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c,
                               const Vec2& d) {
  const double d1 = cross(c, d, a);
  const double d2 = cross(c, d, b);
  const double d3 = cross(a, b, c);
  const double d4 = cross(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  if (d1 == 0 && on_segment(c, d, a)) return true;
  if (d2 == 0 && on_segment(c, d, b)) return true;
  if (d3 == 0 && on_segment(a, b, c)) return true;
  if (d4 == 0 && on_segment(a, b, d)) return true;
  return false;
}

}  // namespace detail

/// Simple polygon with counter-clockwise vertices; models a compact planar
/// domain. Construction validates vertex count, orientation, positive area
/// and simplicity (O(k^2) pairwise edge check).
class Polygon {
 public:
  explicit Polygon(std::vector<Vec2> vertices) : verts_(std::move(vertices)) {
    validate();
    double twice_area = 0.0;
    bb_min_ = bb_max_ = verts_.front();
    for (std::size_t i = 0; i < verts_.size(); ++i) {
      const Vec2& a = verts_[i];
      const Vec2& b = verts_[(i + 1) % verts_.size()];
      twice_area += a.x * b.y - b.x * a.y;
      bb_min_.x = std::min(bb_min_.x, a.x);
      bb_min_.y = std::min(bb_min_.y, a.y);
      bb_max_.x = std::max(bb_max_.x, a.x);
      bb_max_.y = std::max(bb_max_.y, a.y);
    }
    area_ = 0.5 * twice_area;
    if (area_ <= kBoundaryTol)
      throw std::invalid_argument(
          "polygon must have positive area and CCW vertex order");
  }

  const std::vector<Vec2>& vertices() const { return verts_; }
  std::size_t size() const { return verts_.size(); }

  /// Shoelace area (positive, vertices are CCW).
  double area() const { return area_; }

  Vec2 bbox_min() const { return bb_min_; }
  Vec2 bbox_max() const { return bb_max_; }

  Vec2 edge_start(std::size_t e) const { return verts_[e]; }
  Vec2 edge_end(std::size_t e) const { return verts_[(e + 1) % verts_.size()]; }

  /// Outward unit normal of edge e. For CCW order the interior lies to the
  /// left of the edge direction, so the outward normal is (dy, -dx).
  Vec2 edge_outward_normal(std::size_t e) const {
    const Vec2 d = edge_end(e) - edge_start(e);
    const double len = d.norm();
    return {d.y / len, -d.x / len};
  }

  /// Closed-region membership; points within kBoundaryTol of the boundary
  /// count as inside.
  bool contains(const Vec2& p) const {
    if (distance_to_boundary(p) <= kBoundaryTol) return true;
    return winding_inside(p);
  }

  /// Minimum over all edges; ties broken by lowest edge index.
  BoundaryProjection project_to_boundary(const Vec2& p) const {
    BoundaryProjection best;
    best.distance = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < verts_.size(); ++e) {
      const Vec2 q = detail::closest_point_on_segment(edge_start(e),
                                                      edge_end(e), p);
      const double d = distance(p, q);
      if (d < best.distance) {
        best.distance = d;
        best.point = q;
        best.edge = e;
      }
    }
    best.offset = p - best.point;
    best.inside = best.distance <= kBoundaryTol || winding_inside(p);
    best.dir = best.distance > kBoundaryTol
                   ? best.offset * (1.0 / best.distance)
                   : edge_outward_normal(best.edge);
    return best;
  }

  /// Distance to the boundary, negative inside the (closed) region.
  double signed_distance(const Vec2& p) const {
    const BoundaryProjection proj = project_to_boundary(p);
    return proj.indicator() * proj.distance;
  }

  double distance_to_boundary(const Vec2& p) const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < verts_.size(); ++e) {
      const Vec2 q = detail::closest_point_on_segment(edge_start(e),
                                                      edge_end(e), p);
      best = std::min(best, distance(p, q));
    }
    return best;
  }

 private:
  void validate() const {
    if (verts_.size() < 3)
      throw std::invalid_argument("polygon needs at least 3 vertices");
    for (const Vec2& v : verts_)
      if (!v.finite())
        throw std::invalid_argument("polygon vertices must be finite");
    const std::size_t m = verts_.size();
    for (std::size_t i = 0; i < m; ++i)
      if (distance(verts_[i], verts_[(i + 1) % m]) <= kBoundaryTol)
        throw std::invalid_argument("polygon has a degenerate edge");
    // Non-adjacent edge pairs must be disjoint.
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        const bool adjacent = (j == i + 1) || (i == 0 && j == m - 1);
        if (adjacent) continue;
        if (detail::segments_intersect(verts_[i], verts_[(i + 1) % m],
                                       verts_[j], verts_[(j + 1) % m]))
          throw std::invalid_argument("polygon is not simple");
      }
    }
  }

  /// Even-odd ray crossing test; only meaningful away from the boundary.
  bool winding_inside(const Vec2& p) const {
    bool in = false;
    const std::size_t m = verts_.size();
    for (std::size_t i = 0, j = m - 1; i < m; j = i++) {
      const Vec2& a = verts_[i];
      const Vec2& b = verts_[j];
      if ((a.y > p.y) != (b.y > p.y) &&
          p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x)
        in = !in;
    }
    return in;
  }

  std::vector<Vec2> verts_;
  double area_;
  Vec2 bb_min_, bb_max_;
};

/// Per-agent spacing target: sqrt(area / n).
inline double coverage_radius(const Polygon& poly, std::size_t n) {
  if (n == 0) throw std::invalid_argument("coverage_radius: n must be >= 1");
  return std::sqrt(poly.area() / static_cast<double>(n));
}

/// True iff the closed ball of the given radius around center lies in the
/// domain (1e-9 slack, so exact tangency passes).
inline bool ball_in_domain(const Polygon& poly, const Vec2& center,
                           double radius) {
  if (radius < 0.0) throw std::invalid_argument("ball_in_domain: radius < 0");
  if (!poly.contains(center)) return false;
  return poly.distance_to_boundary(center) >= radius - kBoundaryTol;
}

/// Regular k-gon centered at the origin, scaled to the requested area.
inline Polygon make_regular_polygon(std::size_t sides, double area) {
  if (sides < 3)
    throw std::invalid_argument("make_regular_polygon: sides must be >= 3");
  if (!(area > 0.0))
    throw std::invalid_argument("make_regular_polygon: area must be > 0");
  const double k = static_cast<double>(sides);
  const double two_pi = 2.0 * 3.14159265358979323846;
  // area = (k/2) R^2 sin(2*pi/k)
  const double r = std::sqrt(2.0 * area / (k * std::sin(two_pi / k)));
  std::vector<Vec2> verts;
  verts.reserve(sides);
  for (std::size_t j = 0; j < sides; ++j) {
    const double th = two_pi * static_cast<double>(j) / k;
    verts.push_back({r * std::cos(th), r * std::sin(th)});
  }
  return Polygon(std::move(verts));
}

/// Random simple polygon: vertices on a jittered fan around the origin
/// (angle jitter below half the angular gap keeps the angles strictly
/// increasing), radii jittered by up to 0.7*irregularity, then rescaled to
/// the requested area. Seed-deterministic; retries with a re-derived seed if
/// a sample fails validation, giving up after 100 attempts.
inline Polygon make_random_polygon(std::uint64_t seed, std::size_t sides,
                                   double irregularity, double area) {
  if (sides < 3)
    throw std::invalid_argument("make_random_polygon: sides must be >= 3");
  if (!(irregularity >= 0.0 && irregularity < 1.0))
    throw std::invalid_argument(
        "make_random_polygon: irregularity must be in [0, 1)");
  if (!(area > 0.0))
    throw std::invalid_argument("make_random_polygon: area must be > 0");
  const double two_pi = 2.0 * 3.14159265358979323846;
  const double gap = two_pi / static_cast<double>(sides);
  for (int attempt = 0; attempt < 100; ++attempt) {
    Rng rng(derive_seed(seed, 0x706f6c79ULL, static_cast<std::uint64_t>(attempt)));
    std::vector<Vec2> verts;
    verts.reserve(sides);
    double twice_area = 0.0;
    std::vector<double> angles(sides), radii(sides);
    for (std::size_t j = 0; j < sides; ++j) {
      angles[j] = gap * static_cast<double>(j) +
                  0.5 * gap * irregularity * rng.uniform(-1.0, 1.0);
      radii[j] = 1.0 + 0.7 * irregularity * rng.uniform(-1.0, 1.0);
    }
    for (std::size_t j = 0; j < sides; ++j)
      verts.push_back(
          {radii[j] * std::cos(angles[j]), radii[j] * std::sin(angles[j])});
    for (std::size_t j = 0; j < sides; ++j) {
      const Vec2& a = verts[j];
      const Vec2& b = verts[(j + 1) % sides];
      twice_area += a.x * b.y - b.x * a.y;
    }
    if (twice_area <= 2.0 * kBoundaryTol) continue;
    const double scale = std::sqrt(area / (0.5 * twice_area));
    for (Vec2& v : verts) v *= scale;
    try {
      return Polygon(std::move(verts));
    } catch (const std::invalid_argument&) {
      continue;
    }
  }
  throw std::runtime_error(
      "make_random_polygon: no simple polygon after 100 attempts");
}

}  // namespace covctl
