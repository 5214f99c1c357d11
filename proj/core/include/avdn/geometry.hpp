#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace avdn {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

// Wraps an angle into [0, 2π).
double normalize_angle(double radians);

// Heading of a vector in radians, [0, 2π). Zero vector maps to 0.
double heading(Vec2 v);

// Rotated square footprint of the drone camera on the ground plane.
//
// The body frame used for observations and waypoints has `right` and
// `forward` axes; forward points along `rotation` (the yaw). Local
// coordinates are (right, forward) in meters from the center.
class ViewArea {
public:
    // Throws ValidationError unless side > 0 and all values are finite.
    ViewArea(Vec2 center, double side, double rotation);
    ViewArea(double center_x, double center_y, double side, double rotation)
        : ViewArea(Vec2{center_x, center_y}, side, rotation) {}

    Vec2 center() const { return center_; }
    double side() const { return side_; }
    double rotation() const { return rotation_; }
    double area() const { return side_ * side_; }

    Vec2 forward() const { return {std::cos(rotation_), std::sin(rotation_)}; }
    Vec2 right() const { return {std::sin(rotation_), -std::cos(rotation_)}; }

    Vec2 to_world(Vec2 local) const;
    Vec2 to_local(Vec2 world) const;

    // Radius of the circumscribed circle.
    double circumradius() const { return side_ * std::numbers::sqrt2 / 2.0; }

    ViewArea moved_to(Vec2 center, double rotation) const { return {center, side_, rotation}; }

    friend bool operator==(const ViewArea&, const ViewArea&) = default;

private:
    Vec2 center_;
    double side_;
    double rotation_;
};

// Convex polygon with counter-clockwise vertex order.
class Polygon {
public:
    // Throws ValidationError for fewer than 3 vertices, repeated consecutive
    // vertices, clockwise order or any reflex corner.
    explicit Polygon(std::vector<Vec2> vertices);

    std::span<const Vec2> vertices() const { return vertices_; }
    std::size_t size() const { return vertices_.size(); }
    double area() const;

private:
    std::vector<Vec2> vertices_;
};

// Shoelace area of an arbitrary vertex ring (signed; CCW positive).
double signed_area(std::span<const Vec2> ring);

Polygon view_polygon(const ViewArea& v);

// Area of a ∩ b by Sutherland–Hodgman clipping. Touching polygons give 0.
double intersection_area(const Polygon& a, const Polygon& b);

// Intersection over union in [0, 1]; exactly symmetric and exactly 1 for
// identical views.
double iou(const ViewArea& a, const ViewArea& b);

class Trajectory {
public:
    // Throws ValidationError when empty.
    explicit Trajectory(std::vector<ViewArea> views);

    std::span<const ViewArea> views() const { return views_; }
    std::size_t size() const { return views_.size(); }
    const ViewArea& start() const { return views_.front(); }
    const ViewArea& final() const { return views_.back(); }
    void push_back(const ViewArea& v) { views_.push_back(v); }

    friend bool operator==(const Trajectory&, const Trajectory&) = default;

private:
    std::vector<ViewArea> views_;
};

// Sum of center-to-center Euclidean distances.
double path_length(const Trajectory& t);

// Axis-aligned world square [0, world_side]^2 containment of the whole footprint.
bool view_inside_world(const ViewArea& v, double world_side, double tol = 1e-9);

}  // namespace avdn
