#include "avdn/geometry.hpp"

#include <algorithm>
#include <numbers>
#include <string>
#include <tuple>

#include "avdn/errors.hpp"

namespace avdn {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool finite(Vec2 v) { return std::isfinite(v.x) && std::isfinite(v.y); }

// Clip `subject` to the left half-plane of the directed edge p->q.
void clip_half_plane(const std::vector<Vec2>& subject, Vec2 p, Vec2 q, std::vector<Vec2>& out) {
    out.clear();
    const std::size_t n = subject.size();
    if (n == 0) return;
    const Vec2 edge = q - p;
    Vec2 s = subject[n - 1];
    double ds = cross(edge, s - p);
    for (const Vec2& e : subject) {
        const double de = cross(edge, e - p);
        if (de >= 0.0) {
            if (ds < 0.0) out.push_back(s + (ds / (ds - de)) * (e - s));
            out.push_back(e);
        } else if (ds >= 0.0) {
            out.push_back(s + (ds / (ds - de)) * (e - s));
        }
        s = e;
        ds = de;
    }
}

auto view_key(const ViewArea& v) {
    return std::make_tuple(v.center().x, v.center().y, v.side(), v.rotation());
}

}  // namespace

double normalize_angle(double radians) {
    double r = std::fmod(radians, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
}

double heading(Vec2 v) {
    if (v.x == 0.0 && v.y == 0.0) return 0.0;
    return normalize_angle(std::atan2(v.y, v.x));
}

ViewArea::ViewArea(Vec2 center, double side, double rotation) : center_(center), side_(side), rotation_(0.0) {
    if (!finite(center) || !std::isfinite(side) || !std::isfinite(rotation)) {
        throw ValidationError("view area: non-finite field");
    }
    if (!(side > 0.0)) throw ValidationError("view area: side must be > 0, got " + std::to_string(side));
    rotation_ = normalize_angle(rotation);
}

Vec2 ViewArea::to_world(Vec2 local) const {
    return center_ + local.x * right() + local.y * forward();
}

Vec2 ViewArea::to_local(Vec2 world) const {
    const Vec2 d = world - center_;
    return {dot(d, right()), dot(d, forward())};
}

Polygon::Polygon(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {
    const std::size_t n = vertices_.size();
    if (n < 3) throw ValidationError("polygon: needs at least 3 vertices, got " + std::to_string(n));
    for (const Vec2& v : vertices_) {
        if (!finite(v)) throw ValidationError("polygon: non-finite vertex");
    }
    double turning = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = vertices_[i];
        const Vec2 b = vertices_[(i + 1) % n];
        const Vec2 c = vertices_[(i + 2) % n];
        if (a == b) throw ValidationError("polygon: repeated consecutive vertex at index " + std::to_string(i));
        const Vec2 e1 = b - a;
        const Vec2 e2 = c - b;
        const double turn = cross(e1, e2);
        if (turn < -1e-12 * norm(e1) * norm(e2)) {
            throw ValidationError("polygon: not convex counter-clockwise at vertex " + std::to_string((i + 1) % n));
        }
        turning += std::atan2(turn, dot(e1, e2));
    }
    // A self-overlapping ring (e.g. a pentagram) turns more than once.
    if (std::abs(turning - kTwoPi) > 1e-6) throw ValidationError("polygon: vertex ring winds more than once");
}

double Polygon::area() const { return signed_area(vertices_); }

double signed_area(std::span<const Vec2> ring) {
    const std::size_t n = ring.size();
    if (n < 3) return 0.0;
    double twice = 0.0;
    for (std::size_t i = 0; i < n; ++i) twice += cross(ring[i], ring[(i + 1) % n]);
    return 0.5 * twice;
}

Polygon view_polygon(const ViewArea& v) {
    const double h = 0.5 * v.side();
    const double c = std::cos(v.rotation());
    const double s = std::sin(v.rotation());
    const Vec2 center = v.center();
    std::vector<Vec2> corners;
    corners.reserve(4);
    for (const Vec2 offset : {Vec2{-h, -h}, Vec2{h, -h}, Vec2{h, h}, Vec2{-h, h}}) {
        corners.push_back({center.x + c * offset.x - s * offset.y, center.y + s * offset.x + c * offset.y});
    }
    return Polygon(std::move(corners));
}

double intersection_area(const Polygon& a, const Polygon& b) {
    std::vector<Vec2> current(a.vertices().begin(), a.vertices().end());
    std::vector<Vec2> next;
    next.reserve(current.size() + b.size());
    const auto clip = b.vertices();
    for (std::size_t i = 0; i < clip.size() && !current.empty(); ++i) {
        clip_half_plane(current, clip[i], clip[(i + 1) % clip.size()], next);
        current.swap(next);
    }
    const double area = std::max(0.0, signed_area(current));
    return std::min({area, a.area(), b.area()});
}

double iou(const ViewArea& a, const ViewArea& b) {
    if (a == b) return 1.0;
    // Canonical argument order makes the result bitwise symmetric.
    const bool swap = view_key(b) < view_key(a);
    const ViewArea& first = swap ? b : a;
    const ViewArea& second = swap ? a : b;
    const double inter = intersection_area(view_polygon(first), view_polygon(second));
    const double uni = first.area() + second.area() - inter;
    if (!(uni > 0.0)) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

Trajectory::Trajectory(std::vector<ViewArea> views) : views_(std::move(views)) {
    if (views_.empty()) throw ValidationError("trajectory: must contain at least the start view");
}

double path_length(const Trajectory& t) {
    double total = 0.0;
    const auto views = t.views();
    for (std::size_t i = 1; i < views.size(); ++i) total += distance(views[i - 1].center(), views[i].center());
    return total;
}

bool view_inside_world(const ViewArea& v, double world_side, double tol) {
    const Polygon poly = view_polygon(v);
    for (const Vec2& p : poly.vertices()) {
        if (p.x < -tol || p.y < -tol || p.x > world_side + tol || p.y > world_side + tol) return false;
    }
    return true;
}

}  // namespace avdn
