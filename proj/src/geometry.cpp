#include "form/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace form {

namespace {

constexpr double kTouchTol = 1e-9;

double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

void project(const std::array<Vec2, 4>& pts, Vec2 axis, double& lo, double& hi) {
    lo = hi = dot(pts[0], axis);
    for (size_t i = 1; i < pts.size(); ++i) {
        const double v = dot(pts[i], axis);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
}

std::array<Vec2, 2> face_normals(const OrientedBox& b) {
    const double c = std::cos(b.theta);
    const double s = std::sin(b.theta);
    return {Vec2{c, s}, Vec2{-s, c}};
}

}  // namespace

void TableFrame::validate() const {
    if (!(length > 0.0) || !(width > 0.0) || !std::isfinite(length) || !std::isfinite(width)) {
        throw InvalidInput("table dimensions must be positive and finite");
    }
}

void ObjectShape::validate() const {
    if (name.empty()) {
        throw InvalidInput("object name must not be empty");
    }
    if (!(length > 0.0) || !(width > 0.0) || !std::isfinite(length) || !std::isfinite(width)) {
        throw InvalidInput("object '" + name + "' must have positive finite dimensions");
    }
}

double wrap_angle(double theta) {
    double w = std::remainder(theta, 2.0 * kPi);
    if (w <= -kPi) {
        w += 2.0 * kPi;
    }
    return w;
}

std::array<Vec2, 4> OrientedBox::corners() const {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double hx = half_extents.x;
    const double hy = half_extents.y;
    const std::array<Vec2, 4> local{Vec2{hx, hy}, Vec2{-hx, hy}, Vec2{-hx, -hy}, Vec2{hx, -hy}};
    std::array<Vec2, 4> out{};
    for (size_t i = 0; i < 4; ++i) {
        out[i] = Vec2{center.x + c * local[i].x - s * local[i].y,
                      center.y + s * local[i].x + c * local[i].y};
    }
    return out;
}

Vec2 normalized_half_extents(const ObjectShape& shape, const TableFrame& table) {
    return Vec2{0.5 * shape.length / table.length, 0.5 * shape.width / table.width};
}

OrientedBox to_oriented_box(const ObjectShape& shape, const Pose& pose, const TableFrame& table) {
    if (!std::isfinite(pose.x) || !std::isfinite(pose.y) || !std::isfinite(pose.theta)) {
        throw InvalidInput("pose of '" + shape.name + "' has non-finite components");
    }
    return OrientedBox{Vec2{pose.x, pose.y}, normalized_half_extents(shape, table), pose.theta};
}

Aabb aabb_of(const OrientedBox& box) {
    const double c = std::abs(std::cos(box.theta));
    const double s = std::abs(std::sin(box.theta));
    const double ex = c * box.half_extents.x + s * box.half_extents.y;
    const double ey = s * box.half_extents.x + c * box.half_extents.y;
    return Aabb{box.center.x - ex, box.center.x + ex, box.center.y - ey, box.center.y + ey};
}

Penetration penetration(const OrientedBox& a, const OrientedBox& b) {
    const auto ca = a.corners();
    const auto cb = b.corners();
    const auto na = face_normals(a);
    const auto nb = face_normals(b);
    const std::array<Vec2, 4> axes{na[0], na[1], nb[0], nb[1]};

    Penetration best{std::numeric_limits<double>::infinity(), Vec2{1.0, 0.0}};
    for (const Vec2& axis : axes) {
        double alo = 0.0, ahi = 0.0, blo = 0.0, bhi = 0.0;
        project(ca, axis, alo, ahi);
        project(cb, axis, blo, bhi);
        const double depth = std::min(ahi, bhi) - std::max(alo, blo);
        if (depth < best.depth) {
            const double dir = dot(Vec2{a.center.x - b.center.x, a.center.y - b.center.y}, axis);
            best.depth = depth;
            best.axis = dir >= 0.0 ? axis : Vec2{-axis.x, -axis.y};
        }
    }
    return best;
}

bool overlap(const OrientedBox& a, const OrientedBox& b) { return penetration(a, b).depth > kTouchTol; }

bool contains(const OrientedBox& box, Vec2 p, double tol) {
    const double c = std::cos(box.theta);
    const double s = std::sin(box.theta);
    const double dx = p.x - box.center.x;
    const double dy = p.y - box.center.y;
    const double u = c * dx + s * dy;
    const double v = -s * dx + c * dy;
    return std::abs(u) <= box.half_extents.x + tol && std::abs(v) <= box.half_extents.y + tol;
}

Pose normalize(const Pose& pose_meters, const TableFrame& table) {
    return Pose{pose_meters.x / table.length, pose_meters.y / table.width, pose_meters.theta};
}

Pose denormalize(const Pose& pose, const TableFrame& table) {
    return Pose{pose.x * table.length, pose.y * table.width, pose.theta};
}

}  // namespace form
