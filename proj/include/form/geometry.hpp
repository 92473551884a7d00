#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace form {

/// Raised for malformed numeric input (non-finite poses, non-positive sizes, ...).
class InvalidInput : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Canonical table frame. Origin is the front-left corner, x grows to the
/// right, y grows from the front edge toward the back edge. Sizes in meters.
struct TableFrame {
    double length = 1.0;  // x extent
    double width = 1.0;   // y extent

    void validate() const;
};

/// Static description of an object: a 2D box of `length` (x extent at
/// theta = 0) by `width` (y extent at theta = 0), in meters.
struct ObjectShape {
    std::string name;
    std::string category;
    double length = 0.0;
    double width = 0.0;

    void validate() const;
};

/// Planar pose in normalized table units; theta in radians.
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    bool operator==(const Pose&) const = default;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct OrientedBox {
    Vec2 center;
    Vec2 half_extents;
    double theta = 0.0;

    /// Corners in counter-clockwise order starting at local (+hx, +hy).
    std::array<Vec2, 4> corners() const;
};

/// Axis-aligned bounds. `bottom` is the front-most extent, `top` the back-most.
struct Aabb {
    double left = 0.0;
    double right = 0.0;
    double bottom = 0.0;
    double top = 0.0;
};

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle to (-pi, pi].
double wrap_angle(double theta);

/// Normalized half extents of a shape on a table (before rotation).
Vec2 normalized_half_extents(const ObjectShape& shape, const TableFrame& table);

OrientedBox to_oriented_box(const ObjectShape& shape, const Pose& pose, const TableFrame& table);
Aabb aabb_of(const OrientedBox& box);

/// Separating-axis test. Touching boxes (zero-area contact, within 1e-9) do
/// not overlap.
bool overlap(const OrientedBox& a, const OrientedBox& b);

/// Penetration depth along the best separating axis and the unit axis that
/// points from `b` toward `a`. Depth is <= 0 when the boxes are separated.
struct Penetration {
    double depth = 0.0;
    Vec2 axis;
};
Penetration penetration(const OrientedBox& a, const OrientedBox& b);

/// Point-in-box test (closed box).
bool contains(const OrientedBox& box, Vec2 p, double tol = 0.0);

Pose normalize(const Pose& pose_meters, const TableFrame& table);
Pose denormalize(const Pose& pose, const TableFrame& table);

}  // namespace form
