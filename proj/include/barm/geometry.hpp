#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <variant>
#include <vector>

namespace barm {

// Default tolerance for exact geometric comparisons, in meters.
inline constexpr double kGeomEps = 1e-9;
// Footprint intersections with area at or below this are treated as touching.
inline constexpr double kOverlapAreaEps = 1e-8;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 rotate(Vec2 v, double yaw) {
    const double c = std::cos(yaw), s = std::sin(yaw);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Position of an object's bounding-box center (z included) plus yaw.
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double yaw = 0.0;

    Vec2 xy() const { return {x, y}; }
    friend bool operator==(const Pose&, const Pose&) = default;
};

// Shape primitives. All dimensions in meters, measured in the local frame.
struct Cuboid {
    double lx, ly, lz;
};
// Ridge runs along local x at the footprint centerline; height falls linearly to 0 at y = +-ly/2.
struct TriangularPrism {
    double lx, ly, lz;
};
struct Cylinder {
    double radius, height;
};
// Footprint is a convex counterclockwise polygon in the local frame.
struct ConvexPrism {
    std::vector<Vec2> footprint;
    double height;
};
// Open-top box: rectangular cavity with uniform walls; floor sits at lz - cavity_depth.
struct Container {
    double lx, ly, lz, wall, cavity_depth;
};
struct Slab {
    double lx, ly, lz;
};

using Shape = std::variant<Cuboid, TriangularPrism, Cylinder, ConvexPrism, Container, Slab>;

// Throws InvalidInput on non-positive dimensions or a bad ConvexPrism footprint.
void validate_shape(const Shape& shape);

// Total vertical extent of the shape.
double shape_height(const Shape& shape);

inline double base_z(const Shape& shape, const Pose& pose) { return pose.z - shape_height(shape) / 2.0; }
inline double top_z(const Shape& shape, const Pose& pose) { return pose.z + shape_height(shape) / 2.0; }

// World-frame top height of the shape at column q, or nullopt when q misses the footprint.
// For a Container the cavity columns report the floor height.
std::optional<double> height_at(const Shape& shape, const Pose& pose, Vec2 q);

bool footprint_contains(const Shape& shape, const Pose& pose, Vec2 q);

// Result in [0, pi) when half_rotation, else [0, 2pi). Throws InvalidInput for non-finite input.
double normalize_yaw(double yaw, bool half_rotation);

// Smallest absolute difference between two angles modulo `period`.
double angle_distance(double a, double b, double period);

// ---------------------------------------------------------------------------
// Workspace grid

struct GridSpec {
    double x_min = 0.25;
    double x_max = 0.65;
    double y_min = -0.2;
    double y_max = 0.2;
    int size = 128;

    double extent() const { return x_max - x_min; }
    double pitch() const { return extent() / size; }
    Vec2 center() const { return {(x_min + x_max) / 2.0, (y_min + y_max) / 2.0}; }
};

struct Pixel {
    int row = 0;
    int col = 0;
    friend bool operator==(Pixel, Pixel) = default;
};

// Column indexes x, row indexes y. A point on a cell boundary maps to the larger index.
// Throws OutOfWorkspace for points outside the bounds.
Pixel world_to_pixel(const GridSpec& grid, Vec2 p);
Vec2 pixel_to_world(const GridSpec& grid, Pixel px);

// ---------------------------------------------------------------------------
// Planar polygon machinery used for support, overlap and clearance queries.

using Polygon = std::vector<Vec2>;

double polygon_area(std::span<const Vec2> poly);
Vec2 polygon_centroid(std::span<const Vec2> poly);
bool polygon_contains(std::span<const Vec2> poly, Vec2 q, double tol = kGeomEps);
// Sutherland-Hodgman clip of a convex subject by a convex ccw clip polygon.
Polygon clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip);
Polygon convex_hull(std::vector<Vec2> points);
// Zero when the polygons intersect.
double polygon_distance(std::span<const Vec2> a, std::span<const Vec2> b);
bool is_convex_ccw(std::span<const Vec2> poly);

struct Aabb {
    double x_min, x_max, y_min, y_max;

    bool intersects(const Aabb& o, double margin = 0.0) const {
        return x_min <= o.x_max + margin && o.x_min <= x_max + margin && y_min <= o.y_max + margin &&
               o.y_min <= y_max + margin;
    }
};
Aabb aabb_of(std::span<const Vec2> poly);

// A piece of an object's top surface: a convex region with a linear height field
// h(p) = h0 + dot(grad, p - anchor).
struct SurfacePatch {
    Polygon region;
    double h0 = 0.0;
    Vec2 anchor;
    Vec2 grad;

    double height(Vec2 p) const { return h0 + dot(grad, p - anchor); }
};

// World-frame top surfaces; the union of regions is the footprint.
std::vector<SurfacePatch> top_surfaces(const Shape& shape, const Pose& pose);

// Outer footprint as a convex world-frame polygon (cylinders as a 64-gon).
Polygon footprint_polygon(const Shape& shape, const Pose& pose);

// Center of mass projected onto the plane.
Vec2 center_of_mass(const Shape& shape, const Pose& pose);

// Max of the patch height over its intersection with `region`, or nullopt when the
// intersection area is at most kOverlapAreaEps.
std::optional<double> max_height_over(const SurfacePatch& patch, std::span<const Vec2> region);

// Footprint extent measured across the gripper closing direction (perpendicular to yaw).
double width_across(const Shape& shape, const Pose& pose, double gripper_yaw);

// Axis-aligned half extents of the footprint for a given yaw (pose position ignored).
Vec2 half_extents_at(const Shape& shape, double yaw);

// Local-frame bounding box of the footprint.
Aabb local_bounds(const Shape& shape);

}  // namespace barm
