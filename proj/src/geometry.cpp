#include "barm/geometry.hpp"

#include "barm/errors.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace barm {
namespace {

constexpr int kCylinderSides = 64;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Vec2 to_local(const Pose& pose, Vec2 q) { return rotate(q - pose.xy(), -pose.yaw); }
Vec2 to_world(const Pose& pose, Vec2 local) { return pose.xy() + rotate(local, pose.yaw); }

Polygon rect_local(double x0, double x1, double y0, double y1) {
    return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

Polygon local_footprint(const Shape& shape) {
    return std::visit(
        overloaded{
            [](const Cuboid& s) { return rect_local(-s.lx / 2, s.lx / 2, -s.ly / 2, s.ly / 2); },
            [](const TriangularPrism& s) { return rect_local(-s.lx / 2, s.lx / 2, -s.ly / 2, s.ly / 2); },
            [](const Slab& s) { return rect_local(-s.lx / 2, s.lx / 2, -s.ly / 2, s.ly / 2); },
            [](const Container& s) { return rect_local(-s.lx / 2, s.lx / 2, -s.ly / 2, s.ly / 2); },
            [](const Cylinder& s) {
                Polygon p;
                p.reserve(kCylinderSides);
                for (int i = 0; i < kCylinderSides; ++i) {
                    const double a = 2.0 * std::numbers::pi * i / kCylinderSides;
                    p.push_back({s.radius * std::cos(a), s.radius * std::sin(a)});
                }
                return p;
            },
            [](const ConvexPrism& s) { return s.footprint; },
        },
        shape);
}

Polygon transform(const Polygon& local, const Pose& pose) {
    Polygon out;
    out.reserve(local.size());
    for (const auto& v : local) {
        out.push_back(to_world(pose, v));
    }
    return out;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double len2 = dot(ab, ab);
    double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return norm(p - (a + t * ab));
}

bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    const double d1 = cross(b - a, c - a);
    const double d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c);
    const double d4 = cross(d - c, b - c);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

}  // namespace

void validate_shape(const Shape& shape) {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    const bool ok = std::visit(
        overloaded{
            [&](const Cuboid& s) { return positive(s.lx) && positive(s.ly) && positive(s.lz); },
            [&](const TriangularPrism& s) { return positive(s.lx) && positive(s.ly) && positive(s.lz); },
            [&](const Slab& s) { return positive(s.lx) && positive(s.ly) && positive(s.lz); },
            [&](const Cylinder& s) { return positive(s.radius) && positive(s.height); },
            [&](const Container& s) {
                return positive(s.lx) && positive(s.ly) && positive(s.lz) && positive(s.wall) &&
                       positive(s.cavity_depth) && 2 * s.wall < s.lx && 2 * s.wall < s.ly &&
                       s.cavity_depth < s.lz;
            },
            [&](const ConvexPrism& s) {
                return positive(s.height) && s.footprint.size() >= 3 && s.footprint.size() <= 6 &&
                       is_convex_ccw(s.footprint) && polygon_area(s.footprint) > 1e-8;
            },
        },
        shape);
    if (!ok) {
        throw InvalidInput("invalid shape dimensions");
    }
}

double shape_height(const Shape& shape) {
    return std::visit(overloaded{
                          [](const Cuboid& s) { return s.lz; },
                          [](const TriangularPrism& s) { return s.lz; },
                          [](const Slab& s) { return s.lz; },
                          [](const Container& s) { return s.lz; },
                          [](const Cylinder& s) { return s.height; },
                          [](const ConvexPrism& s) { return s.height; },
                      },
                      shape);
}

std::optional<double> height_at(const Shape& shape, const Pose& pose, Vec2 q) {
    const Vec2 u = to_local(pose, q);
    const double base = base_z(shape, pose);
    auto in_rect = [&](double lx, double ly) {
        return std::abs(u.x) <= lx / 2 + kGeomEps && std::abs(u.y) <= ly / 2 + kGeomEps;
    };
    return std::visit(
        overloaded{
            [&](const Cuboid& s) -> std::optional<double> {
                if (!in_rect(s.lx, s.ly)) return std::nullopt;
                return base + s.lz;
            },
            [&](const Slab& s) -> std::optional<double> {
                if (!in_rect(s.lx, s.ly)) return std::nullopt;
                return base + s.lz;
            },
            [&](const TriangularPrism& s) -> std::optional<double> {
                if (!in_rect(s.lx, s.ly)) return std::nullopt;
                const double frac = std::min(1.0, std::abs(u.y) / (s.ly / 2));
                return base + s.lz * (1.0 - frac);
            },
            [&](const Cylinder& s) -> std::optional<double> {
                if (norm(u) > s.radius + kGeomEps) return std::nullopt;
                return base + s.height;
            },
            [&](const ConvexPrism& s) -> std::optional<double> {
                if (!polygon_contains(s.footprint, u)) return std::nullopt;
                return base + s.height;
            },
            [&](const Container& s) -> std::optional<double> {
                if (!in_rect(s.lx, s.ly)) return std::nullopt;
                const bool cavity = std::abs(u.x) < s.lx / 2 - s.wall && std::abs(u.y) < s.ly / 2 - s.wall;
                return cavity ? base + s.lz - s.cavity_depth : base + s.lz;
            },
        },
        shape);
}

bool footprint_contains(const Shape& shape, const Pose& pose, Vec2 q) {
    return height_at(shape, pose, q).has_value();
}

double normalize_yaw(double yaw, bool half_rotation) {
    if (!std::isfinite(yaw)) {
        throw InvalidInput("yaw must be finite");
    }
    const double period = half_rotation ? std::numbers::pi : 2.0 * std::numbers::pi;
    double r = std::fmod(yaw, period);
    if (r < 0.0) r += period;
    if (r >= period) r = 0.0;
    return r;
}

double angle_distance(double a, double b, double period) {
    double d = std::fmod(std::abs(a - b), period);
    return std::min(d, period - d);
}

Pixel world_to_pixel(const GridSpec& grid, Vec2 p) {
    if (p.x < grid.x_min - kGeomEps || p.x > grid.x_max + kGeomEps || p.y < grid.y_min - kGeomEps ||
        p.y > grid.y_max + kGeomEps) {
        throw OutOfWorkspace("point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                             ") outside workspace");
    }
    const double pitch = grid.pitch();
    auto index = [&](double v, double lo) {
        const int i = static_cast<int>(std::floor((v - lo) / pitch + 1e-9));
        return std::clamp(i, 0, grid.size - 1);
    };
    return {index(p.y, grid.y_min), index(p.x, grid.x_min)};
}

Vec2 pixel_to_world(const GridSpec& grid, Pixel px) {
    const double pitch = grid.pitch();
    return {grid.x_min + (px.col + 0.5) * pitch, grid.y_min + (px.row + 0.5) * pitch};
}

double polygon_area(std::span<const Vec2> poly) {
    if (poly.size() < 3) return 0.0;
    double a = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        a += cross(poly[i], poly[(i + 1) % poly.size()]);
    }
    return a / 2.0;
}

Vec2 polygon_centroid(std::span<const Vec2> poly) {
    const double a = polygon_area(poly);
    if (std::abs(a) < 1e-18) {
        Vec2 m;
        for (const auto& v : poly) m = m + v;
        return poly.empty() ? m : (1.0 / static_cast<double>(poly.size())) * m;
    }
    double cx = 0.0, cy = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2 p = poly[i], q = poly[(i + 1) % poly.size()];
        const double c = cross(p, q);
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
    }
    return {cx / (6.0 * a), cy / (6.0 * a)};
}

bool polygon_contains(std::span<const Vec2> poly, Vec2 q, double tol) {
    if (poly.size() < 3) return false;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()];
        const Vec2 e = b - a;
        const double len = norm(e);
        if (len == 0.0) continue;
        if (cross(e, q - a) / len < -tol) return false;
    }
    return true;
}

Polygon clip_convex(std::span<const Vec2> subject, std::span<const Vec2> clip) {
    Polygon out(subject.begin(), subject.end());
    for (std::size_t i = 0; i < clip.size() && !out.empty(); ++i) {
        const Vec2 a = clip[i], b = clip[(i + 1) % clip.size()];
        const Vec2 e = b - a;
        Polygon in;
        in.swap(out);
        for (std::size_t j = 0; j < in.size(); ++j) {
            const Vec2 p = in[j], q = in[(j + 1) % in.size()];
            const double dp = cross(e, p - a);
            const double dq = cross(e, q - a);
            if (dp >= 0) out.push_back(p);
            if ((dp >= 0) != (dq >= 0)) {
                const double t = dp / (dp - dq);
                out.push_back(p + t * (q - p));
            }
        }
    }
    if (out.size() < 3) out.clear();
    return out;
}

Polygon convex_hull(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    Polygon hull(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
        while (k >= t && cross(hull[k - 1] - hull[k - 2], pts[i - 1] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i - 1];
    }
    hull.resize(k - 1);
    return hull;
}

double polygon_distance(std::span<const Vec2> a, std::span<const Vec2> b) {
    if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
    if (polygon_contains(a, b[0], 0.0) || polygon_contains(b, a[0], 0.0)) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Vec2 p = a[i], q = a[(i + 1) % a.size()];
        for (std::size_t j = 0; j < b.size(); ++j) {
            const Vec2 r = b[j], s = b[(j + 1) % b.size()];
            if (segments_intersect(p, q, r, s)) return 0.0;
            best = std::min({best, point_segment_distance(p, r, s), point_segment_distance(r, p, q)});
        }
    }
    return best;
}

bool is_convex_ccw(std::span<const Vec2> poly) {
    if (poly.size() < 3) return false;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()], c = poly[(i + 2) % poly.size()];
        if (cross(b - a, c - b) <= 0.0) return false;
    }
    return true;
}

Aabb aabb_of(std::span<const Vec2> poly) {
    Aabb box{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& v : poly) {
        box.x_min = std::min(box.x_min, v.x);
        box.x_max = std::max(box.x_max, v.x);
        box.y_min = std::min(box.y_min, v.y);
        box.y_max = std::max(box.y_max, v.y);
    }
    return box;
}

std::vector<SurfacePatch> top_surfaces(const Shape& shape, const Pose& pose) {
    const double base = base_z(shape, pose);
    auto flat = [&](const Polygon& local, double h) {
        return SurfacePatch{transform(local, pose), h, pose.xy(), {0.0, 0.0}};
    };
    return std::visit(
        overloaded{
            [&](const TriangularPrism& s) {
                const double slope = s.lz / (s.ly / 2);
                return std::vector<SurfacePatch>{
                    {transform(rect_local(-s.lx / 2, s.lx / 2, 0.0, s.ly / 2), pose), base + s.lz, pose.xy(),
                     rotate({0.0, -slope}, pose.yaw)},
                    {transform(rect_local(-s.lx / 2, s.lx / 2, -s.ly / 2, 0.0), pose), base + s.lz, pose.xy(),
                     rotate({0.0, slope}, pose.yaw)},
                };
            },
            [&](const Container& s) {
                const double ix = s.lx / 2 - s.wall, iy = s.ly / 2 - s.wall;
                const double hx = s.lx / 2, hy = s.ly / 2;
                const double top = base + s.lz;
                return std::vector<SurfacePatch>{
                    flat(rect_local(-hx, -ix, -hy, hy), top),
                    flat(rect_local(ix, hx, -hy, hy), top),
                    flat(rect_local(-ix, ix, -hy, -iy), top),
                    flat(rect_local(-ix, ix, iy, hy), top),
                    flat(rect_local(-ix, ix, -iy, iy), top - s.cavity_depth),
                };
            },
            [&](const auto&) { return std::vector<SurfacePatch>{flat(local_footprint(shape), base + shape_height(shape))}; },
        },
        shape);
}

Polygon footprint_polygon(const Shape& shape, const Pose& pose) { return transform(local_footprint(shape), pose); }

Vec2 center_of_mass(const Shape& shape, const Pose& pose) {
    if (const auto* p = std::get_if<ConvexPrism>(&shape)) {
        return to_world(pose, polygon_centroid(p->footprint));
    }
    return pose.xy();
}

std::optional<double> max_height_over(const SurfacePatch& patch, std::span<const Vec2> region) {
    const Polygon inter = clip_convex(patch.region, region);
    if (polygon_area(inter) <= kOverlapAreaEps) return std::nullopt;
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& v : inter) best = std::max(best, patch.height(v));
    return best;
}

double width_across(const Shape& shape, const Pose& pose, double gripper_yaw) {
    const Vec2 n{-std::sin(gripper_yaw), std::cos(gripper_yaw)};
    if (const auto* c = std::get_if<Cylinder>(&shape)) {
        return 2.0 * c->radius;
    }
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& v : footprint_polygon(shape, pose)) {
        lo = std::min(lo, dot(v, n));
        hi = std::max(hi, dot(v, n));
    }
    return hi - lo;
}

Vec2 half_extents_at(const Shape& shape, double yaw) {
    if (const auto* c = std::get_if<Cylinder>(&shape)) {
        return {c->radius, c->radius};
    }
    const Aabb box = aabb_of(footprint_polygon(shape, Pose{0, 0, 0, yaw}));
    return {std::max(-box.x_min, box.x_max), std::max(-box.y_min, box.y_max)};
}

Aabb local_bounds(const Shape& shape) { return aabb_of(local_footprint(shape)); }

}  // namespace barm
