#include "barm/sim.hpp"

#include "barm/bytes.hpp"
#include "barm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace barm {
namespace {

bool ignored(std::span<const int> ignore, int id) {
    return std::find(ignore.begin(), ignore.end(), id) != ignore.end();
}

// Square region of half-width h centered at c, rotated by yaw (ccw).
Polygon square_region(Vec2 c, double h, double yaw) {
    Polygon p{{-h, -h}, {h, -h}, {h, h}, {-h, h}};
    for (auto& v : p) v = c + rotate(v, yaw);
    return p;
}

struct Contact {
    int object_id;
    Polygon region;
};

// Clip a COM position to the workspace and return the corrected pose.
Pose clip_com(const SimObject& obj, Pose pose, const Workspace& ws) {
    const Vec2 com = center_of_mass(obj.shape, pose);
    const Vec2 clipped{std::clamp(com.x, ws.x_min, ws.x_max), std::clamp(com.y, ws.y_min, ws.y_max)};
    pose.x += clipped.x - com.x;
    pose.y += clipped.y - com.y;
    return pose;
}

bool overlaps_any(const WorldState& world, const Polygon& footprint, const std::vector<int>& ids) {
    const Aabb box = aabb_of(footprint);
    for (int id : ids) {
        const SimObject& other = world.get(id);
        if (!aabb_of(footprint_polygon(other.shape, other.pose)).intersects(box)) continue;
        for (const auto& patch : top_surfaces(other.shape, other.pose)) {
            if (max_height_over(patch, footprint)) return true;
        }
    }
    return false;
}

// Local-frame grasp-line distance; elongated footprints use their long centerline.
double grasp_line_distance(const SimObject& obj, Vec2 q) {
    const Aabb b = local_bounds(obj.shape);
    const double ex = b.x_max - b.x_min, ey = b.y_max - b.y_min;
    const Vec2 u = rotate(q - obj.pose.xy(), -obj.pose.yaw);
    if (std::max(ex, ey) >= 1.5 * std::min(ex, ey)) {
        const Vec2 c{(b.x_min + b.x_max) / 2, (b.y_min + b.y_max) / 2};
        return ex >= ey ? std::abs(u.y - c.y) : std::abs(u.x - c.x);
    }
    return norm(q - obj.com());
}

}  // namespace

std::string_view category_name(Category c) {
    switch (c) {
        case Category::Block: return "block";
        case Category::Roof: return "roof";
        case Category::Triangle: return "triangle";
        case Category::Brick: return "brick";
        case Category::Random: return "random";
        case Category::Box: return "box";
        case Category::Bottle: return "bottle";
        case Category::Swab: return "swab";
        case Category::Tube: return "tube";
        case Category::UsedTube: return "used_tube";
        case Category::Container: return "container";
        case Category::Pallet: return "pallet";
    }
    return "unknown";
}

const SimObject* WorldState::find(int id) const {
    for (const auto& o : objects) {
        if (o.id == id) return &o;
    }
    return nullptr;
}

SimObject* WorldState::find(int id) {
    for (auto& o : objects) {
        if (o.id == id) return &o;
    }
    return nullptr;
}

const SimObject& WorldState::get(int id) const {
    const auto* o = find(id);
    if (!o) throw InvalidInput("no object with id " + std::to_string(id));
    return *o;
}

SimObject& WorldState::get(int id) {
    auto* o = find(id);
    if (!o) throw InvalidInput("no object with id " + std::to_string(id));
    return *o;
}

int WorldState::add_object(Shape shape, Pose pose, Category category, bool movable) {
    validate_shape(shape);
    const int id = next_id++;
    objects.push_back(SimObject{id, std::move(shape), pose, category, movable, true});
    return id;
}

void WorldState::remove_object(int id) {
    if (is_held(id)) gripper.holding.reset();
    std::erase_if(objects, [id](const SimObject& o) { return o.id == id; });
}

double surface_height(const WorldState& world, Vec2 q, int exclude_id) {
    double h = 0.0;
    for (const auto& o : world.objects) {
        if (o.id == exclude_id || world.is_held(o.id)) continue;
        if (auto v = height_at(o.shape, o.pose, q)) h = std::max(h, *v);
    }
    return h;
}

std::optional<int> top_object_at(const WorldState& world, Vec2 q) {
    std::optional<int> best;
    double best_h = -std::numeric_limits<double>::infinity();
    for (const auto& o : world.objects) {
        if (world.is_held(o.id)) continue;
        if (auto v = height_at(o.shape, o.pose, q); v && *v > best_h) {
            best_h = *v;
            best = o.id;
        }
    }
    return best;
}

double landing_height(const WorldState& world, const Shape& shape, const Pose& pose, int exclude_id) {
    const Polygon fp = footprint_polygon(shape, pose);
    const Aabb box = aabb_of(fp);
    double h = 0.0;
    for (const auto& o : world.objects) {
        if (o.id == exclude_id || world.is_held(o.id)) continue;
        if (!aabb_of(footprint_polygon(o.shape, o.pose)).intersects(box)) continue;
        for (const auto& patch : top_surfaces(o.shape, o.pose)) {
            if (auto v = max_height_over(patch, fp)) h = std::max(h, *v);
        }
    }
    return h;
}

double support_height(const WorldState& world, const SimObject& obj) {
    const Polygon fp = footprint_polygon(obj.shape, obj.pose);
    const Aabb box = aabb_of(fp);
    const double base = obj.base();
    const double tol = world.params.settle_tolerance;
    double h = 0.0;
    for (const auto& o : world.objects) {
        if (o.id == obj.id || world.is_held(o.id)) continue;
        if (!aabb_of(footprint_polygon(o.shape, o.pose)).intersects(box)) continue;
        for (const auto& patch : top_surfaces(o.shape, o.pose)) {
            if (auto v = max_height_over(patch, fp); v && *v <= base + tol) h = std::max(h, *v);
        }
    }
    return h;
}

namespace {

// Highest point of `below`'s top surface over the part of its footprint shared with `region`.
std::optional<double> surface_over(const SimObject& below, const Polygon& region) {
    std::optional<double> best;
    for (const auto& patch : top_surfaces(below.shape, below.pose)) {
        if (auto v = max_height_over(patch, region)) best = std::max(best.value_or(*v), *v);
    }
    return best;
}

}  // namespace

bool is_settled(const WorldState& world, const SimObject& obj) {
    const double tol = world.params.settle_tolerance;
    if (std::abs(obj.base() - support_height(world, obj)) > tol) return false;
    // Overlapping footprints must be vertically separated: one rests on or above the other's surface.
    const Polygon fp = footprint_polygon(obj.shape, obj.pose);
    const Aabb box = aabb_of(fp);
    for (const auto& o : world.objects) {
        if (o.id == obj.id || world.is_held(o.id)) continue;
        const Polygon ofp = footprint_polygon(o.shape, o.pose);
        if (!aabb_of(ofp).intersects(box)) continue;
        const auto o_under_obj = surface_over(o, fp);
        if (!o_under_obj) continue;
        if (obj.base() >= *o_under_obj - tol) continue;
        const auto obj_under_o = surface_over(obj, ofp);
        if (obj_under_o && o.base() >= *obj_under_o - tol) continue;
        return false;
    }
    return true;
}

std::vector<int> unsettled_objects(const WorldState& world) {
    std::vector<int> out;
    for (const auto& o : world.objects) {
        if (!o.movable || world.is_held(o.id)) continue;
        if (!is_settled(world, o)) out.push_back(o.id);
    }
    return out;
}

double clearance_to_others(const WorldState& world, const Shape& shape, const Pose& pose, std::span<const int> ignore) {
    const Polygon fp = footprint_polygon(shape, pose);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& o : world.objects) {
        if (world.is_held(o.id) || ignored(ignore, o.id)) continue;
        best = std::min(best, polygon_distance(fp, footprint_polygon(o.shape, o.pose)));
    }
    return best;
}

Vec2 grasp_point(const SimObject& obj) {
    const Aabb b = local_bounds(obj.shape);
    const double ex = b.x_max - b.x_min, ey = b.y_max - b.y_min;
    if (std::max(ex, ey) < 1.5 * std::min(ex, ey)) return obj.com();
    Vec2 u = rotate(obj.com() - obj.pose.xy(), -obj.pose.yaw);
    if (ex >= ey) {
        u.y = (b.y_min + b.y_max) / 2;
    } else {
        u.x = (b.x_min + b.x_max) / 2;
    }
    return obj.pose.xy() + rotate(u, obj.pose.yaw);
}

std::size_t movable_count(const WorldState& world) {
    return static_cast<std::size_t>(
        std::count_if(world.objects.begin(), world.objects.end(), [](const SimObject& o) { return o.movable; }));
}

double compute_z(const WorldState& world, double x, double y, double yaw, Primitive primitive,
                 std::optional<double> held_height) {
    const auto& p = world.params;
    if (primitive == Primitive::Place && !held_height) {
        throw PreconditionError("place height requested with nothing held");
    }
    const Polygon region = square_region({x, y}, p.z_region_half_width, yaw);
    const Aabb box = aabb_of(region);
    double h_max = 0.0;
    for (const auto& o : world.objects) {
        if (world.is_held(o.id)) continue;
        if (!aabb_of(footprint_polygon(o.shape, o.pose)).intersects(box)) continue;
        for (const auto& patch : top_surfaces(o.shape, o.pose)) {
            if (auto v = max_height_over(patch, region)) h_max = std::max(h_max, *v);
        }
    }
    if (primitive == Primitive::Pick) {
        return std::max(0.0, h_max + p.z_pick_offset);
    }
    return h_max + *held_height / 2.0 + p.z_place_clear;
}

PickOutcome resolve_pick(WorldState& world, double x, double y, double z, double yaw) {
    if (world.gripper.is_holding()) {
        throw PreconditionError("pick requested while holding an object");
    }
    const Vec2 q{x, y};
    const auto top = top_object_at(world, q);
    if (!top) return {};
    const SimObject& cand = world.get(*top);
    if (!cand.movable) return {};
    if (z > cand.top() + 1e-6) return {};
    // Fingers sent below the object stop on whatever supports it.
    z = std::max(z, cand.base());
    if (grasp_line_distance(cand, q) > world.params.grasp_tolerance + kGeomEps) return {};
    if (width_across(cand.shape, cand.pose, yaw) > world.gripper.max_open_width + kGeomEps) return {};

    const Vec2 d = rotate(cand.pose.xy() - q, -yaw);
    world.gripper.holding = Held{cand.id, GraspTransform{d.x, d.y, cand.pose.z - z, cand.pose.yaw - yaw}};
    settle(world);
    return {true, cand.id};
}

Pose held_object_pose(const WorldState& world, double x, double y, double yaw) {
    if (!world.gripper.holding) throw PreconditionError("nothing held");
    const auto& g = world.gripper.holding->grasp;
    const SimObject& obj = world.get(world.gripper.holding->object_id);
    const Vec2 xy = Vec2{x, y} + rotate({g.dx, g.dy}, yaw);
    return Pose{xy.x, xy.y, obj.pose.z, normalize_yaw(yaw + g.dyaw, false)};
}

GripperTarget gripper_target_for(const WorldState& world, Vec2 object_xy, double object_yaw) {
    if (!world.gripper.holding) throw PreconditionError("nothing held");
    const auto& g = world.gripper.holding->grasp;
    const double yaw = normalize_yaw(object_yaw - g.dyaw, world.params.half_rotation);
    const Vec2 xy = object_xy - rotate({g.dx, g.dy}, yaw);
    return {xy.x, xy.y, yaw, normalize_yaw(yaw + g.dyaw, false)};
}

PlaceOutcome resolve_place(WorldState& world, double x, double y, double /*z*/, double yaw) {
    if (!world.gripper.holding) {
        throw PreconditionError("place requested with an empty gripper");
    }
    const auto& params = world.params;
    const int id = world.gripper.holding->object_id;
    Pose pose = held_object_pose(world, x, y, yaw);
    world.gripper.holding.reset();

    SimObject& obj = world.get(id);
    const double h = shape_height(obj.shape);
    const Polygon fp = footprint_polygon(obj.shape, pose);
    const double landing = landing_height(world, obj.shape, pose, id);
    pose.z = landing + h / 2.0;
    obj.pose = pose;

    if (landing <= params.support_tolerance) {
        return {false, id};
    }

    const Vec2 com = obj.com();
    std::vector<Contact> contacts;
    const Aabb box = aabb_of(fp);
    for (const auto& o : world.objects) {
        if (o.id == id) continue;
        if (!aabb_of(footprint_polygon(o.shape, o.pose)).intersects(box)) continue;
        for (const auto& patch : top_surfaces(o.shape, o.pose)) {
            const auto v = max_height_over(patch, fp);
            if (v && *v >= landing - params.support_tolerance) {
                contacts.push_back({o.id, clip_convex(patch.region, fp)});
            }
        }
    }

    if (std::abs(surface_height(world, com, id) - landing) <= params.support_tolerance) {
        return {false, id};
    }
    std::vector<Vec2> contact_points;
    for (const auto& c : contacts) contact_points.insert(contact_points.end(), c.region.begin(), c.region.end());
    const Polygon hull = convex_hull(contact_points);
    if (hull.size() >= 3 && polygon_contains(hull, com, kGeomEps)) {
        return {false, id};
    }

    // Topple: push the object away from its support in fixed increments.
    double total_area = 0.0;
    Vec2 weighted;
    std::vector<int> supports;
    for (const auto& c : contacts) {
        const double a = polygon_area(c.region);
        total_area += a;
        weighted = weighted + a * polygon_centroid(c.region);
        if (std::find(supports.begin(), supports.end(), c.object_id) == supports.end()) supports.push_back(c.object_id);
    }
    const Vec2 centroid = total_area > 0.0 ? (1.0 / total_area) * weighted : com;
    Vec2 dir = com - centroid;
    if (norm(dir) < 1e-9) dir = rotate({1.0, 0.0}, pose.yaw);
    dir = (1.0 / norm(dir)) * dir;

    Pose moved = pose;
    for (int k = 1; k <= 200; ++k) {
        Pose trial = pose;
        trial.x += k * params.topple_step * dir.x;
        trial.y += k * params.topple_step * dir.y;
        moved = clip_com(obj, trial, params.workspace);
        if (!overlaps_any(world, footprint_polygon(obj.shape, moved), supports)) break;
    }
    moved.z = landing_height(world, obj.shape, moved, id) + h / 2.0;
    obj.pose = moved;
    return {true, id};
}

void settle(WorldState& world) {
    const double tol = world.params.settle_tolerance;
    const std::size_t max_passes = world.objects.size() + 1;
    for (std::size_t pass = 0; pass < max_passes; ++pass) {
        std::vector<SimObject*> order;
        for (auto& o : world.objects) {
            if (o.movable && !world.is_held(o.id)) order.push_back(&o);
        }
        std::sort(order.begin(), order.end(), [](const SimObject* a, const SimObject* b) {
            const double ba = a->base(), bb = b->base();
            return ba != bb ? ba < bb : a->id < b->id;
        });
        bool moved = false;
        for (SimObject* o : order) {
            const double support = support_height(world, *o);
            if (o->base() > support + tol) {
                o->pose.z = support + shape_height(o->shape) / 2.0;
                moved = true;
            }
        }
        if (!moved) return;
    }
}

StepOutcome step(WorldState& world, const Action& action, bool gripper_heuristic) {
    const auto& ws = world.params.workspace;
    StepOutcome out;
    out.x = std::clamp(action.x, ws.x_min, ws.x_max);
    out.y = std::clamp(action.y, ws.y_min, ws.y_max);
    out.yaw = normalize_yaw(action.yaw, world.params.half_rotation);

    const bool holding = world.gripper.is_holding();
    if (gripper_heuristic) {
        out.primitive = holding ? Primitive::Place : Primitive::Pick;
        out.overridden = out.primitive != action.primitive;
    } else {
        out.primitive = action.primitive;
        if ((out.primitive == Primitive::Pick) == holding) {
            throw PreconditionError("primitive inconsistent with gripper state");
        }
    }

    if (out.primitive == Primitive::Pick) {
        out.z = action.z && std::isfinite(*action.z)
                    ? *action.z
                    : compute_z(world, out.x, out.y, out.yaw, Primitive::Pick, std::nullopt);
        const auto res = resolve_pick(world, out.x, out.y, out.z, out.yaw);
        out.grasped = res.grasped;
        out.object_id = res.object_id;
    } else {
        const double held_h = shape_height(world.get(world.gripper.holding->object_id).shape);
        out.z = action.z && std::isfinite(*action.z)
                    ? *action.z
                    : compute_z(world, out.x, out.y, out.yaw, Primitive::Place, held_h);
        const auto res = resolve_place(world, out.x, out.y, out.z, out.yaw);
        out.toppled = res.toppled;
        out.object_id = res.object_id;
    }
    settle(world);
    ++world.step_count;
    return out;
}

std::optional<Pose> sample_free_pose(const WorldState& world, const Shape& shape, const Aabb& bounds,
                                     double clearance, bool random_yaw, Rng& rng, int attempts,
                                     std::span<const int> ignore, double fixed_yaw) {
    for (int i = 0; i < attempts; ++i) {
        const double yaw = random_yaw ? rng.uniform(0.0, 2.0 * std::numbers::pi) : fixed_yaw;
        const Vec2 half = half_extents_at(shape, yaw);
        const double x0 = bounds.x_min + half.x, x1 = bounds.x_max - half.x;
        const double y0 = bounds.y_min + half.y, y1 = bounds.y_max - half.y;
        if (x1 < x0 || y1 < y0) continue;
        Pose pose{rng.uniform(x0, x1), rng.uniform(y0, y1), 0.0, yaw};
        if (clearance_to_others(world, shape, pose, ignore) < clearance) continue;
        pose.z = landing_height(world, shape, pose, -1) + shape_height(shape) / 2.0;
        return pose;
    }
    return std::nullopt;
}

// --- serialization ---------------------------------------------------------

namespace {

void put_shape(ByteWriter& w, const Shape& s) {
    w.put<std::uint8_t>(static_cast<std::uint8_t>(s.index()));
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Cuboid> || std::is_same_v<T, TriangularPrism> || std::is_same_v<T, Slab>) {
                w.put(v.lx), w.put(v.ly), w.put(v.lz);
            } else if constexpr (std::is_same_v<T, Cylinder>) {
                w.put(v.radius), w.put(v.height);
            } else if constexpr (std::is_same_v<T, Container>) {
                w.put(v.lx), w.put(v.ly), w.put(v.lz), w.put(v.wall), w.put(v.cavity_depth);
            } else {
                w.put<std::uint32_t>(static_cast<std::uint32_t>(v.footprint.size()));
                for (const auto& p : v.footprint) w.put(p.x), w.put(p.y);
                w.put(v.height);
            }
        },
        s);
}

Shape get_shape(ByteReader& r) {
    const auto tag = r.get<std::uint8_t>();
    switch (tag) {
        case 0: { double a = r.get<double>(), b = r.get<double>(), c = r.get<double>(); return Cuboid{a, b, c}; }
        case 1: { double a = r.get<double>(), b = r.get<double>(), c = r.get<double>(); return TriangularPrism{a, b, c}; }
        case 2: { double a = r.get<double>(), b = r.get<double>(); return Cylinder{a, b}; }
        case 3: {
            ConvexPrism p;
            const auto n = r.get<std::uint32_t>();
            for (std::uint32_t i = 0; i < n; ++i) {
                const double x = r.get<double>(), y = r.get<double>();
                p.footprint.push_back({x, y});
            }
            p.height = r.get<double>();
            return p;
        }
        case 4: {
            double a = r.get<double>(), b = r.get<double>(), c = r.get<double>(), d = r.get<double>(), e = r.get<double>();
            return Container{a, b, c, d, e};
        }
        case 5: { double a = r.get<double>(), b = r.get<double>(), c = r.get<double>(); return Slab{a, b, c}; }
        default: throw FormatError(r.offset(), "unknown shape tag");
    }
}

}  // namespace

std::string encode_world(const WorldState& world) {
    ByteWriter w;
    const auto& p = world.params;
    const auto& ws = p.workspace;
    for (double v : {ws.x_min, ws.x_max, ws.y_min, ws.y_max, ws.z_min, ws.z_max, p.z_pick_offset, p.z_place_clear,
                     p.z_region_half_width, p.grasp_tolerance, p.support_tolerance, p.settle_tolerance, p.topple_step}) {
        w.put(v);
    }
    w.put<std::uint8_t>(p.half_rotation);
    w.put<std::int32_t>(world.step_count);
    w.put<std::uint64_t>(world.episode_seed);
    w.put<std::int32_t>(world.next_id);
    w.put(world.gripper.max_open_width);
    w.put<std::uint8_t>(world.gripper.holding.has_value());
    if (world.gripper.holding) {
        const auto& h = *world.gripper.holding;
        w.put<std::int32_t>(h.object_id);
        w.put(h.grasp.dx), w.put(h.grasp.dy), w.put(h.grasp.dz), w.put(h.grasp.dyaw);
    }
    w.put<std::uint32_t>(static_cast<std::uint32_t>(world.objects.size()));
    for (const auto& o : world.objects) {
        w.put<std::int32_t>(o.id);
        put_shape(w, o.shape);
        w.put(o.pose.x), w.put(o.pose.y), w.put(o.pose.z), w.put(o.pose.yaw);
        w.put<std::uint8_t>(static_cast<std::uint8_t>(o.category));
        w.put<std::uint8_t>(o.movable);
        w.put<std::uint8_t>(o.in_play);
    }
    const std::string rng = world.rng.serialize();
    w.put<std::uint32_t>(static_cast<std::uint32_t>(rng.size()));
    w.put_string(rng);
    const auto& b = w.bytes();
    return std::string(b.begin(), b.end());
}

WorldState decode_world(std::string_view bytes) {
    ByteReader r({reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
    WorldState world;
    auto& p = world.params;
    auto& ws = p.workspace;
    for (double* v : {&ws.x_min, &ws.x_max, &ws.y_min, &ws.y_max, &ws.z_min, &ws.z_max, &p.z_pick_offset,
                      &p.z_place_clear, &p.z_region_half_width, &p.grasp_tolerance, &p.support_tolerance,
                      &p.settle_tolerance, &p.topple_step}) {
        *v = r.get<double>();
    }
    p.half_rotation = r.get<std::uint8_t>() != 0;
    world.step_count = r.get<std::int32_t>();
    world.episode_seed = r.get<std::uint64_t>();
    world.next_id = r.get<std::int32_t>();
    world.gripper.max_open_width = r.get<double>();
    if (r.get<std::uint8_t>() != 0) {
        Held h;
        h.object_id = r.get<std::int32_t>();
        h.grasp.dx = r.get<double>();
        h.grasp.dy = r.get<double>();
        h.grasp.dz = r.get<double>();
        h.grasp.dyaw = r.get<double>();
        world.gripper.holding = h;
    }
    const auto n = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n; ++i) {
        SimObject o;
        o.id = r.get<std::int32_t>();
        o.shape = get_shape(r);
        o.pose.x = r.get<double>();
        o.pose.y = r.get<double>();
        o.pose.z = r.get<double>();
        o.pose.yaw = r.get<double>();
        o.category = static_cast<Category>(r.get<std::uint8_t>());
        o.movable = r.get<std::uint8_t>() != 0;
        o.in_play = r.get<std::uint8_t>() != 0;
        world.objects.push_back(std::move(o));
    }
    const auto len = r.get<std::uint32_t>();
    world.rng = Rng::deserialize(r.get_string(len));
    return world;
}

bool same_state(const WorldState& a, const WorldState& b) { return encode_world(a) == encode_world(b); }

}  // namespace barm
