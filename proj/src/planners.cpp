#include "barm/planners.hpp"

#include "barm/errors.hpp"
#include "barm/pool.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

namespace barm {
namespace {

using std::numbers::pi;

constexpr float kNaN = std::numeric_limits<float>::quiet_NaN();
constexpr std::uint64_t kDeconStream = 0xDEC0DE;
constexpr double kPoseMatch = 0.004;  // COM distance for "this role is already in place"

Waypoint pick_at(const SimObject& obj, bool half_rotation) {
    const Vec2 g = grasp_point(obj);
    return {Primitive::Pick, g.x, g.y, normalize_yaw(obj.pose.yaw, half_rotation)};
}

Waypoint place_for(const WorldState& w, Vec2 object_xy, double object_yaw) {
    const auto t = gripper_target_for(w, object_xy, object_yaw);
    return {Primitive::Place, t.x, t.y, t.yaw};
}

bool inside_bounds(const Aabb& outer, const Aabb& inner) {
    return inner.x_min >= outer.x_min - kGeomEps && inner.x_max <= outer.x_max + kGeomEps &&
           inner.y_min >= outer.y_min - kGeomEps && inner.y_max <= outer.y_max + kGeomEps;
}

bool inside_bounds(const Aabb& outer, Vec2 p) {
    return p.x >= outer.x_min && p.x <= outer.x_max && p.y >= outer.y_min && p.y <= outer.y_max;
}

// Object directly reachable: it is the top object at its grasp point and the height
// heuristic does not stop the fingers above it.
bool pickable(const WorldState& w, const SimObject& o) {
    if (!o.movable || !o.in_play || w.is_held(o.id)) return false;
    const Vec2 g = grasp_point(o);
    const auto top = top_object_at(w, g);
    if (!top || *top != o.id) return false;
    const double yaw = normalize_yaw(o.pose.yaw, w.params.half_rotation);
    return compute_z(w, g.x, g.y, yaw, Primitive::Pick, std::nullopt) <= o.top() + 1e-6;
}

const SimObject* held(const WorldState& w) {
    return w.gripper.holding ? &w.get(w.gripper.holding->object_id) : nullptr;
}

// Sets the held object down somewhere free.
Waypoint put_aside(const WorldState& w, const TaskParams& p, Rng& rng) {
    const SimObject& h = *held(w);
    for (double clearance : {kSeparation, 0.005, 0.0}) {
        for (int i = 0; i < 50; ++i) {
            auto pose = sample_free_pose(w, h.shape, p.bounds, clearance, p.random_orientation, rng, 1);
            if (!pose) continue;
            const Waypoint wp = place_for(w, pose->xy(), pose->yaw);
            if (inside_bounds(p.bounds, Vec2{wp.x, wp.y})) return wp;
        }
    }
    throw PlannerStuck("no free pose to set the held object down");
}

// --- structure tasks ------------------------------------------------------------

struct Plan {
    std::vector<RoleTarget> roles;
    std::vector<int> assigned;  // object ids of satisfied roles, prefix of roles
    bool feasible = false;
    int anchor = -1;
    int k = 0;
};

double expected_base(const WorldState& w, const RoleTarget& role, const std::vector<int>& assigned) {
    double base = 0.0;
    for (int s : role.supports) base = std::max(base, w.get(assigned[static_cast<std::size_t>(s)]).top());
    return base;
}

bool role_satisfied(const WorldState& w, const SimObject& o, const RoleTarget& role, const std::vector<int>& assigned) {
    if (o.category != role.category || w.is_held(o.id) || !o.in_play) return false;
    if (norm(o.com() - role.xy) > kPoseMatch) return false;
    if (std::abs(o.base() - expected_base(w, role, assigned)) > kLevelTolerance) return false;
    for (int s : role.supports) {
        if (!rests_on(o, w.get(assigned[static_cast<std::size_t>(s)]))) return false;
    }
    if (role.category == Category::Roof || role.category == Category::Brick) {
        if (angle_distance(o.pose.yaw, role.yaw, pi) > 0.05) return false;
    }
    return true;
}

Aabb footprint_box(const Shape& shape, Vec2 xy, double yaw) {
    return aabb_of(footprint_polygon(shape, Pose{xy.x, xy.y, 0.0, yaw}));
}

const SimObject* shape_source(const WorldState& w, Category c, const std::vector<int>& exclude) {
    for (const auto& o : w.objects) {
        if (o.category == c && std::find(exclude.begin(), exclude.end(), o.id) == exclude.end()) return &o;
    }
    return nullptr;
}

// Object the expert would move into the next role: the held one if it fits, else the
// first reachable spare.
const SimObject* next_source(const WorldState& w, Category c, const std::vector<int>& assigned) {
    if (const SimObject* h = held(w)) return h->category == c ? h : nullptr;
    for (const auto& o : w.objects) {
        if (o.category != c || std::find(assigned.begin(), assigned.end(), o.id) != assigned.end()) continue;
        if (pickable(w, o)) return &o;
    }
    return shape_source(w, c, assigned);
}

int directions_for(std::string_view task) {
    return task == "block_stacking" || task == "house_building_1" ? 1 : 4;
}

Plan evaluate_plan(const WorldState& w, std::string_view task, const TaskParams& p, const SimObject& anchor, int k) {
    Plan plan;
    plan.anchor = anchor.id;
    plan.k = k;
    plan.roles = structure_blueprint(task, p, anchor.com(), anchor.pose.yaw, k);
    plan.assigned.push_back(anchor.id);
    for (std::size_t i = 1; i < plan.roles.size(); ++i) {
        const SimObject* match = nullptr;
        for (const auto& o : w.objects) {
            if (std::find(plan.assigned.begin(), plan.assigned.end(), o.id) != plan.assigned.end()) continue;
            if (role_satisfied(w, o, plan.roles[i], plan.assigned)) {
                match = &o;
                break;
            }
        }
        if (!match) break;
        plan.assigned.push_back(match->id);
    }
    if (plan.assigned.size() == plan.roles.size()) {
        plan.feasible = true;
        return plan;
    }
    // Every remaining role must fit in the workspace and the next ground role needs a free
    // spot. Spares in the way of a raised role are cleared by the expert instead.
    plan.feasible = true;
    for (std::size_t i = plan.assigned.size(); i < plan.roles.size(); ++i) {
        const auto& role = plan.roles[i];
        const bool next = i == plan.assigned.size();
        const SimObject* src = next ? next_source(w, role.category, plan.assigned)
                                    : shape_source(w, role.category, plan.assigned);
        if (!src || !inside_bounds(p.bounds, footprint_box(src->shape, role.xy, role.yaw))) {
            plan.feasible = false;
            break;
        }
        if (next && role.supports.empty()) {
            // Only the part that will be moved there may overlap the target.
            std::vector<int> ignore = plan.assigned;
            ignore.push_back(src->id);
            const Pose target{role.xy.x, role.xy.y, 0.0, role.yaw};
            if (clearance_to_others(w, src->shape, target, ignore) < 0.002) plan.feasible = false;
        }
    }
    return plan;
}

Waypoint structure_expert(const WorldState& w, std::string_view task, const TaskParams& p, Rng& rng) {
    const auto blueprint = structure_blueprint(task, p, {}, 0.0, 0);
    if (blueprint.empty()) throw PlannerStuck("no blueprint for task");
    const Category anchor_cat = blueprint.front().category;

    std::optional<Plan> best;
    for (const auto& o : w.objects) {
        if (o.category != anchor_cat || w.is_held(o.id) || !o.in_play) continue;
        if (std::abs(o.base()) > kLevelTolerance) continue;
        for (int k = 0; k < directions_for(task); ++k) {
            Plan plan = evaluate_plan(w, task, p, o, k);
            const auto key = [](const Plan& pl) { return std::pair{pl.feasible, pl.assigned.size()}; };
            if (!best || key(plan) > key(*best)) best = std::move(plan);
        }
    }
    const bool half = w.params.half_rotation;
    const SimObject* h = held(w);
    if (!best || !best->feasible) {
        // Every anchor is too close to the edge: move one inward, far enough for the whole structure.
        const double reach = 3.0 * p.block();
        const Aabb inner{p.bounds.x_min + reach, p.bounds.x_max - reach, p.bounds.y_min + reach, p.bounds.y_max - reach};
        if (h && h->category == anchor_cat) {
            for (int i = 0; i < 50; ++i) {
                auto pose = sample_free_pose(w, h->shape, inner, kSeparation, p.random_orientation, rng, 1);
                if (pose) return place_for(w, pose->xy(), pose->yaw);
            }
        }
        if (h) return put_aside(w, p, rng);
        for (const auto& o : w.objects) {
            if (o.category == anchor_cat && pickable(w, o)) return pick_at(o, half);
        }
        throw PlannerStuck("no feasible structure layout");
    }
    if (best->assigned.size() == best->roles.size()) {
        if (h) return put_aside(w, p, rng);
        throw PlannerStuck("structure already complete");
    }
    const RoleTarget& next = best->roles[best->assigned.size()];

    if (h) {
        if (h->category != next.category) return put_aside(w, p, rng);
        const Waypoint wp = place_for(w, next.xy, next.yaw);
        if (!inside_bounds(p.bounds, Vec2{wp.x, wp.y})) return put_aside(w, p, rng);
        return wp;
    }

    const auto& used = best->assigned;
    const SimObject* src = next_source(w, next.category, used);
    if (src && !next.supports.empty()) {
        const Pose target{next.xy.x, next.xy.y, 0.0, next.yaw};
        for (const auto& o : w.objects) {
            if (!o.movable || o.id == src->id || std::find(used.begin(), used.end(), o.id) != used.end()) continue;
            std::vector<int> others;
            for (const auto& x : w.objects) {
                if (x.id != o.id) others.push_back(x.id);
            }
            if (clearance_to_others(w, src->shape, target, others) >= 0.002) continue;
            if (pickable(w, o)) return pick_at(o, half);
        }
    }
    for (const auto& o : w.objects) {
        if (o.category != next.category || std::find(used.begin(), used.end(), o.id) != used.end()) continue;
        if (pickable(w, o)) return pick_at(o, half);
    }
    // The part we need is buried: clear whatever sits on top of it, unless it is part of the build.
    for (const auto& o : w.objects) {
        if (o.category != next.category || std::find(used.begin(), used.end(), o.id) != used.end()) continue;
        const auto top = top_object_at(w, grasp_point(o));
        if (top && std::find(used.begin(), used.end(), *top) == used.end() && pickable(w, w.get(*top))) {
            return pick_at(w.get(*top), half);
        }
    }
    throw PlannerStuck("no reachable object for the next role");
}

// --- bin packing ---------------------------------------------------------------------

const SimObject* container_of(const WorldState& w) {
    for (const auto& o : w.objects) {
        if (std::holds_alternative<Container>(o.shape)) return &o;
    }
    return nullptr;
}

// Sum of flat top-surface area at exactly `level` under the footprint, and whether
// anything under it rises above the level.
double flat_support_area(const WorldState& w, const Polygon& fp, double level, int exclude) {
    double area = 0.0;
    const Aabb box = aabb_of(fp);
    for (const auto& o : w.objects) {
        if (o.id == exclude || w.is_held(o.id)) continue;
        if (!aabb_of(footprint_polygon(o.shape, o.pose)).intersects(box)) continue;
        for (const auto& patch : top_surfaces(o.shape, o.pose)) {
            if (patch.grad.x != 0.0 || patch.grad.y != 0.0) continue;
            if (std::abs(patch.h0 - level) > 1e-9) continue;
            area += polygon_area(clip_convex(patch.region, fp));
        }
    }
    return area;
}

Waypoint bin_packing_expert(const WorldState& w, const TaskState&, const TaskParams&, Rng&) {
    const SimObject* bin = container_of(w);
    if (!bin) throw PlannerStuck("no bin");
    const bool half = w.params.half_rotation;
    if (const SimObject* h = held(w)) {
        const auto& c = std::get<Container>(bin->shape);
        const double cx = c.lx / 2 - c.wall, cy = c.ly / 2 - c.wall;
        const double rim = bin->top();
        const double height = shape_height(h->shape);
        const double need = polygon_area(footprint_polygon(h->shape, h->pose));
        constexpr double gap = 0.0;  // flush: the cavity is an exact multiple of the 4 cm module

        // Edges in the bin frame that a new footprint can sit flush against.
        std::vector<double> us{-cx}, vs{-cy}, u_hi{cx}, v_hi{cy};
        for (const auto& o : w.objects) {
            if (o.id == bin->id || o.id == h->id || !inside_container(o, *bin)) continue;
            Polygon local;
            for (const auto& p : footprint_polygon(o.shape, o.pose)) local.push_back(rotate(p - bin->pose.xy(), -bin->pose.yaw));
            const Aabb b = aabb_of(local);
            us.push_back(b.x_max);
            vs.push_back(b.y_max);
            u_hi.push_back(b.x_min);
            v_hi.push_back(b.y_min);
        }

        struct Candidate {
            double landing, v, u, yaw;
            Vec2 xy;
        };
        std::optional<Candidate> best;
        for (double off : {0.0, pi / 2}) {
            const double yaw = bin->pose.yaw + off;
            const Aabb lb = aabb_of(footprint_polygon(h->shape, Pose{0, 0, 0, off}));
            const double u_min = -cx - lb.x_min + gap, u_max = cx - lb.x_max - gap;
            const double v_min = -cy - lb.y_min + gap, v_max = cy - lb.y_max - gap;
            std::vector<double> cu, cv;
            for (double e : us) cu.push_back(e - lb.x_min + gap);
            for (double e : u_hi) cu.push_back(e - lb.x_max - gap);
            for (double e : vs) cv.push_back(e - lb.y_min + gap);
            for (double e : v_hi) cv.push_back(e - lb.y_max - gap);
            for (double v : cv) {
                if (v < v_min - 1e-12 || v > v_max + 1e-12) continue;
                for (double u : cu) {
                    if (u < u_min - 1e-12 || u > u_max + 1e-12) continue;
                    const Vec2 xy = bin->pose.xy() + rotate({u, v}, bin->pose.yaw);
                    const Pose pose{xy.x, xy.y, 0.0, yaw};
                    const double landing = landing_height(w, h->shape, pose, h->id);
                    if (landing + height > rim + 1e-9) continue;
                    if (best && std::tuple{landing, v, u} >= std::tuple{best->landing, best->v, best->u}) continue;
                    const Polygon fp = footprint_polygon(h->shape, pose);
                    if (flat_support_area(w, fp, landing, h->id) < 0.999 * need) continue;
                    best = Candidate{landing, v, u, yaw, xy};
                }
            }
        }
        if (!best) throw PlannerStuck("no room left in the bin");
        return place_for(w, best->xy, normalize_yaw(best->yaw, false));
    }
    const SimObject* choice = nullptr;
    auto key = [](const SimObject& o) {
        return std::tuple{polygon_area(footprint_polygon(o.shape, o.pose)), shape_height(o.shape), -o.id};
    };
    for (const auto& o : w.objects) {
        if (!o.movable || inside_container(o, *bin) || !pickable(w, o)) continue;
        if (!choice || key(o) > key(*choice)) choice = &o;
    }
    if (!choice) throw PlannerStuck("nothing left to pack");
    return pick_at(*choice, half);
}

// --- bottle arrangement --------------------------------------------------------------

Waypoint bottle_expert(const WorldState& w, const TaskState&, const TaskParams&, Rng&) {
    const SimObject* tray = container_of(w);
    if (!tray) throw PlannerStuck("no tray");
    if (const SimObject* h = held(w)) {
        for (double sy : {-0.03, 0.03}) {
            for (double sx : {-0.06, 0.0, 0.06}) {
                const Vec2 slot = tray->pose.xy() + rotate({sx, sy}, tray->pose.yaw);
                const bool taken = std::any_of(w.objects.begin(), w.objects.end(), [&](const SimObject& o) {
                    return o.category == Category::Bottle && !w.is_held(o.id) && norm(o.com() - slot) < 0.04;
                });
                if (!taken) return place_for(w, slot, h->pose.yaw);
            }
        }
        throw PlannerStuck("tray is full");
    }
    for (const auto& o : w.objects) {
        if (o.category == Category::Bottle && !inside_container(o, *tray, false) && pickable(w, o)) {
            return pick_at(o, w.params.half_rotation);
        }
    }
    throw PlannerStuck("no bottle to move");
}

// --- box palletizing ------------------------------------------------------------------

Waypoint pallet_expert(const WorldState& w, const TaskState& ts, const TaskParams&, Rng&) {
    const auto& s = std::get<PalletState>(ts);
    if (const SimObject* h = held(w)) {
        const int layer = s.next_slot / 6;
        for (std::size_t i = static_cast<std::size_t>(layer) * 6; i < s.slots.size(); ++i) {
            if (s.filled[i]) continue;
            const Pose& slot = s.slots[i];
            // Either end of the box may face forward; keep the one closer to its current yaw.
            double yaw = slot.yaw;
            if (angle_distance(h->pose.yaw, yaw + pi, 2 * pi) < angle_distance(h->pose.yaw, yaw, 2 * pi)) yaw += pi;
            return place_for(w, slot.xy(), normalize_yaw(yaw, false));
        }
        throw PlannerStuck("no free slot");
    }
    if (s.loose_box < 0) throw PlannerStuck("no loose box");
    const SimObject& box = w.get(s.loose_box);
    if (!pickable(w, box)) throw PlannerStuck("loose box unreachable");
    return pick_at(box, w.params.half_rotation);
}

// --- covid test -------------------------------------------------------------------------

Waypoint covid_expert(const WorldState& w, const TaskState& ts, const TaskParams&, Rng&) {
    const auto& s = std::get<CovidState>(ts);
    const SimObject& test = w.get(s.test_area);
    const SimObject& used = w.get(s.used_box);
    const bool half = w.params.half_rotation;
    auto on_pad = [&](Category c, const SimObject& pad) {
        return std::any_of(w.objects.begin(), w.objects.end(), [&](const SimObject& o) {
            return o.category == c && !w.is_held(o.id) && resting_on_pad(o, pad);
        });
    };
    if (const SimObject* h = held(w)) {
        const double yaw = test.pose.yaw;
        switch (h->category) {
            case Category::Swab: return place_for(w, test.pose.xy() + rotate({0.0, -0.03}, yaw), yaw);
            case Category::Tube: return place_for(w, test.pose.xy() + rotate({0.0, 0.03}, yaw), yaw);
            case Category::UsedTube: {
                int collected = 0;
                for (const auto& o : w.objects) {
                    if (o.category == Category::UsedTube && !w.is_held(o.id) && resting_on_pad(o, used)) ++collected;
                }
                return place_for(w, covid_used_slot(used, collected), used.pose.yaw);
            }
            default: throw PlannerStuck("holding an unexpected object");
        }
    }
    auto first_pickable = [&](Category c, const SimObject* exclude_pad) -> const SimObject* {
        for (const auto& o : w.objects) {
            if (o.category != c || !pickable(w, o)) continue;
            if (exclude_pad && resting_on_pad(o, *exclude_pad)) continue;
            return &o;
        }
        return nullptr;
    };
    if (const SimObject* t = first_pickable(Category::UsedTube, &used)) return pick_at(*t, half);
    if (!on_pad(Category::Swab, test)) {
        if (const SimObject* o = first_pickable(Category::Swab, &test)) return pick_at(*o, half);
    } else if (!on_pad(Category::Tube, test)) {
        if (const SimObject* o = first_pickable(Category::Tube, &test)) return pick_at(*o, half);
    }
    throw PlannerStuck("no covid action applies");
}

// --- registry -----------------------------------------------------------------------------

struct ExpertRegistry {
    std::mutex mu;
    std::map<std::string, ExpertFn, std::less<>> experts;

    ExpertRegistry() {
        for (const char* name : {"block_stacking", "house_building_1", "house_building_2", "house_building_3",
                                 "house_building_4", "improvise_house_building_2", "improvise_house_building_3"}) {
            const std::string task = name;
            experts.emplace(task, [task](const WorldState& w, const TaskState&, const TaskParams& p, Rng& rng) {
                return structure_expert(w, task, p, rng);
            });
        }
        experts.emplace("bin_packing", bin_packing_expert);
        experts.emplace("bottle_arrangement", bottle_expert);
        experts.emplace("box_palletizing", pallet_expert);
        experts.emplace("covid_test", covid_expert);
    }
};

ExpertRegistry& experts() {
    static ExpertRegistry r;
    return r;
}

ExpertFn expert_for(std::string_view task) {
    auto& r = experts();
    std::lock_guard lock(r.mu);
    const auto it = r.experts.find(task);
    if (it == r.experts.end()) throw PlannerStuck("no expert registered for task '" + std::string(task) + "'");
    return it->second;
}

ActionVec to_action(const Waypoint& wp) {
    return {static_cast<float>(wp.primitive == Primitive::Place), static_cast<float>(wp.x), static_cast<float>(wp.y),
            kNaN, static_cast<float>(wp.yaw)};
}

bool poses_match(const WorldState& a, const WorldState& b) {
    if (a.objects.size() != b.objects.size()) return false;
    if (a.gripper.is_holding() != b.gripper.is_holding()) return false;
    if (a.gripper.holding && a.gripper.holding->object_id != b.gripper.holding->object_id) return false;
    for (std::size_t i = 0; i < a.objects.size(); ++i) {
        const auto& x = a.objects[i];
        const auto& y = b.objects[i];
        if (x.id != y.id) return false;
        if (a.is_held(x.id)) continue;  // held pose is not meaningful
        if (std::abs(x.pose.x - y.pose.x) > 1e-6 || std::abs(x.pose.y - y.pose.y) > 1e-6 ||
            std::abs(x.pose.z - y.pose.z) > 1e-6 || angle_distance(x.pose.yaw, y.pose.yaw, 2 * pi) > 1e-6) {
            return false;
        }
    }
    return true;
}

}  // namespace

void register_expert(const std::string& task, ExpertFn fn) {
    auto& r = experts();
    std::lock_guard lock(r.mu);
    if (r.experts.contains(task)) throw RegistrationError("expert for '" + task + "' is already registered");
    r.experts.emplace(task, std::move(fn));
}

bool has_expert(std::string_view task) {
    auto& r = experts();
    std::lock_guard lock(r.mu);
    return r.experts.find(task) != r.experts.end();
}

ActionVec waypoint_next_action(const Episode& ep) {
    const auto fn = expert_for(ep.task().name);
    Rng rng(derive_seed(ep.seed(), static_cast<std::uint64_t>(ep.world().step_count)));
    return to_action(fn(ep.world(), ep.task_state(), ep.params(), rng));
}

Trajectory waypoint_rollout(const std::shared_ptr<const TaskSpec>& task, const EnvConfig& cfg, std::uint64_t seed) {
    Episode ep(task, cfg);
    Trajectory traj{task->name, seed, false, {}};
    Observation obs = ep.reset(seed);
    while (!ep.done()) {
        ActionVec a;
        try {
            a = waypoint_next_action(ep);
        } catch (const PlannerStuck&) {
            return traj;
        }
        StepResult r = ep.step(a);
        traj.transitions.push_back({std::move(obs), r.executed, r.reward, r.done});
        obs = std::move(r.obs);
        if (r.reward > 0.0f) traj.success = true;
    }
    return traj;
}

std::vector<RoleTarget> structure_blueprint(std::string_view task, const TaskParams& p, Vec2 a, double yaw, int k) {
    const double b = p.block();
    const double d = 4.0 * b / 3.0;
    const double dir_yaw = yaw + k * pi / 2;
    const Vec2 u = rotate({1.0, 0.0}, dir_yaw);
    const Vec2 next = a + d * u;
    const Vec2 mid = a + (d / 2) * u;
    const double ry = normalize_yaw(dir_yaw, false);
    using C = Category;
    std::vector<RoleTarget> r;
    if (task == "block_stacking" || task == "house_building_1") {
        const int cubes = task == "block_stacking" ? p.num_objects : p.num_objects - 1;
        for (int i = 0; i < cubes; ++i) {
            r.push_back({C::Block, a, yaw, i == 0 ? std::vector<int>{} : std::vector<int>{i - 1}});
        }
        if (task == "house_building_1") r.push_back({C::Triangle, a, yaw, {cubes - 1}});
    } else if (task == "house_building_2") {
        r = {{C::Block, a, yaw, {}}, {C::Block, next, ry, {}}, {C::Roof, mid, ry, {0, 1}}};
    } else if (task == "house_building_3") {
        r = {{C::Block, a, yaw, {}}, {C::Block, next, ry, {}}, {C::Brick, mid, ry, {0, 1}}, {C::Roof, mid, ry, {2}}};
    } else if (task == "house_building_4") {
        r = {{C::Block, a, yaw, {}}, {C::Block, next, ry, {}}, {C::Brick, mid, ry, {0, 1}},
             {C::Block, a, ry, {2}},  {C::Block, next, ry, {2}}, {C::Roof, mid, ry, {3, 4}}};
    } else if (task == "improvise_house_building_2") {
        r = {{C::Random, a, yaw, {}}, {C::Random, next, yaw, {}}, {C::Roof, mid, ry, {0, 1}}};
    } else if (task == "improvise_house_building_3") {
        r = {{C::Random, a, yaw, {}}, {C::Random, next, yaw, {}}, {C::Brick, mid, ry, {0, 1}}, {C::Roof, mid, ry, {2}}};
    }
    return r;
}

std::vector<ActionVec> reverse_actions(const std::vector<ActionVec>& decon) {
    if (decon.size() % 2 != 0) throw InvalidInput("deconstruction must alternate pick and place");
    std::vector<ActionVec> out;
    for (std::size_t i = decon.size(); i >= 2; i -= 2) {
        ActionVec pick = decon[i - 1];  // where the object was put down
        ActionVec place = decon[i - 2];  // where it was taken from
        pick[kSlotP] = 0.0f;
        place[kSlotP] = 1.0f;
        out.push_back(pick);
        out.push_back(place);
    }
    return out;
}

std::optional<DeconResult> decon_generate(const std::shared_ptr<const TaskSpec>& task, const EnvConfig& cfg,
                                          std::uint64_t seed) {
    if (!task->supports_deconstruction) {
        throw InvalidInput("task '" + task->name + "' does not support deconstruction");
    }
    Episode ep(task, cfg);
    ep.reset(seed);
    WorldState goal = ep.world();
    const TaskParams params = ep.params();
    const TaskState state = ep.task_state();
    Rng rng(derive_seed(seed, kDeconStream));

    // Assemble the finished structure at a random placement.
    std::vector<int> assigned;
    std::vector<RoleTarget> roles;
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
        const Vec2 anchor{rng.uniform(params.bounds.x_min, params.bounds.x_max),
                          rng.uniform(params.bounds.y_min, params.bounds.y_max)};
        const double yaw = params.random_orientation ? rng.uniform(0.0, 2 * pi) : 0.0;
        roles = structure_blueprint(task->name, params, anchor, yaw, 0);
        if (roles.empty()) throw InvalidInput("task '" + task->name + "' has no structure blueprint");
        WorldState w = ep.world();
        assigned.clear();
        bool ok = true;
        for (const auto& role : roles) {
            const SimObject* src = shape_source(w, role.category, assigned);
            if (!src) throw InvalidInput("blueprint of '" + task->name + "' does not match its objects");
            SimObject& o = w.get(src->id);
            const double base = expected_base(w, role, assigned);
            o.pose = {role.xy.x, role.xy.y, base + shape_height(o.shape) / 2, normalize_yaw(role.yaw, false)};
            // COM and pose origin coincide for every structure shape.
            assigned.push_back(o.id);
            if (!inside_bounds(params.bounds, aabb_of(footprint_polygon(o.shape, o.pose)))) ok = false;
        }
        if (!ok) continue;
        goal = std::move(w);
        placed = true;
    }
    if (!placed) return std::nullopt;
    if (!task->goal(goal, state, params) || !unsettled_objects(goal).empty()) return std::nullopt;

    // Take it apart top-down, leaving the anchor in place.
    ep.reset_to(goal, state, params);
    std::vector<WorldState> states{ep.world()};
    std::vector<ActionVec> decon;
    const bool half = cfg.half_rotation;
    for (std::size_t i = roles.size() - 1; i >= 1; --i) {
        const SimObject& obj = ep.world().get(assigned[i]);
        const ActionVec pick = to_action(pick_at(obj, half));
        const StepResult picked = ep.step(pick);
        if (!picked.outcome.grasped || picked.outcome.object_id != obj.id) return std::nullopt;
        states.push_back(ep.world());
        decon.push_back(pick);

        const WorldState& w = ep.world();
        const SimObject& h = *held(w);
        std::optional<Waypoint> target;
        for (int tries = 0; tries < 200 && !target; ++tries) {
            auto pose = sample_free_pose(w, h.shape, params.bounds, kSeparation, params.random_orientation, rng, 1);
            if (!pose) continue;
            const Waypoint wp = place_for(w, pose->xy(), pose->yaw);
            if (inside_bounds(params.bounds, Vec2{wp.x, wp.y})) target = wp;
        }
        if (!target) return std::nullopt;
        const ActionVec place = to_action(*target);
        const StepResult r = ep.step(place);
        if (r.outcome.toppled || !unsettled_objects(ep.world()).empty()) return std::nullopt;
        states.push_back(ep.world());
        decon.push_back(place);
    }

    // Replay the reversed list from the dispersed state and check every intermediate state.
    DeconResult out;
    out.initial = ep.world();
    out.initial.step_count = 0;
    out.params = params;
    out.deconstruction = decon;
    const auto construction = reverse_actions(decon);
    Episode replay(task, cfg);
    Observation obs = replay.reset_to(out.initial, state, params);
    Trajectory& traj = out.trajectory;
    traj.task = task->name;
    traj.seed = seed;
    for (std::size_t j = 0; j < construction.size(); ++j) {
        StepResult r = replay.step(construction[j]);
        const bool last = j + 1 == construction.size();
        if (!poses_match(replay.world(), states[states.size() - 2 - j])) return std::nullopt;
        if (r.done != last || (r.reward > 0.0f) != last) return std::nullopt;
        traj.transitions.push_back({std::move(obs), r.executed, r.reward, r.done});
        obs = std::move(r.obs);
    }
    traj.success = !traj.transitions.empty() && traj.transitions.back().reward == 1.0f;
    if (!traj.success) return std::nullopt;
    return out;
}

Trajectory expert_episode(const std::shared_ptr<const TaskSpec>& task, const EnvConfig& cfg, std::uint64_t seed) {
    if (task->supports_deconstruction && !structure_blueprint(task->name, TaskParams{}, {}, 0.0, 0).empty()) {
        if (auto r = decon_generate(task, cfg, seed)) return std::move(r->trajectory);
        return Trajectory{task->name, seed, false, {}};
    }
    return waypoint_rollout(task, cfg, seed);
}

std::uint64_t attempt_seed(std::uint64_t base, std::uint64_t index) { return derive_seed(base, index); }

namespace {

// Runs attempts [first, first + count) in parallel and returns them in order.
std::vector<Trajectory> run_batch(WorkerPool& pool, const std::shared_ptr<const TaskSpec>& task, const EnvConfig& cfg,
                                  std::uint64_t seed, std::size_t first, std::size_t count) {
    std::vector<Trajectory> out(count);
    pool.parallel_for(count, [&](std::size_t i) { out[i] = expert_episode(task, cfg, attempt_seed(seed, first + i)); });
    return out;
}

std::size_t batch_size(int workers) { return static_cast<std::size_t>(std::max(1, workers) * 4); }

}  // namespace

GenerationStats generate_demos(const std::shared_ptr<const TaskSpec>& task, int n, const EnvConfig& cfg,
                               std::uint64_t seed, int workers, const std::function<void(Trajectory&&)>& sink) {
    if (n < 1) throw InvalidInput("episode count must be at least 1");
    WorkerPool pool(workers);
    GenerationStats stats;
    const auto budget = static_cast<std::size_t>(2 * n);
    std::size_t next = 0;
    while (stats.successes < n && next < budget) {
        const std::size_t count = std::min(batch_size(workers), budget - next);
        auto batch = run_batch(pool, task, cfg, seed, next, count);
        next += count;
        for (auto& t : batch) {
            if (stats.successes == n) break;
            ++stats.attempts;
            if (!t.success) continue;
            ++stats.successes;
            sink(std::move(t));
        }
    }
    if (stats.successes < n) {
        throw GenerationError("task '" + task->name + "': only " + std::to_string(stats.successes) + " of " +
                              std::to_string(stats.attempts) + " expert attempts succeeded (needed " +
                              std::to_string(n) + ")");
    }
    return stats;
}

std::vector<Trajectory> generate_demos(const std::shared_ptr<const TaskSpec>& task, int n, const EnvConfig& cfg,
                                       std::uint64_t seed, int workers) {
    std::vector<Trajectory> out;
    generate_demos(task, n, cfg, seed, workers, [&](Trajectory&& t) { out.push_back(std::move(t)); });
    return out;
}

void run_expert_episodes(const std::shared_ptr<const TaskSpec>& task, int count, const EnvConfig& cfg,
                         std::uint64_t seed, int workers, const std::function<void(Trajectory&&)>& sink) {
    WorkerPool pool(workers);
    std::size_t next = 0;
    const auto total = static_cast<std::size_t>(std::max(0, count));
    while (next < total) {
        const std::size_t n = std::min(batch_size(workers), total - next);
        auto batch = run_batch(pool, task, cfg, seed, next, n);
        next += n;
        for (auto& t : batch) sink(std::move(t));
    }
}

}  // namespace barm
