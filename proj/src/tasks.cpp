#include "barm/tasks.hpp"

#include "barm/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace barm {
namespace {

using std::numbers::pi;

// --- initialization helpers ---------------------------------------------------

struct Draft {
    Shape shape;
    Category category;
    bool movable = true;
};

class InitRetry : public Error {
public:
    InitRetry() : Error("initialization round failed") {}
};

int scatter_one(WorldState& w, const Draft& d, const TaskParams& p, const Aabb& bounds, double clearance) {
    const auto pose = sample_free_pose(w, d.shape, bounds, clearance, p.random_orientation, w.rng, 100);
    if (!pose) throw InitRetry();
    return w.add_object(d.shape, *pose, d.category, d.movable);
}

void scatter(WorldState& w, const std::vector<Draft>& drafts, const TaskParams& p) {
    for (const auto& d : drafts) scatter_one(w, d, p, p.bounds, kSeparation);
}

std::vector<Draft> cubes(int n, const TaskParams& p) {
    return std::vector<Draft>(static_cast<std::size_t>(n), Draft{cube_shape(p), Category::Block});
}

bool all_in_play(const WorldState& w) {
    return std::all_of(w.objects.begin(), w.objects.end(), [](const SimObject& o) { return o.in_play; });
}

const SimObject* first_of(const WorldState& w, Category c) {
    for (const auto& o : w.objects) {
        if (o.category == c) return &o;
    }
    return nullptr;
}

// Sort by base height, then id, so chains are read bottom-up.
std::vector<const SimObject*> bottom_up(std::vector<const SimObject*> v) {
    std::sort(v.begin(), v.end(), [](const SimObject* a, const SimObject* b) {
        return a->base() != b->base() ? a->base() < b->base() : a->id < b->id;
    });
    return v;
}

bool is_stack(const std::vector<const SimObject*>& sorted, double block) {
    if (sorted.empty()) return false;
    if (std::abs(sorted.front()->base()) > kLevelTolerance) return false;
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (!stacked_on(*sorted[i], *sorted[i - 1], block)) return false;
    }
    return true;
}

bool held_anything(const WorldState& w) { return w.gripper.is_holding(); }

// --- goal predicates -------------------------------------------------------------

bool goal_block_stacking(const WorldState& w, const TaskState&, const TaskParams& p) {
    if (held_anything(w) || !all_in_play(w)) return false;
    const auto blocks = objects_of(w, Category::Block);
    return static_cast<int>(blocks.size()) == p.num_objects && is_stack(bottom_up(blocks), p.block());
}

bool goal_house_1(const WorldState& w, const TaskState&, const TaskParams& p) {
    if (held_anything(w) || !all_in_play(w)) return false;
    const auto blocks = bottom_up(objects_of(w, Category::Block));
    const SimObject* tri = first_of(w, Category::Triangle);
    if (!tri || !is_stack(blocks, p.block())) return false;
    return stacked_on(*tri, *blocks.back(), p.block());
}

// Two supports next to each other with `top` spanning them.
bool pair_spanned(const SimObject& a, const SimObject& b, const SimObject& top, double block) {
    return adjacent(a, b, block) && spans(top, a, b);
}

bool goal_house_2(const WorldState& w, const TaskState&, const TaskParams& p) {
    if (held_anything(w) || !all_in_play(w)) return false;
    const auto blocks = objects_of(w, Category::Block);
    const SimObject* roof = first_of(w, Category::Roof);
    if (blocks.size() != 2 || !roof) return false;
    return std::abs(blocks[0]->base()) <= kLevelTolerance && pair_spanned(*blocks[0], *blocks[1], *roof, p.block());
}

bool goal_house_3_like(const WorldState& w, Category support, const TaskParams& p) {
    if (held_anything(w) || !all_in_play(w)) return false;
    const auto legs = objects_of(w, support);
    const SimObject* brick = first_of(w, Category::Brick);
    const SimObject* roof = first_of(w, Category::Roof);
    if (legs.size() != 2 || !brick || !roof) return false;
    return std::abs(legs[0]->base()) <= kLevelTolerance && pair_spanned(*legs[0], *legs[1], *brick, p.block()) &&
           stacked_on(*roof, *brick, p.block());
}

bool goal_house_3(const WorldState& w, const TaskState&, const TaskParams& p) {
    return goal_house_3_like(w, Category::Block, p);
}

bool goal_house_4(const WorldState& w, const TaskState&, const TaskParams& p) {
    if (held_anything(w) || !all_in_play(w)) return false;
    const auto blocks = objects_of(w, Category::Block);
    const SimObject* brick = first_of(w, Category::Brick);
    const SimObject* roof = first_of(w, Category::Roof);
    if (blocks.size() != 4 || !brick || !roof) return false;
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = i + 1; j < 4; ++j) {
            std::vector<const SimObject*> upper;
            for (std::size_t k = 0; k < 4; ++k) {
                if (k != i && k != j) upper.push_back(blocks[k]);
            }
            const auto& a = *blocks[i];
            const auto& b = *blocks[j];
            if (std::abs(a.base()) > kLevelTolerance || !pair_spanned(a, b, *brick, p.block())) continue;
            const bool upper_ok = std::all_of(upper.begin(), upper.end(), [&](const SimObject* u) {
                return rests_on(*u, *brick) && footprint_contains(brick->shape, brick->pose, u->com());
            });
            if (upper_ok && pair_spanned(*upper[0], *upper[1], *roof, p.block())) return true;
        }
    }
    return false;
}

bool goal_improvise_2(const WorldState& w, const TaskState&, const TaskParams& p) {
    if (held_anything(w) || !all_in_play(w)) return false;
    const auto legs = objects_of(w, Category::Random);
    const SimObject* roof = first_of(w, Category::Roof);
    if (legs.size() != 2 || !roof) return false;
    return std::abs(legs[0]->base()) <= kLevelTolerance && pair_spanned(*legs[0], *legs[1], *roof, p.block());
}

bool goal_improvise_3(const WorldState& w, const TaskState&, const TaskParams& p) {
    return goal_house_3_like(w, Category::Random, p);
}

bool all_movables_inside(const WorldState& w, Category container_category, bool below_rim) {
    if (held_anything(w) || !all_in_play(w)) return false;
    const SimObject* container = first_of(w, container_category);
    if (!container) return false;
    for (const auto& o : w.objects) {
        if (!o.movable) continue;
        if (!inside_container(o, *container, below_rim)) return false;
    }
    return true;
}

bool goal_bin_packing(const WorldState& w, const TaskState&, const TaskParams&) {
    return all_movables_inside(w, Category::Container, true);
}

bool goal_bottle_arrangement(const WorldState& w, const TaskState&, const TaskParams&) {
    // Bottles stand taller than the tray walls.
    return all_movables_inside(w, Category::Container, false);
}

bool goal_box_palletizing(const WorldState& w, const TaskState& s, const TaskParams&) {
    const auto* ps = std::get_if<PalletState>(&s);
    return ps && !held_anything(w) && all_in_play(w) && ps->next_slot == ps->num_boxes;
}

bool goal_covid(const WorldState& w, const TaskState& s, const TaskParams&) {
    const auto* cs = std::get_if<CovidState>(&s);
    return cs && !held_anything(w) && cs->rounds >= 3;
}

// --- initializers ---------------------------------------------------------------

TaskState init_block_stacking(WorldState& w, const TaskParams& p) {
    scatter(w, cubes(p.num_objects, p), p);
    return {};
}

TaskState init_house_1(WorldState& w, const TaskParams& p) {
    auto drafts = cubes(p.num_objects - 1, p);
    drafts.push_back({triangle_shape(p), Category::Triangle});
    scatter(w, drafts, p);
    return {};
}

TaskState init_house_2(WorldState& w, const TaskParams& p) {
    auto drafts = cubes(2, p);
    drafts.push_back({roof_shape(p), Category::Roof});
    scatter(w, drafts, p);
    return {};
}

TaskState init_house_3(WorldState& w, const TaskParams& p) {
    auto drafts = cubes(2, p);
    drafts.push_back({brick_shape(p), Category::Brick});
    drafts.push_back({roof_shape(p), Category::Roof});
    scatter(w, drafts, p);
    return {};
}

TaskState init_house_4(WorldState& w, const TaskParams& p) {
    auto drafts = cubes(4, p);
    drafts.push_back({brick_shape(p), Category::Brick});
    drafts.push_back({roof_shape(p), Category::Roof});
    scatter(w, drafts, p);
    return {};
}

// Both random legs share one height so the roof sits level.
std::vector<Draft> random_legs(WorldState& w, const TaskParams& p) {
    const double height = w.rng.uniform(0.015, 0.035) * p.size_scale;
    std::vector<Draft> drafts;
    for (int i = 0; i < 2; ++i) drafts.push_back({random_block_shape(height, p, w.rng), Category::Random});
    return drafts;
}

TaskState init_improvise_2(WorldState& w, const TaskParams& p) {
    auto drafts = random_legs(w, p);
    drafts.push_back({roof_shape(p), Category::Roof});
    scatter(w, drafts, p);
    return {};
}

TaskState init_improvise_3(WorldState& w, const TaskParams& p) {
    auto drafts = random_legs(w, p);
    drafts.push_back({brick_shape(p), Category::Brick});
    drafts.push_back({roof_shape(p), Category::Roof});
    scatter(w, drafts, p);
    return {};
}

Shape bin_object(Rng& rng) {
    switch (rng.uniform_int(0, 5)) {
        case 0: return Cuboid{0.04, 0.04, 0.04};
        case 1: return Cuboid{0.04, 0.04, 0.02};
        case 2: return Cuboid{0.08, 0.04, 0.04};
        case 3: return Cuboid{0.08, 0.04, 0.02};
        case 4: return Cylinder{0.02, 0.04};
        default: return TriangularPrism{0.04, 0.04, 0.04};
    }
}

Category bin_category(const Shape& s) {
    if (std::holds_alternative<TriangularPrism>(s)) return Category::Triangle;
    if (const auto* c = std::get_if<Cuboid>(&s); c && c->lx > c->ly) return Category::Brick;
    return Category::Block;
}

TaskState init_bin_packing(WorldState& w, const TaskParams& p) {
    std::vector<Draft> drafts{{kBin, Category::Container, false}};
    for (int i = 0; i < p.num_objects; ++i) {
        Shape s = bin_object(w.rng);
        const Category c = bin_category(s);
        drafts.push_back({std::move(s), c});
    }
    scatter(w, drafts, p);
    return {};
}

TaskState init_bottle_arrangement(WorldState& w, const TaskParams& p) {
    std::vector<Draft> drafts{{kTray, Category::Container, false}};
    for (int i = 0; i < p.num_objects; ++i) drafts.push_back({kBottle, Category::Bottle});
    scatter(w, drafts, p);
    return {};
}

void spawn_box(WorldState& w, PalletState& s, const TaskParams& p) {
    for (double clearance : {kSeparation, 0.005}) {
        const auto pose = sample_free_pose(w, kBox, p.bounds, clearance, p.random_orientation, w.rng, 200);
        if (pose) {
            s.loose_box = w.add_object(kBox, *pose, Category::Box);
            return;
        }
    }
    s.loose_box = -1;
}

TaskState init_box_palletizing(WorldState& w, const TaskParams& p) {
    PalletState s;
    s.num_boxes = p.num_objects;
    s.pallet_id = scatter_one(w, {kPallet, Category::Pallet, false}, p, p.bounds, kSeparation);
    const SimObject& pallet = w.get(s.pallet_id);
    for (const auto& local : pallet_slots_local(s.num_boxes)) {
        const Vec2 xy = pallet.pose.xy() + rotate(local.xy(), pallet.pose.yaw);
        s.slots.push_back({xy.x, xy.y, local.z, normalize_yaw(pallet.pose.yaw + local.yaw, false)});
    }
    s.filled.assign(s.slots.size(), false);
    const auto pose = sample_free_pose(w, kBox, p.bounds, kSeparation, p.random_orientation, w.rng, 100);
    if (!pose) throw InitRetry();
    s.loose_box = w.add_object(kBox, *pose, Category::Box);
    return s;
}

void on_step_box_palletizing(WorldState& w, TaskState& ts, const StepOutcome&, const TaskParams& p) {
    auto& s = std::get<PalletState>(ts);
    if (s.loose_box < 0 || w.is_held(s.loose_box) || s.next_slot >= s.num_boxes) return;
    SimObject& box = w.get(s.loose_box);
    const int layer = s.next_slot / 6;
    for (std::size_t i = static_cast<std::size_t>(layer) * 6; i < std::min<std::size_t>(s.slots.size(), (layer + 1) * 6); ++i) {
        if (s.filled[i]) continue;
        const Pose& slot = s.slots[i];
        const bool seated = norm(box.pose.xy() - slot.xy()) <= kSlotPosTolerance &&
                            angle_distance(box.pose.yaw, slot.yaw, pi) <= kSlotYawTolerance &&
                            std::abs(box.pose.z - slot.z) <= 1e-3;
        if (!seated) continue;
        s.filled[i] = true;
        ++s.next_slot;
        box.movable = false;
        s.loose_box = -1;
        if (s.next_slot < s.num_boxes) spawn_box(w, s, p);
        return;
    }
}

TaskState init_covid(WorldState& w, const TaskParams& p) {
    CovidState s;
    const double gyaw = p.random_orientation && w.rng.uniform01() < 0.5 ? pi / 2 : 0.0;
    const Vec2 axis = rotate({1.0, 0.0}, gyaw);
    const double pad = std::get<Slab>(kCovidPad).lx;
    const Vec2 half = gyaw == 0.0 ? Vec2{1.5 * pad, pad / 2} : Vec2{pad / 2, 1.5 * pad};
    if (p.bounds.x_max - p.bounds.x_min < 2 * half.x || p.bounds.y_max - p.bounds.y_min < 2 * half.y) {
        throw InitRetry();
    }
    const Vec2 c{w.rng.uniform(p.bounds.x_min + half.x, p.bounds.x_max - half.x),
                 w.rng.uniform(p.bounds.y_min + half.y, p.bounds.y_max - half.y)};
    const double pad_h = std::get<Slab>(kCovidPad).lz;
    auto add_pad = [&](double offset) {
        const Vec2 xy = c + offset * axis;
        return w.add_object(kCovidPad, {xy.x, xy.y, pad_h / 2, gyaw}, Category::Container, false);
    };
    s.new_box = add_pad(-pad);
    s.test_area = add_pad(0.0);
    s.used_box = add_pad(pad);

    // Three swabs and three tubes in shuffled rows of the new-tube box.
    std::vector<bool> is_tube{false, false, false, true, true, true};
    for (std::size_t i = is_tube.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(w.rng.uniform_int(0, static_cast<std::int64_t>(i)));
        std::swap(is_tube[i], is_tube[j]);
    }
    const Pose box = w.get(s.new_box).pose;
    for (std::size_t k = 0; k < is_tube.size(); ++k) {
        const Vec2 local{w.rng.uniform(-0.015, 0.015), -0.05 + 0.02 * static_cast<double>(k)};
        const Vec2 xy = box.xy() + rotate(local, gyaw);
        const Shape& shape = is_tube[k] ? kTube : kSwab;
        w.add_object(shape, {xy.x, xy.y, pad_h + shape_height(shape) / 2, gyaw},
                     is_tube[k] ? Category::Tube : Category::Swab);
    }
    return s;
}

void on_step_covid(WorldState& w, TaskState& ts, const StepOutcome&, const TaskParams&) {
    auto& s = std::get<CovidState>(ts);
    const SimObject& test = w.get(s.test_area);
    const SimObject& used = w.get(s.used_box);

    int swab = -1, tube = -1;
    bool outstanding = false;
    int collected = 0;
    for (const auto& o : w.objects) {
        if (w.is_held(o.id)) continue;
        if (o.category == Category::Swab && swab < 0 && resting_on_pad(o, test)) swab = o.id;
        if (o.category == Category::Tube && tube < 0 && resting_on_pad(o, test)) tube = o.id;
        if (o.category == Category::UsedTube) {
            if (resting_on_pad(o, used)) {
                ++collected;
            } else {
                outstanding = true;
            }
        }
    }
    if (w.gripper.is_holding() && w.get(w.gripper.holding->object_id).category == Category::UsedTube) {
        outstanding = true;
    }

    if (swab >= 0 && tube >= 0 && !outstanding) {
        // The user swabs, seals the tube and drops it somewhere in the test area.
        const Aabb area = aabb_of(footprint_polygon(test.shape, test.pose));
        w.remove_object(swab);  // invalidates references into w.objects
        SimObject& t = w.get(tube);
        t.category = Category::UsedTube;
        const int ignore[] = {tube, s.test_area};
        if (auto pose = sample_free_pose(w, kTube, area, 0.0, true, w.rng, 100, ignore)) {
            t.pose = *pose;
            t.pose.z = landing_height(w, t.shape, t.pose, t.id) + shape_height(t.shape) / 2;
        }
        outstanding = true;
    }
    s.rounds = std::min(collected, 3);
    if (outstanding) {
        s.phase = CovidState::Phase::Collect;
    } else if (swab >= 0) {
        s.phase = CovidState::Phase::PresentTube;
    } else {
        s.phase = CovidState::Phase::PresentSwab;
    }
}

// --- registry --------------------------------------------------------------------

TaskSpec structure(std::string name, int n, bool variable, int max_steps, std::function<int(int)> optimal,
                   decltype(TaskSpec::init) init, decltype(TaskSpec::goal) goal) {
    TaskSpec s;
    s.name = std::move(name);
    s.num_objects = n;
    s.variable_num_objects = variable;
    s.max_steps = max_steps;
    s.optimal_steps = std::move(optimal);
    s.supports_deconstruction = true;
    s.init = std::move(init);
    s.goal = std::move(goal);
    return s;
}

std::vector<TaskSpec> builtin_tasks() {
    auto two_n_minus_1 = [](int n) { return 2 * (n - 1); };
    auto two_n = [](int n) { return 2 * n; };
    auto fixed = [](int k) { return [k](int) { return k; }; };
    std::vector<TaskSpec> v;
    v.push_back(structure("block_stacking", 4, true, 10, two_n_minus_1, init_block_stacking, goal_block_stacking));
    v.push_back(structure("house_building_1", 4, true, 10, two_n_minus_1, init_house_1, goal_house_1));
    v.push_back(structure("house_building_2", 3, false, 10, fixed(4), init_house_2, goal_house_2));
    v.push_back(structure("house_building_3", 4, false, 10, fixed(6), init_house_3, goal_house_3));
    v.push_back(structure("house_building_4", 6, false, 20, fixed(10), init_house_4, goal_house_4));
    v.push_back(structure("improvise_house_building_2", 3, false, 10, fixed(4), init_improvise_2, goal_improvise_2));
    v.push_back(structure("improvise_house_building_3", 4, false, 10, fixed(6), init_improvise_3, goal_improvise_3));

    TaskSpec bin{"bin_packing", 8, true, 20, two_n, false, init_bin_packing, goal_bin_packing, {}};
    TaskSpec bottle{"bottle_arrangement", 6, false, 20, fixed(12), false, init_bottle_arrangement,
                    goal_bottle_arrangement, {}};
    TaskSpec pallet{"box_palletizing", 18, true, 40, two_n, false, init_box_palletizing, goal_box_palletizing,
                    on_step_box_palletizing};
    TaskSpec covid{"covid_test", 6, false, 30, fixed(18), false, init_covid, goal_covid, on_step_covid};
    v.push_back(std::move(bin));
    v.push_back(std::move(bottle));
    v.push_back(std::move(pallet));
    v.push_back(std::move(covid));
    return v;
}

struct Registry {
    std::mutex mu;
    std::map<std::string, std::shared_ptr<const TaskSpec>, std::less<>> tasks;

    Registry() {
        for (auto& t : builtin_tasks()) {
            auto name = t.name;
            tasks.emplace(std::move(name), std::make_shared<const TaskSpec>(std::move(t)));
        }
    }
};

Registry& registry() {
    static Registry r;
    return r;
}

}  // namespace

// --- public API -----------------------------------------------------------------

void register_task(TaskSpec spec) {
    if (spec.name.empty()) throw RegistrationError("task name must not be empty");
    if (!spec.init || !spec.goal || !spec.optimal_steps) {
        throw RegistrationError("task '" + spec.name + "' needs init, goal and optimal_steps");
    }
    if (spec.num_objects < 1 || spec.max_steps < 1) {
        throw RegistrationError("task '" + spec.name + "' needs positive num_objects and max_steps");
    }
    auto& r = registry();
    std::lock_guard lock(r.mu);
    if (r.tasks.contains(spec.name)) throw RegistrationError("task '" + spec.name + "' is already registered");
    auto name = spec.name;
    r.tasks.emplace(std::move(name), std::make_shared<const TaskSpec>(std::move(spec)));
}

std::shared_ptr<const TaskSpec> find_task(std::string_view name) {
    auto& r = registry();
    std::lock_guard lock(r.mu);
    const auto it = r.tasks.find(name);
    return it == r.tasks.end() ? nullptr : it->second;
}

std::shared_ptr<const TaskSpec> get_task(std::string_view name) {
    auto t = find_task(name);
    if (!t) throw ConfigError("task", "unknown task '" + std::string(name) + "'");
    return t;
}

std::vector<std::string> task_names() {
    auto& r = registry();
    std::lock_guard lock(r.mu);
    std::vector<std::string> out;
    for (const auto& [name, _] : r.tasks) out.push_back(name);
    return out;
}

TaskParams make_task_params(const TaskSpec& spec, const EnvConfig& cfg, Rng& rng) {
    TaskParams p;
    if (cfg.num_objects > 0 && cfg.num_objects != spec.num_objects && !spec.variable_num_objects) {
        throw ConfigError("num_objects", "task '" + spec.name + "' has a fixed object count of " +
                                             std::to_string(spec.num_objects));
    }
    p.num_objects = cfg.num_objects > 0 ? cfg.num_objects : spec.num_objects;
    p.size_scale = rng.uniform(cfg.object_scale_min, cfg.object_scale_max) / kReferenceObjectScale;
    p.random_orientation = cfg.random_orientation;
    p.bounds = {cfg.workspace.x_min, cfg.workspace.x_max, cfg.workspace.y_min, cfg.workspace.y_max};
    return p;
}

int resolve_max_steps(const TaskSpec& spec, const EnvConfig& cfg) {
    return cfg.max_steps > 0 ? cfg.max_steps : spec.max_steps;
}

TaskState init_episode(const TaskSpec& spec, WorldState& world, const TaskParams& params) {
    const auto objects = world.objects;
    const int next_id = world.next_id;
    for (int round = 0; round < 1000; ++round) {
        try {
            return spec.init(world, params);
        } catch (const InitRetry&) {
            world.objects = objects;
            world.next_id = next_id;
        } catch (const InitInfeasible&) {
            world.objects = objects;
            world.next_id = next_id;
        }
    }
    throw InitInfeasible("task '" + spec.name + "': no feasible initial layout for num_objects=" +
                         std::to_string(params.num_objects) + " in workspace [" + std::to_string(params.bounds.x_min) +
                         ", " + std::to_string(params.bounds.x_max) + "] x [" + std::to_string(params.bounds.y_min) +
                         ", " + std::to_string(params.bounds.y_max) + "]");
}

Shape cube_shape(const TaskParams& p) {
    const double b = p.block();
    return Cuboid{b, b, b};
}

Shape triangle_shape(const TaskParams& p) {
    const double b = p.block();
    return TriangularPrism{b, b, b};
}

Shape roof_shape(const TaskParams& p) {
    const double b = p.block();
    return TriangularPrism{4 * b, b, b};
}

Shape brick_shape(const TaskParams& p) {
    const double b = p.block();
    return Cuboid{4 * b, b, b};
}

Shape random_block_shape(double height, const TaskParams& p, Rng& rng) {
    for (;;) {
        const int n = static_cast<int>(rng.uniform_int(4, 6));
        std::vector<Vec2> pts;
        for (int i = 0; i < n; ++i) {
            const double r = rng.uniform(0.012, 0.015) * p.size_scale;
            const double a = rng.uniform(0.0, 2 * pi);
            pts.push_back({r * std::cos(a), r * std::sin(a)});
        }
        Polygon hull = convex_hull(pts);
        if (hull.size() < 3 || polygon_area(hull) < 2e-4 * p.size_scale * p.size_scale) continue;
        const Vec2 c = polygon_centroid(hull);
        for (auto& v : hull) v = v - c;
        // Keep the footprint inside the nominal 3 cm box after recentering.
        const Aabb b = aabb_of(hull);
        const double lim = 0.015 * p.size_scale;
        if (b.x_min < -lim || b.x_max > lim || b.y_min < -lim || b.y_max > lim) continue;
        return ConvexPrism{std::move(hull), height};
    }
}

Polygon cavity_polygon(const SimObject& container) {
    const auto& c = std::get<Container>(container.shape);
    const double ix = c.lx / 2 - c.wall, iy = c.ly / 2 - c.wall;
    Polygon p{{-ix, -iy}, {ix, -iy}, {ix, iy}, {-ix, iy}};
    for (auto& v : p) v = container.pose.xy() + rotate(v, container.pose.yaw);
    return p;
}

double cavity_floor(const SimObject& container) {
    const auto& c = std::get<Container>(container.shape);
    return container.top() - c.cavity_depth;
}

std::vector<Pose> pallet_slots_local(int num_boxes) {
    const double base = std::get<Slab>(kPallet).lz;
    const double h = std::get<Cuboid>(kBox).lz;
    std::vector<Pose> out;
    for (int layer = 0; static_cast<int>(out.size()) < num_boxes; ++layer) {
        const double z = base + layer * h + h / 2;
        for (int k = 0; k < 6 && static_cast<int>(out.size()) < num_boxes; ++k) {
            if (layer % 2 == 0) {
                // 3 x 2 grid, boxes' long axis along the pallet's y.
                out.push_back({-0.048 + 0.048 * (k % 3), k < 3 ? -0.0375 : 0.0375, z, pi / 2});
            } else {
                out.push_back({k < 3 ? -0.0375 : 0.0375, -0.048 + 0.048 * (k % 3), z, 0.0});
            }
        }
    }
    return out;
}

Vec2 covid_used_slot(const SimObject& used_box, int round) {
    const Vec2 local{0.0, -0.035 + 0.035 * std::clamp(round, 0, 2)};
    return used_box.pose.xy() + rotate(local, used_box.pose.yaw);
}

bool rests_on(const SimObject& upper, const SimObject& lower) {
    return std::abs(upper.base() - lower.top()) <= kLevelTolerance;
}

bool stacked_on(const SimObject& upper, const SimObject& lower, double block) {
    return rests_on(upper, lower) && norm(upper.com() - lower.com()) <= block / 2 + kGeomEps;
}

bool adjacent(const SimObject& a, const SimObject& b, double block) {
    const double d = norm(a.com() - b.com());
    return std::abs(a.base() - b.base()) <= kLevelTolerance && std::abs(a.top() - b.top()) <= kLevelTolerance &&
           d >= block - kGeomEps && d <= block * 5.0 / 3.0 + kGeomEps;
}

bool spans(const SimObject& top, const SimObject& a, const SimObject& b) {
    return rests_on(top, a) && rests_on(top, b) && footprint_contains(top.shape, top.pose, a.com()) &&
           footprint_contains(top.shape, top.pose, b.com());
}

bool inside_container(const SimObject& obj, const SimObject& container, bool below_rim) {
    const Polygon cavity = cavity_polygon(container);
    for (const auto& v : footprint_polygon(obj.shape, obj.pose)) {
        if (!polygon_contains(cavity, v, 5e-4)) return false;
    }
    if (below_rim && obj.top() > container.top() + kLevelTolerance) return false;
    return obj.base() >= cavity_floor(container) - kLevelTolerance;
}

bool resting_on_pad(const SimObject& obj, const SimObject& pad) {
    return rests_on(obj, pad) && footprint_contains(pad.shape, pad.pose, obj.com());
}

std::vector<const SimObject*> objects_of(const WorldState& world, Category c) {
    std::vector<const SimObject*> out;
    for (const auto& o : world.objects) {
        if (o.category == c) out.push_back(&o);
    }
    return out;
}

}  // namespace barm
