#include "barm/errors.hpp"
#include "barm/tasks.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>

using namespace barm;
using std::numbers::pi;

namespace {

struct Table2Row {
    int objects;
    int optimal;
    int max_steps;
};

// Object counts, optimal and maximum step counts of the benchmark table.
const std::map<std::string, Table2Row> kTable2 = {
    {"block_stacking", {4, 6, 10}},
    {"house_building_1", {4, 6, 10}},
    {"house_building_2", {3, 4, 10}},
    {"house_building_3", {4, 6, 10}},
    {"house_building_4", {6, 10, 20}},
    {"improvise_house_building_2", {3, 4, 10}},
    {"improvise_house_building_3", {4, 6, 10}},
    {"bin_packing", {8, 16, 20}},
    {"bottle_arrangement", {6, 12, 20}},
    {"box_palletizing", {18, 36, 40}},
    {"covid_test", {6, 18, 30}},
};

WorldState fresh_world(std::uint64_t seed) {
    WorldState w;
    w.rng = Rng(seed);
    w.gripper.max_open_width = gripper_open_width("kuka");
    return w;
}

TaskParams unit_params(int n) {
    TaskParams p;
    p.num_objects = n;
    p.size_scale = 1.0;
    return p;
}

int add(WorldState& w, const Shape& s, double x, double y, double base, Category c, double yaw = 0.0) {
    return w.add_object(s, {x, y, base + shape_height(s) / 2, yaw}, c);
}

int movable_count_of(const WorldState& w) {
    int n = 0;
    for (const auto& o : w.objects) n += o.movable ? 1 : 0;
    return n;
}

}  // namespace

TEST(Registry, HasTheElevenTasks) {
    const auto names = task_names();
    EXPECT_EQ(names.size(), kTable2.size());
    for (const auto& [name, row] : kTable2) EXPECT_NE(find_task(name), nullptr) << name;
}

TEST(Registry, UnknownAndDuplicateNames) {
    EXPECT_EQ(find_task("no_such_task"), nullptr);
    try {
        get_task("no_such_task");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "task");
    }
    TaskSpec dup = *get_task("block_stacking");
    EXPECT_THROW(register_task(dup), RegistrationError);
    TaskSpec unnamed = dup;
    unnamed.name = "";
    EXPECT_THROW(register_task(unnamed), RegistrationError);
    TaskSpec no_goal = dup;
    no_goal.name = "block_stacking_without_goal";
    no_goal.goal = nullptr;
    EXPECT_THROW(register_task(no_goal), RegistrationError);
}

TEST(Table2, ObjectCountsAndStepBudgets) {
    for (const auto& [name, row] : kTable2) {
        const auto spec = get_task(name);
        EXPECT_EQ(spec->num_objects, row.objects) << name;
        EXPECT_EQ(spec->optimal_steps(spec->num_objects), row.optimal) << name;
        EXPECT_EQ(spec->max_steps, row.max_steps) << name;
        EXPECT_EQ(resolve_max_steps(*spec, EnvConfig{}), row.max_steps) << name;
    }
    // Counting formulas: 2(N-1) for stacking, 2N for packing and palletizing.
    EXPECT_EQ(get_task("block_stacking")->optimal_steps(5), 8);
    EXPECT_EQ(get_task("house_building_1")->optimal_steps(3), 4);
    EXPECT_EQ(get_task("bin_packing")->optimal_steps(6), 12);
    EXPECT_EQ(get_task("box_palletizing")->optimal_steps(12), 24);
}

TEST(TaskParams, CountOverridesAndScale) {
    Rng rng(3);
    EnvConfig cfg;
    cfg.num_objects = 5;
    EXPECT_EQ(make_task_params(*get_task("block_stacking"), cfg, rng).num_objects, 5);
    try {
        make_task_params(*get_task("house_building_2"), cfg, rng);
        FAIL() << "fixed-count task accepted an override";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "num_objects");
    }
    cfg = EnvConfig{};
    cfg.object_scale_min = 0.6;
    cfg.object_scale_max = 0.6;
    EXPECT_DOUBLE_EQ(make_task_params(*get_task("block_stacking"), cfg, rng).block(), kNominalBlock);
    cfg.object_scale_min = 0.54;
    cfg.object_scale_max = 0.66;
    for (int i = 0; i < 50; ++i) {
        const double b = make_task_params(*get_task("block_stacking"), cfg, rng).block();
        EXPECT_GE(b, kNominalBlock * 0.9 - 1e-12);
        EXPECT_LE(b, kNominalBlock * 1.1 + 1e-12);
    }
}

// Properties of freshly initialized episodes across many seeds.
TEST(Init, ScatteredSettledAndNotSolved) {
    for (const auto& [name, row] : kTable2) {
        const auto spec = get_task(name);
        for (std::uint64_t seed = 0; seed < 25; ++seed) {
            WorldState w = fresh_world(seed);
            Rng prng(seed);
            const TaskParams p = make_task_params(*spec, EnvConfig{}, prng);
            const TaskState st = init_episode(*spec, w, p);
            SCOPED_TRACE(name + " seed " + std::to_string(seed));

            EXPECT_TRUE(unsettled_objects(w).empty());
            EXPECT_FALSE(spec->goal(w, st, p));
            for (const auto& o : w.objects) {
                const Aabb b = aabb_of(footprint_polygon(o.shape, o.pose));
                EXPECT_GE(b.x_min, p.bounds.x_min - 1e-9);
                EXPECT_LE(b.x_max, p.bounds.x_max + 1e-9);
                EXPECT_GE(b.y_min, p.bounds.y_min - 1e-9);
                EXPECT_LE(b.y_max, p.bounds.y_max + 1e-9);
            }
            if (name == "box_palletizing") {
                EXPECT_EQ(movable_count_of(w), 1);  // boxes arrive one at a time
                continue;
            }
            EXPECT_EQ(movable_count_of(w), row.objects);
            if (name == "covid_test") continue;  // swabs and tubes start packed in their box
            for (const auto& o : w.objects) {
                if (!o.movable) continue;
                const int self[] = {o.id};
                EXPECT_GE(clearance_to_others(w, o.shape, o.pose, self), kSeparation - 1e-9);
            }
        }
    }
}

TEST(Init, SameSeedSameWorld) {
    for (const auto& [name, row] : kTable2) {
        const auto spec = get_task(name);
        WorldState a = fresh_world(11), b = fresh_world(11);
        Rng ra(11), rb(11);
        const auto pa = make_task_params(*spec, EnvConfig{}, ra);
        const auto pb = make_task_params(*spec, EnvConfig{}, rb);
        init_episode(*spec, a, pa);
        init_episode(*spec, b, pb);
        EXPECT_TRUE(same_state(a, b)) << name;
    }
}

TEST(Goals, BlockStacking) {
    const auto spec = get_task("block_stacking");
    const TaskParams p = unit_params(4);
    const Shape cube = cube_shape(p);
    WorldState w = fresh_world(0);
    for (int i = 0; i < 4; ++i) add(w, cube, 0.4, 0.0, 0.03 * i, Category::Block);
    EXPECT_TRUE(spec->goal(w, {}, p));

    WorldState shifted = w;
    shifted.objects[3].pose.x += 0.016;  // COM offset beyond half a block
    EXPECT_FALSE(spec->goal(shifted, {}, p));

    WorldState held = w;
    held.gripper.holding = Held{3, {}};
    EXPECT_FALSE(spec->goal(held, {}, p));

    WorldState out = w;
    out.objects[0].in_play = false;
    EXPECT_FALSE(spec->goal(out, {}, p));

    WorldState gap = w;
    gap.objects[3].pose.z += 0.001;  // floating above the stack
    EXPECT_FALSE(spec->goal(gap, {}, p));
}

TEST(Goals, HouseBuilding2) {
    const auto spec = get_task("house_building_2");
    const TaskParams p = unit_params(3);
    auto build = [&](double spacing) {
        WorldState w = fresh_world(0);
        add(w, cube_shape(p), 0.40, 0.0, 0.0, Category::Block);
        add(w, cube_shape(p), 0.40 + spacing, 0.0, 0.0, Category::Block);
        add(w, roof_shape(p), 0.40 + spacing / 2, 0.0, 0.03, Category::Roof);
        return w;
    };
    // Supports must be between one and 5/3 blocks apart.
    EXPECT_TRUE(spec->goal(build(0.03), {}, p));
    EXPECT_TRUE(spec->goal(build(0.04), {}, p));
    EXPECT_TRUE(spec->goal(build(0.05), {}, p));
    EXPECT_FALSE(spec->goal(build(0.06), {}, p));

    WorldState no_roof = build(0.04);
    no_roof.objects[2].pose.z = 0.015;
    no_roof.objects[2].pose.y = 0.1;
    EXPECT_FALSE(spec->goal(no_roof, {}, p));
}

TEST(Goals, HouseBuilding4) {
    const auto spec = get_task("house_building_4");
    const TaskParams p = unit_params(6);
    WorldState w = fresh_world(0);
    add(w, cube_shape(p), 0.40, 0.0, 0.0, Category::Block);
    add(w, cube_shape(p), 0.44, 0.0, 0.0, Category::Block);
    add(w, brick_shape(p), 0.42, 0.0, 0.03, Category::Brick);
    add(w, cube_shape(p), 0.40, 0.0, 0.06, Category::Block);
    add(w, cube_shape(p), 0.44, 0.0, 0.06, Category::Block);
    add(w, roof_shape(p), 0.42, 0.0, 0.09, Category::Roof);
    EXPECT_TRUE(spec->goal(w, {}, p));

    WorldState missing_level = w;
    missing_level.objects[4].pose = {0.55, 0.1, 0.015, 0.0};
    EXPECT_FALSE(spec->goal(missing_level, {}, p));
}

TEST(Containers, BinAndTrayMembership) {
    WorldState w = fresh_world(0);
    const int bin = w.add_object(kBin, {0.4, 0.0, 0.04, 0.0}, Category::Container, false);
    const int cube = add(w, Cuboid{0.04, 0.04, 0.04}, 0.4, 0.0, 0.008, Category::Block);
    EXPECT_TRUE(inside_container(w.get(cube), w.get(bin)));
    // Cavity is 0.16 x 0.128; a cube flush with the inner wall is still inside.
    w.get(cube).pose.x = 0.4 + 0.08 - 0.02;
    EXPECT_TRUE(inside_container(w.get(cube), w.get(bin)));
    w.get(cube).pose.x = 0.4 + 0.08 - 0.019;
    EXPECT_FALSE(inside_container(w.get(cube), w.get(bin)));

    const int tray = w.add_object(kTray, {0.4, 0.3, 0.025, 0.0}, Category::Container, false);
    const int bottle = add(w, kBottle, 0.4, 0.3, 0.008, Category::Bottle);
    EXPECT_FALSE(inside_container(w.get(bottle), w.get(tray)));
    EXPECT_TRUE(inside_container(w.get(bottle), w.get(tray), false));
}

TEST(Pallet, SlotsTileTheLayers) {
    const auto slots = pallet_slots_local(18);
    ASSERT_EQ(slots.size(), 18u);
    const Shape pallet = kPallet;
    const Polygon pallet_fp = footprint_polygon(pallet, {0, 0, 0.015, 0});
    for (std::size_t layer = 0; layer < 3; ++layer) {
        for (std::size_t i = layer * 6; i < layer * 6 + 6; ++i) {
            // Seated box center: pallet top + filled layers + half a box.
            EXPECT_NEAR(slots[i].z, 0.03 + 0.045 * static_cast<double>(layer) + 0.0225, 1e-12);
            const Polygon fi = footprint_polygon(kBox, slots[i]);
            for (const auto& v : fi) EXPECT_TRUE(polygon_contains(pallet_fp, v, 1e-9));
            for (std::size_t j = i + 1; j < layer * 6 + 6; ++j) {
                EXPECT_LE(polygon_area(clip_convex(fi, footprint_polygon(kBox, slots[j]))), 1e-12);
            }
        }
        // Layers alternate by a quarter turn.
        if (layer > 0) {
            EXPECT_NEAR(angle_distance(slots[layer * 6].yaw, slots[(layer - 1) * 6].yaw, pi), pi / 2, 1e-12);
        }
    }
}

TEST(Covid, SwabAndTubeBecomeUsedTube) {
    const auto spec = get_task("covid_test");
    WorldState w = fresh_world(5);
    Rng prng(5);
    const TaskParams p = make_task_params(*spec, EnvConfig{}, prng);
    TaskState st = init_episode(*spec, w, p);
    const auto& cs = std::get<CovidState>(st);
    const SimObject test = w.get(cs.test_area);

    const SimObject* swab = objects_of(w, Category::Swab).front();
    const SimObject* tube = objects_of(w, Category::Tube).front();
    const int swab_id = swab->id, tube_id = tube->id;
    w.get(swab_id).pose = {test.pose.x, test.pose.y - 0.03, 0.005 + 0.005, 0.0};
    w.get(tube_id).pose = {test.pose.x, test.pose.y + 0.03, 0.005 + 0.0085, 0.0};
    spec->on_step(w, st, StepOutcome{}, p);

    EXPECT_EQ(w.find(swab_id), nullptr);
    EXPECT_EQ(w.get(tube_id).category, Category::UsedTube);
    EXPECT_TRUE(resting_on_pad(w.get(tube_id), w.get(cs.test_area)));
    EXPECT_EQ(std::get<CovidState>(st).phase, CovidState::Phase::Collect);
    EXPECT_EQ(std::get<CovidState>(st).rounds, 0);
    EXPECT_TRUE(unsettled_objects(w).empty());
}
