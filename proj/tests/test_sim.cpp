#include "barm/errors.hpp"
#include "barm/sim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace barm;
using std::numbers::pi;

namespace {

const Shape kCube = Cuboid{0.03, 0.03, 0.03};

WorldState empty_world() {
    WorldState w;
    w.gripper.max_open_width = 0.08;
    return w;
}

int add_cube(WorldState& w, double x, double y, double base = 0.0, double yaw = 0.0) {
    return w.add_object(kCube, {x, y, base + 0.015, yaw}, Category::Block);
}

bool all_settled(const WorldState& w) { return unsettled_objects(w).empty(); }

}  // namespace

TEST(ComputeZ, Examples) {
    WorldState w = empty_world();
    EXPECT_DOUBLE_EQ(compute_z(w, 0.4, 0.0, 0.0, Primitive::Pick, std::nullopt), 0.0);
    add_cube(w, 0.4, 0.0);
    EXPECT_NEAR(compute_z(w, 0.4, 0.0, 0.0, Primitive::Pick, std::nullopt), 0.015, 1e-12);
    EXPECT_NEAR(compute_z(w, 0.4, 0.0, 0.0, Primitive::Place, 0.03), 0.047, 1e-12);
    EXPECT_THROW(compute_z(w, 0.4, 0.0, 0.0, Primitive::Place, std::nullopt), PreconditionError);
    // The region reaches 1.2 cm: a cube whose edge is 1 cm away still counts, 2 cm away does not.
    EXPECT_NEAR(compute_z(w, 0.4 + 0.025, 0.0, 0.0, Primitive::Pick, std::nullopt), 0.015, 1e-12);
    EXPECT_DOUBLE_EQ(compute_z(w, 0.4 + 0.035, 0.0, 0.0, Primitive::Pick, std::nullopt), 0.0);
}

TEST(ResolvePick, GraspAndMiss) {
    WorldState w = empty_world();
    const int id = add_cube(w, 0.4, 0.0);
    auto miss = resolve_pick(w, 0.45, 0.0, 0.015, 0.0);
    EXPECT_FALSE(miss.grasped);
    EXPECT_FALSE(w.gripper.is_holding());
    auto hit = resolve_pick(w, 0.4, 0.0, 0.015, 0.0);
    EXPECT_TRUE(hit.grasped);
    EXPECT_EQ(hit.object_id, id);
    EXPECT_TRUE(w.is_held(id));
    EXPECT_THROW(resolve_pick(w, 0.4, 0.0, 0.015, 0.0), PreconditionError);
}

TEST(ResolvePick, RoofOrientationAgainstOpening) {
    const Shape roof = TriangularPrism{0.12, 0.03, 0.03};
    // Extent-vs-opening oracle: width of the rotated bounding box across the fingers.
    auto extent = [](double lx, double ly, double rel) { return std::abs(lx * std::sin(rel)) + std::abs(ly * std::cos(rel)); };
    for (double theta : {0.0, pi / 2}) {
        WorldState w = empty_world();
        w.add_object(roof, {0.4, 0.0, 0.015, 0.0}, Category::Roof);
        const bool expected = extent(0.12, 0.03, theta) <= 0.08;
        EXPECT_EQ(resolve_pick(w, 0.4, 0.0, 0.015, theta).grasped, expected) << theta;
    }
}

TEST(ResolvePick, ElongatedUsesCenterline) {
    WorldState w = empty_world();
    w.add_object(Cuboid{0.12, 0.03, 0.03}, {0.4, 0.0, 0.015, 0.0}, Category::Brick);
    // 4 cm along the long axis is still on the grasp line; 1.5 cm across is not.
    EXPECT_FALSE(resolve_pick(w, 0.4, 0.014, 0.015, 0.0).grasped);
    EXPECT_TRUE(resolve_pick(w, 0.44, 0.0, 0.015, 0.0).grasped);
}

TEST(ResolvePick, OccludedAndFixedObjectsAreUnpickable) {
    WorldState w = empty_world();
    const int lower = add_cube(w, 0.4, 0.0);
    const int upper = add_cube(w, 0.4, 0.0, 0.03);
    // Aimed at the lower cube, the fingers stop on it and close around the upper one.
    EXPECT_TRUE(resolve_pick(w, 0.4, 0.0, 0.005, 0.0).grasped);
    EXPECT_TRUE(w.is_held(upper));
    EXPECT_NEAR(w.gripper.holding->grasp.dz, 0.015, 1e-12);
    EXPECT_FALSE(w.is_held(lower));

    WorldState above = empty_world();
    add_cube(above, 0.4, 0.0);
    EXPECT_FALSE(resolve_pick(above, 0.4, 0.0, 0.031, 0.0).grasped);

    WorldState f = empty_world();
    f.add_object(Slab{0.2, 0.2, 0.03}, {0.4, 0.0, 0.015, 0.0}, Category::Pallet, false);
    EXPECT_FALSE(resolve_pick(f, 0.4, 0.0, 0.015, 0.0).grasped);
}

TEST(ResolvePick, SupportedObjectsSettle) {
    WorldState w = empty_world();
    add_cube(w, 0.4, 0.0);
    const int mid = add_cube(w, 0.4, 0.0, 0.03);
    const int top = add_cube(w, 0.4, 0.0, 0.06);
    // Pull the middle block out sideways by grasping it directly (bypassing occlusion).
    w.gripper.holding = Held{mid, {}};
    settle(w);
    EXPECT_NEAR(w.get(top).base(), 0.03, 1e-12);
    EXPECT_TRUE(all_settled(w));
}

TEST(ResolvePlace, StableCases) {
    WorldState w = empty_world();
    add_cube(w, 0.4, 0.0);
    const int b = add_cube(w, 0.5, 0.0);
    ASSERT_TRUE(resolve_pick(w, 0.5, 0.0, 0.015, 0.0).grasped);
    auto out = resolve_place(w, 0.4, 0.0, 0.047, 0.0);
    EXPECT_FALSE(out.toppled);
    EXPECT_NEAR(w.get(b).base(), 0.03, 1e-12);
    ASSERT_TRUE(resolve_pick(w, 0.4, 0.0, 0.045, 0.0).grasped);
    out = resolve_place(w, 0.55, 0.1, 0.017, 0.0);
    EXPECT_FALSE(out.toppled);
    EXPECT_NEAR(w.get(b).base(), 0.0, 1e-12);
    EXPECT_THROW(resolve_place(w, 0.4, 0.0, 0.0, 0.0), PreconditionError);
}

TEST(ResolvePlace, ToppleDisplacement) {
    WorldState w = empty_world();
    add_cube(w, 0.4, 0.0);
    const int b = add_cube(w, 0.5, 0.1);
    ASSERT_TRUE(resolve_pick(w, 0.5, 0.1, 0.015, 0.0).grasped);
    // COM 2 cm from the lower center: beyond the 1.5 cm edge, footprint still overlapping by 1 cm.
    const auto out = resolve_place(w, 0.42, 0.0, 0.05, 0.0);
    EXPECT_TRUE(out.toppled);
    // Oracle: contact strip [0.405, 0.415] has centroid 0.41, so the push is along +x in
    // 1 cm steps until the footprint's low edge clears 0.415.
    double x = 0.42;
    while (x - 0.015 < 0.415 - 1e-9) x += 0.01;
    EXPECT_NEAR(w.get(b).pose.x, x, 1e-12);
    EXPECT_NEAR(w.get(b).pose.x, 0.43, 1e-12);
    EXPECT_NEAR(w.get(b).pose.y, 0.0, 1e-12);
    EXPECT_NEAR(w.get(b).base(), 0.0, 1e-12);
    EXPECT_TRUE(all_settled(w));
}

TEST(ResolvePlace, RoofBridgesTwoCubes) {
    WorldState w = empty_world();
    add_cube(w, 0.38, 0.0);
    add_cube(w, 0.42, 0.0);
    const int roof = w.add_object(TriangularPrism{0.12, 0.03, 0.03}, {0.5, 0.1, 0.015, 0.0}, Category::Roof);
    ASSERT_TRUE(resolve_pick(w, 0.5, 0.1, 0.015, 0.0).grasped);
    const auto out = resolve_place(w, 0.40, 0.0, 0.05, 0.0);
    EXPECT_FALSE(out.toppled);
    EXPECT_NEAR(w.get(roof).base(), 0.03, 1e-12);
}

TEST(Settle, FixpointIsBitIdentical) {
    WorldState w = empty_world();
    add_cube(w, 0.4, 0.0);
    add_cube(w, 0.4, 0.0, 0.03);
    add_cube(w, 0.5, 0.0);
    const std::string before = encode_world(w);
    settle(w);
    EXPECT_EQ(encode_world(w), before);
}

TEST(Settle, UpperDropsWhenLowerLeaves) {
    WorldState w = empty_world();
    const int lower = add_cube(w, 0.4, 0.0);
    const int upper = add_cube(w, 0.4, 0.0, 0.03);
    w.get(lower).pose.x = 0.5;
    settle(w);
    EXPECT_NEAR(w.get(upper).base(), 0.0, 1e-12);
    EXPECT_NEAR(w.get(lower).base(), 0.0, 1e-12);
}

TEST(Step, HeuristicAndClipping) {
    WorldState w = empty_world();
    add_cube(w, 0.4, 0.0);
    Action a{Primitive::Place, 0.4, 0.0, 0.0, std::nullopt};
    auto out = step(w, a);
    EXPECT_EQ(out.primitive, Primitive::Pick);
    EXPECT_TRUE(out.overridden);
    EXPECT_TRUE(out.grasped);
    EXPECT_EQ(w.step_count, 1);

    Action b{Primitive::Pick, w.params.workspace.x_max + 0.1, 0.0, 3 * pi / 2, std::nullopt};
    out = step(w, b);
    EXPECT_EQ(out.primitive, Primitive::Place);
    EXPECT_DOUBLE_EQ(out.x, w.params.workspace.x_max);
    EXPECT_NEAR(out.yaw, pi / 2, 1e-12);
    EXPECT_FALSE(w.gripper.is_holding());
    EXPECT_EQ(w.step_count, 2);

    EXPECT_THROW(step(w, Action{Primitive::Place, 0.4, 0.0, 0.0, std::nullopt}, false), PreconditionError);
}

TEST(Step, MissOnlyAdvancesStepCount) {
    WorldState w = empty_world();
    add_cube(w, 0.4, 0.0);
    WorldState before = w;
    step(w, Action{Primitive::Pick, 0.6, 0.15, 0.0, std::nullopt});
    EXPECT_EQ(w.step_count, 1);
    before.step_count = 1;
    EXPECT_TRUE(same_state(w, before));
}

TEST(Properties, PickPlaceInverse) {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        WorldState w = empty_world();
        for (int i = 0; i < 4; ++i) {
            const Shape s = Cuboid{0.03, 0.03, 0.03};
            auto p = sample_free_pose(w, s, {0.3, 0.6, -0.15, 0.15}, 0.015, true, rng, 100);
            ASSERT_TRUE(p);
            w.add_object(s, *p, Category::Block);
        }
        const auto& o = w.objects[static_cast<std::size_t>(rng.uniform_int(0, 3))];
        const double yaw = normalize_yaw(o.pose.yaw, true);
        const WorldState before = w;
        ASSERT_TRUE(step(w, Action{Primitive::Pick, o.pose.x, o.pose.y, yaw, std::nullopt}).grasped);
        step(w, Action{Primitive::Place, o.pose.x, o.pose.y, yaw, std::nullopt});
        for (const auto& b : before.objects) {
            const auto& a = w.get(b.id);
            EXPECT_NEAR(a.pose.x, b.pose.x, 1e-6);
            EXPECT_NEAR(a.pose.y, b.pose.y, 1e-6);
            EXPECT_NEAR(a.pose.z, b.pose.z, 1e-6);
            EXPECT_NEAR(angle_distance(a.pose.yaw, b.pose.yaw, 2 * pi), 0.0, 1e-6);
        }
    }
}

TEST(Properties, RandomStepsStaySettledAndConserveObjects) {
    Rng rng(9);
    const Shape shapes[] = {kCube, Cuboid{0.12, 0.03, 0.03}, TriangularPrism{0.12, 0.03, 0.03},
                            TriangularPrism{0.03, 0.03, 0.03}, Cylinder{0.02, 0.04}, Cuboid{0.04, 0.04, 0.02}};
    for (int episode = 0; episode < 20; ++episode) {
        WorldState w = empty_world();
        w.rng = Rng(episode);
        for (const auto& s : shapes) {
            auto p = sample_free_pose(w, s, {0.3, 0.6, -0.15, 0.15}, 0.01, true, rng, 200);
            ASSERT_TRUE(p);
            w.add_object(s, *p, Category::Block);
        }
        const std::size_t n = movable_count(w);
        for (int t = 0; t < 200; ++t) {
            Action a;
            if (!w.gripper.is_holding() && rng.uniform01() < 0.7) {
                // Aim at an object so picks actually succeed.
                const auto& o = w.objects[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(w.objects.size()) - 1))];
                a = {Primitive::Pick, o.pose.x + rng.uniform(-0.005, 0.005), o.pose.y, o.pose.yaw, std::nullopt};
            } else {
                a = {Primitive::Place, rng.uniform(0.25, 0.65), rng.uniform(-0.2, 0.2), rng.uniform(0, pi), std::nullopt};
            }
            step(w, a);
            ASSERT_EQ(movable_count(w), n);
            ASSERT_TRUE(all_settled(w)) << "episode " << episode << " step " << t;
            for (const auto& o : w.objects) ASSERT_GE(o.base(), -1e-12);
        }
    }
}

TEST(Properties, DeterministicAndSerializable) {
    auto run = [](WorldState w, int steps) {
        std::vector<std::string> states;
        Rng actions(77);
        for (int t = 0; t < steps; ++t) {
            step(w, Action{Primitive::Pick, actions.uniform(0.3, 0.6), actions.uniform(-0.15, 0.15),
                           actions.uniform(0, pi), std::nullopt});
            states.push_back(encode_world(w));
        }
        return states;
    };
    WorldState w = empty_world();
    w.rng = Rng(1234);
    w.rng.next_u64();
    for (int i = 0; i < 5; ++i) add_cube(w, 0.3 + 0.06 * i, 0.0);
    add_cube(w, 0.3, 0.0, 0.03);
    const WorldState restored = decode_world(encode_world(w));
    EXPECT_TRUE(restored.rng == w.rng);
    EXPECT_EQ(run(w, 100), run(w, 100));
    EXPECT_EQ(run(w, 100), run(restored, 100));
}
