#include "barm/errors.hpp"
#include "barm/planners.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>

using namespace barm;

namespace {

const char* const kStructureTasks[] = {"block_stacking",   "house_building_1",           "house_building_2",
                                       "house_building_3", "house_building_4",           "improvise_house_building_2",
                                       "improvise_house_building_3"};

ActionVec act(float p, float x, float y, float r) { return {p, x, y, std::numeric_limits<float>::quiet_NaN(), r}; }

// A task whose goal can never be met, to exercise the generation budget.
void register_unreachable_task() {
    static const bool once = [] {
        TaskSpec s;
        s.name = "unreachable_goal";
        s.num_objects = 1;
        s.max_steps = 4;
        s.optimal_steps = [](int) { return 2; };
        s.init = [](WorldState& w, const TaskParams& p) -> TaskState {
            w.add_object(cube_shape(p), {0.45, 0.0, p.block() / 2, 0.0}, Category::Block);
            return {};
        };
        s.goal = [](const WorldState&, const TaskState&, const TaskParams&) { return false; };
        register_task(s);
        register_expert("unreachable_goal", [](const WorldState& w, const TaskState&, const TaskParams&, Rng&) {
            return Waypoint{w.gripper.is_holding() ? Primitive::Place : Primitive::Pick, 0.45, 0.0, 0.0};
        });
        return true;
    }();
    (void)once;
}

}  // namespace

TEST(ReverseActions, PairsSwapAndOrderReverses) {
    const std::vector<ActionVec> decon = {act(0, 0.40f, 0.00f, 0.1f), act(1, 0.30f, 0.10f, 0.2f),
                                          act(0, 0.40f, 0.01f, 0.3f), act(1, 0.55f, -0.1f, 0.4f)};
    const auto built = reverse_actions(decon);
    ASSERT_EQ(built.size(), 4u);
    const std::vector<ActionVec> expected = {act(0, 0.55f, -0.1f, 0.4f), act(1, 0.40f, 0.01f, 0.3f),
                                             act(0, 0.30f, 0.10f, 0.2f), act(1, 0.40f, 0.00f, 0.1f)};
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t k : {kSlotP, kSlotX, kSlotY, kSlotR}) EXPECT_EQ(built[i][k], expected[i][k]) << i << "," << k;
    }
    EXPECT_THROW(reverse_actions({decon[0]}), InvalidInput);
    // Reversal is an involution on well-formed lists.
    const auto twice = reverse_actions(built);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(twice[i][kSlotX], decon[i][kSlotX]);
}

TEST(Blueprint, BlockStackIsAColumn) {
    TaskParams p;
    p.num_objects = 4;
    const auto roles = structure_blueprint("block_stacking", p, {0.4, 0.05}, 0.3, 0);
    ASSERT_EQ(roles.size(), 4u);
    EXPECT_TRUE(roles[0].supports.empty());
    for (std::size_t i = 0; i < roles.size(); ++i) {
        EXPECT_NEAR(roles[i].xy.x, 0.4, 1e-12);
        EXPECT_NEAR(roles[i].xy.y, 0.05, 1e-12);
        if (i > 0) EXPECT_EQ(roles[i].supports, std::vector<int>{static_cast<int>(i) - 1});
    }
    EXPECT_TRUE(structure_blueprint("bin_packing", p, {0.4, 0.0}, 0.0, 0).empty());
}

TEST(Blueprint, HouseTwoRoofBridgesTheBlocks) {
    TaskParams p;
    p.num_objects = 3;
    const double b = p.block();
    for (int k = 0; k < 4; ++k) {
        const auto roles = structure_blueprint("house_building_2", p, {0.45, -0.02}, 0.0, k);
        ASSERT_EQ(roles.size(), 3u);
        EXPECT_EQ(roles[2].category, Category::Roof);
        const double gap = norm(roles[1].xy - roles[0].xy);
        EXPECT_GE(gap, b - 1e-12);
        EXPECT_LE(gap, 5.0 * b / 3.0 + 1e-12);
        const Vec2 mid = 0.5 * (roles[0].xy + roles[1].xy);
        EXPECT_NEAR(norm(roles[2].xy - mid), 0.0, 1e-12);
        // The roof's long axis runs along the gap.
        const Vec2 dir = roles[1].xy - roles[0].xy;
        EXPECT_NEAR(angle_distance(roles[2].yaw, std::atan2(dir.y, dir.x), std::numbers::pi), 0.0, 1e-9);
    }
}

// Built structures replay exactly: the construction is the reversed deconstruction, takes the
// optimal number of steps and ends on the goal.
TEST(Decon, ReversalReplaysToTheGoal) {
    for (const char* name : kStructureTasks) {
        const auto task = get_task(name);
        int ok = 0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto r = decon_generate(task, EnvConfig{}, seed);
            if (!r) continue;
            ++ok;
            const Trajectory& t = r->trajectory;
            EXPECT_TRUE(t.success) << name;
            ASSERT_EQ(t.transitions.size(), static_cast<std::size_t>(task->optimal_steps(task->num_objects))) << name;
            for (std::size_t i = 0; i + 1 < t.transitions.size(); ++i) {
                EXPECT_EQ(t.transitions[i].reward, 0.0f);
                EXPECT_FALSE(t.transitions[i].done);
            }
            EXPECT_TRUE(t.transitions.back().done);

            const auto rebuilt = reverse_actions(r->deconstruction);
            ASSERT_EQ(rebuilt.size(), t.transitions.size());
            Episode ep(task, EnvConfig{});
            ep.reset_to(r->initial, TaskState{}, r->params);
            EXPECT_EQ(ep.observe().heightmap, t.transitions[0].obs.heightmap);
            StepResult last;
            for (std::size_t i = 0; i < rebuilt.size(); ++i) {
                EXPECT_EQ(rebuilt[i][kSlotP], t.transitions[i].action[kSlotP]);
                EXPECT_NEAR(rebuilt[i][kSlotX], t.transitions[i].action[kSlotX], 1e-6);
                EXPECT_NEAR(rebuilt[i][kSlotY], t.transitions[i].action[kSlotY], 1e-6);
                last = ep.step(rebuilt[i]);
            }
            EXPECT_EQ(last.reward, 1.0f) << name << " seed " << seed;
        }
        EXPECT_GE(ok, 9) << name;
    }
}

TEST(Decon, RejectsUnsupportedTasks) {
    EXPECT_THROW(decon_generate(get_task("bin_packing"), EnvConfig{}, 0), InvalidInput);
}

TEST(Waypoint, NonStructureTasksWithinBudget) {
    const std::pair<const char*, std::size_t> limits[] = {
        {"bin_packing", 16}, {"bottle_arrangement", 12}, {"box_palletizing", 36}, {"covid_test", 18}};
    for (const auto& [name, limit] : limits) {
        const auto task = get_task(name);
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Trajectory t = waypoint_rollout(task, EnvConfig{}, attempt_seed(1, seed));
            EXPECT_TRUE(t.success) << name << " seed " << seed;
            EXPECT_LE(t.transitions.size(), limit) << name;
        }
    }
}

TEST(Waypoint, ExpertIsDeterministic) {
    Episode a(get_task("covid_test"), EnvConfig{}), b(get_task("covid_test"), EnvConfig{});
    a.reset(42);
    b.reset(42);
    for (int i = 0; i < 6; ++i) {
        const ActionVec x = waypoint_next_action(a), y = waypoint_next_action(b);
        for (std::size_t k : {kSlotP, kSlotX, kSlotY, kSlotR}) ASSERT_EQ(x[k], y[k]);
        a.step(x);
        b.step(y);
    }
}

TEST(Generation, SameResultForAnyWorkerCount) {
    const auto task = get_task("house_building_3");
    const auto one = generate_demos(task, 6, EnvConfig{}, 5, 1);
    const auto three = generate_demos(task, 6, EnvConfig{}, 5, 3);
    ASSERT_EQ(one.size(), 6u);
    ASSERT_EQ(three.size(), 6u);
    for (std::size_t i = 0; i < one.size(); ++i) {
        EXPECT_EQ(one[i].seed, three[i].seed);
        ASSERT_EQ(one[i].transitions.size(), three[i].transitions.size());
        for (std::size_t j = 0; j < one[i].transitions.size(); ++j) {
            EXPECT_EQ(one[i].transitions[j].obs.heightmap, three[i].transitions[j].obs.heightmap);
            EXPECT_EQ(std::memcmp(one[i].transitions[j].action.data(), three[i].transitions[j].action.data(),
                                  sizeof(ActionVec)),
                      0);
        }
    }
    EXPECT_NE(attempt_seed(5, 0), attempt_seed(5, 1));
    EXPECT_NE(attempt_seed(5, 0), attempt_seed(6, 0));
}

TEST(Generation, FailsLoudlyWhenTheExpertCannotSucceed) {
    register_unreachable_task();
    const auto task = get_task("unreachable_goal");
    try {
        generate_demos(task, 3, EnvConfig{}, 0, 1);
        FAIL() << "expected GenerationError";
    } catch (const GenerationError& e) {
        EXPECT_NE(std::string(e.what()).find("unreachable_goal"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("0 of 6"), std::string::npos);
    }
    int seen = 0;
    run_expert_episodes(task, 3, EnvConfig{}, 0, 1, [&](Trajectory&& t) {
        EXPECT_FALSE(t.success);
        EXPECT_EQ(t.transitions.size(), 4u);
        ++seen;
    });
    EXPECT_EQ(seen, 3);
    EXPECT_THROW(register_expert("unreachable_goal", nullptr), RegistrationError);
}
