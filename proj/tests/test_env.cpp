#include <algorithm>
#include <deque>
#include <random>
#include <set>

#include "doctest.h"
#include "support/scenes.hpp"
#include "vtnav/env/navigation.hpp"
#include "vtnav/env/scene_gen.hpp"
#include "vtnav/env/scene_io.hpp"
#include "vtnav/env/search.hpp"

using namespace vtnav;
using namespace vtnav::env;
using vtnav::testing::ascii_scene;
using vtnav::testing::bfs_oracle_path_length;
using vtnav::testing::open_scene;

namespace {

// Flood fill written independently of free_space_connected (BFS, queue based).
bool oracle_connected(const GridScene& s) {
    std::set<std::pair<int, int>> free;
    for (int y = 0; y < s.height(); ++y)
        for (int x = 0; x < s.width(); ++x)
            if (!s.is_obstacle(x, y)) free.insert({x, y});
    if (free.empty()) return false;
    std::set<std::pair<int, int>> seen{*free.begin()};
    std::deque<std::pair<int, int>> q{*free.begin()};
    while (!q.empty()) {
        auto [x, y] = q.front();
        q.pop_front();
        for (auto [nx, ny] : {std::pair{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}})
            if (free.count({nx, ny}) && seen.insert({nx, ny}).second) q.push_back({nx, ny});
    }
    return seen.size() == free.size();
}

AgentPose random_free_pose(const GridScene& s, std::mt19937_64& rng) {
    while (true) {
        AgentPose p{std::uniform_int_distribution<int>(0, s.width() - 1)(rng),
                    std::uniform_int_distribution<int>(0, s.height() - 1)(rng),
                    45 * std::uniform_int_distribution<int>(0, 7)(rng),
                    30 * std::uniform_int_distribution<int>(-1, 1)(rng)};
        if (s.is_free(p.x, p.y)) return p;
    }
}

}  // namespace

TEST_CASE("zero density scene has no obstacles") {
    SceneConfig cfg;
    cfg.obstacle_density = 0.0;
    auto s = generate_scene(7, cfg);
    CHECK(s.width() == 10);
    CHECK(s.free_cell_count() == 100);
}

TEST_CASE("scene generation is deterministic") {
    SceneConfig cfg;
    CHECK(generate_scene(42, cfg) == generate_scene(42, cfg));
    CHECK_FALSE(generate_scene(42, cfg) == generate_scene(43, cfg));
}

TEST_CASE("seed sweep: every scene is connected and has at least four target classes") {
    SceneConfig cfg;
    cfg.obstacle_density = 0.25;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto s = generate_scene(seed, cfg);
        CHECK(oracle_connected(s));
        CHECK(s.present_classes().size() >= 4);
        for (const auto& o : s.objects()) {
            CHECK(s.is_free(o.x, o.y));
            CHECK(o.class_id < cfg.num_classes);
        }
    }
}

TEST_CASE("generation fails loudly when connectivity is unachievable") {
    SceneConfig cfg;
    cfg.obstacle_density = 0.95;
    cfg.max_attempts = 5;
    CHECK_THROWS_AS(generate_scene(1, cfg), GenerationError);
    cfg.classes_per_scene = 3;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
}

TEST_CASE("step examples") {
    auto s = open_scene(10, 10, {{0, 4, 9, HeightBand::Mid, 0.2}});
    SUBCASE("MoveAhead at heading 0 goes to +y") {
        auto out = step(s, {4, 4, 0, 0}, Action::MoveAhead, 0);
        CHECK(out.pose == AgentPose{4, 5, 0, 0});
        CHECK(out.reward == doctest::Approx(-0.001));
        CHECK_FALSE(out.done);
    }
    SUBCASE("LookUp clamps at +30") {
        auto out = step(s, {4, 4, 0, 30}, Action::LookUp, 0);
        CHECK(out.pose.pitch == 30);
        CHECK(out.noop);
        auto down = step(s, {4, 4, 0, -30}, Action::LookDown, 0);
        CHECK(down.pose.pitch == -30);
        CHECK(down.noop);
    }
    SUBCASE("Done with the target visible at 1.25 m succeeds") {
        auto out = step(s, {4, 4, 0, 0}, Action::Done, 0);
        CHECK(out.done);
        CHECK(out.success);
        CHECK(out.reward == doctest::Approx(5.0 - 0.001));
    }
    SUBCASE("diagonal heading moves diagonally") {
        CHECK(step(s, {4, 4, 45, 0}, Action::MoveAhead, 0).pose == AgentPose{5, 5, 45, 0});
        CHECK(step(s, {4, 4, 225, 0}, Action::MoveAhead, 0).pose == AgentPose{3, 3, 225, 0});
    }
    SUBCASE("invalid pose is a state error") {
        CHECK_THROWS_AS(step(s, {11, 4, 0, 0}, Action::MoveAhead, 0), StateError);
        CHECK_THROWS_AS(step(s, {4, 4, 10, 0}, Action::MoveAhead, 0), StateError);
    }
}

TEST_CASE("collisions leave the pose unchanged") {
    auto s = ascii_scene({"...",
                          ".#.",
                          "..."},
                         {});
    auto out = step(s, {1, 0, 0, 0}, Action::MoveAhead, 0);
    CHECK(out.collision);
    CHECK(out.pose == AgentPose{1, 0, 0, 0});
    // corner cutting past the obstacle is also blocked
    CHECK(step(s, {0, 0, 45, 0}, Action::MoveAhead, 0).collision);
    // out of bounds
    CHECK(step(s, {0, 0, 270, 0}, Action::MoveAhead, 0).collision);
}

TEST_CASE("success threshold is a strict 1.5 m") {
    CHECK_FALSE(within_success_distance(1.530));
    CHECK(within_success_distance(1.49));
    CHECK_FALSE(within_success_distance(1.5));

    auto six = open_scene(3, 10, {{0, 1, 7, HeightBand::Mid, 0.2}});
    CHECK_FALSE(is_success(six, {1, 1, 0, 0}, 0));  // 6 cells = 1.5 m
    CHECK(is_success(six, {1, 2, 0, 0}, 0));        // 1.25 m
}

TEST_CASE("occluded target does not count as success") {
    auto s = ascii_scene({"...",
                          "...",
                          "...",
                          ".#.",
                          "...",
                          "..."},
                         {{0, 1, 5, HeightBand::Mid, 0.2}});
    // target 1.0 m ahead with a wall cell between
    CHECK_FALSE(is_success(s, {1, 1, 0, 0}, 0));
    CHECK(visible_objects(s, {1, 1, 0, 0}).empty());
}

TEST_CASE("visible_objects field of view, range and pitch bands") {
    auto s = open_scene(30, 30, {{0, 10, 11, HeightBand::Mid, 0.2},
                                 {1, 10, 9, HeightBand::Mid, 0.2},
                                 {2, 10, 28, HeightBand::Mid, 0.2},
                                 {3, 11, 12, HeightBand::Low, 0.2},
                                 {4, 9, 12, HeightBand::High, 0.2}});
    AgentPose p{10, 10, 0, 0};
    auto has = [](const std::vector<VisibleObject>& v, int cls) {
        return std::any_of(v.begin(), v.end(), [&](const VisibleObject& o) { return o.object.class_id == cls; });
    };
    auto vis = visible_objects(s, p);
    CHECK(has(vis, 0));        // directly ahead
    CHECK_FALSE(has(vis, 1));  // behind
    CHECK(has(vis, 2));        // 4.5 m ahead, inside the 5 m range
    CHECK(has(vis, 3));
    CHECK(has(vis, 4));

    auto up = visible_objects(s, {10, 10, 0, 30});
    CHECK_FALSE(has(up, 3));  // low objects need level or downward pitch
    CHECK(has(up, 4));
    auto down = visible_objects(s, {10, 10, 0, -30});
    CHECK(has(down, 3));
    CHECK_FALSE(has(down, 4));

    auto far = open_scene(3, 30, {{0, 1, 22, HeightBand::Mid, 0.2}});
    CHECK(visible_objects(far, {1, 1, 0, 0}).empty());  // 5.25 m
    CHECK(bearing_to({0, 0, 0, 0}, 1, 1) == doctest::Approx(45.0));
    CHECK(bearing_to({0, 0, 90, 0}, 0, 1) == doctest::Approx(-90.0));
}

TEST_CASE("supercover matches the closed-square intersection oracle") {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> c(0, 12);
    for (int trial = 0; trial < 400; ++trial) {
        const int x0 = c(rng), y0 = c(rng), x1 = c(rng), y1 = c(rng);
        if (x0 == x1 && y0 == y1) continue;
        auto cells = supercover_cells(x0, y0, x1, y1);
        std::set<std::pair<int, int>> got;
        for (auto& cell : cells) got.insert({cell[0], cell[1]});
        std::set<std::pair<int, int>> want;
        for (int y = std::min(y0, y1) - 1; y <= std::max(y0, y1) + 1; ++y)
            for (int x = std::min(x0, x1) - 1; x <= std::max(x0, x1) + 1; ++x) {
                if ((x == x0 && y == y0) || (x == x1 && y == y1)) continue;
                if (vtnav::testing::segment_touches_cell(x0 + 0.5, y0 + 0.5, x1 + 0.5, y1 + 0.5, x, y))
                    want.insert({x, y});
            }
        CHECK(got == want);
    }
}

TEST_CASE("rotation group properties") {
    auto s = open_scene(5, 5, {});
    for (int h = 0; h < 360; h += 45) {
        AgentPose p{2, 2, h, 0};
        auto back = step(s, step(s, p, Action::RotateLeft, 0).pose, Action::RotateRight, 0).pose;
        CHECK(back == p);
        AgentPose q = p;
        for (int i = 0; i < 8; ++i) q = step(s, q, Action::RotateLeft, 0).pose;
        CHECK(q == p);
    }
}

TEST_CASE("random walks never enter obstacles and step is pure") {
    SceneConfig cfg;
    cfg.obstacle_density = 0.3;
    std::mt19937_64 rng(4);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto s = generate_scene(seed, cfg);
        AgentPose p = random_free_pose(s, rng);
        for (int i = 0; i < 300; ++i) {
            const Action a = action_from_index(std::uniform_int_distribution<int>(0, 4)(rng));
            auto out = step(s, p, a, 0);
            CHECK(out.pose == step(s, p, a, 0).pose);
            CHECK(s.is_free(out.pose.x, out.pose.y));
            if (out.collision) CHECK(out.pose == p);
            p = out.pose;
        }
    }
}

TEST_CASE("success needs Done, visibility and distance together") {
    auto s = open_scene(10, 10, {{0, 4, 8, HeightBand::Mid, 0.2}});
    AgentPose good{4, 5, 0, 0};
    CHECK(is_success(s, good, 0));
    Episode ep(s, {"open", 0, good, 3});
    // no Done: episode runs out of steps and fails
    ep.step(Action::LookUp);
    ep.step(Action::LookDown);
    auto last = ep.step(Action::LookUp);
    CHECK(last.done);
    CHECK_FALSE(ep.success());
    // not visible: facing away
    CHECK_FALSE(step(s, {4, 5, 180, 0}, Action::Done, 0).success);
    // too far: 7 cells
    CHECK_FALSE(step(s, {4, 1, 0, 0}, Action::Done, 0).success);
    CHECK(step(s, good, Action::Done, 0).success);
    // wrong target class
    CHECK_FALSE(step(s, good, Action::Done, 1).success);
}

TEST_CASE("episode return is step penalty plus success reward") {
    auto s = open_scene(10, 10, {{0, 4, 8, HeightBand::Mid, 0.2}});
    Episode ep(s, {"open", 0, {4, 1, 0, 0}, 50});
    ep.step(Action::MoveAhead);
    ep.step(Action::MoveAhead);
    ep.step(Action::Done);
    CHECK(ep.success());
    CHECK(ep.total_reward() == doctest::Approx(-0.001 * 3 + 5.0));
    CHECK_THROWS_AS(ep.step(Action::Done), StateError);
}

TEST_CASE("shortest path examples") {
    SUBCASE("already at a success state") {
        auto s = open_scene(10, 10, {{0, 4, 8, HeightBand::Mid, 0.2}});
        CHECK(shortest_path_length(s, {4, 5, 0, 0}, 0) == 1);
    }
    SUBCASE("corridor: target 8 cells ahead needs 3 moves and Done") {
        auto s = ascii_scene(std::vector<std::string>(12, "#.#"), {{0, 1, 8, HeightBand::Mid, 0.2}});
        CHECK(shortest_path_length(s, {1, 0, 0, 0}, 0) == 4);
        CHECK(bfs_oracle_path_length(s, {1, 0, 0, 0}, 0) == 4);
        // target 4 cells ahead is already within 1.5 m
        CHECK(shortest_path_length(s, {1, 4, 0, 0}, 0) == 1);
    }
    SUBCASE("unreachable target") {
        auto s = ascii_scene({"...", "###", "..."}, {{0, 1, 2, HeightBand::Mid, 0.2}});
        CHECK_FALSE(shortest_path_length(s, {1, 0, 0, 0}, 0).has_value());
        CHECK_FALSE(shortest_path_length(s, {1, 0, 0, 0}, 5).has_value());
    }
}

TEST_CASE("shortest_path_length equals an independent forward BFS on 100 scenes") {
    SceneConfig cfg;
    std::mt19937_64 rng(123);
    int mismatches = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        auto s = generate_scene(1000 + seed, cfg);
        NavigationGraph g(s);
        const auto classes = s.present_classes();
        const int target = classes[seed % classes.size()];
        DistanceField field(g, target);
        const AgentPose start = random_free_pose(s, rng);
        if (field.shortest_path_length(start) != bfs_oracle_path_length(s, start, target)) ++mismatches;
    }
    CHECK(mismatches == 0);
}

TEST_CASE("optimal length lower-bounds every successful trajectory") {
    SceneConfig cfg;
    std::mt19937_64 rng(8);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto s = generate_scene(seed, cfg);
        const int target = s.present_classes()[0];
        NavigationGraph g(s);
        DistanceField field(g, target);
        for (int trial = 0; trial < 200; ++trial) {
            const AgentPose start = random_free_pose(s, rng);
            Episode ep(s, {s.id(), target, start, 40});
            while (!ep.done()) {
                const bool stop = is_success(s, ep.pose(), target) && rng() % 2 == 0;
                ep.step(stop ? Action::Done : action_from_index(static_cast<int>(rng() % 5)));
            }
            if (ep.success()) CHECK(ep.steps_taken() >= *field.shortest_path_length(start));
        }
    }
}

TEST_CASE("scene files round-trip losslessly") {
    SceneConfig cfg;
    cfg.obstacle_density = 0.3;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto s = generate_scene(seed * 7919, cfg);
        const std::string text = dump_scene(s);
        auto back = parse_scene(text);
        CHECK(back == s);
        CHECK(dump_scene(back) == text);
    }
    CHECK_THROWS_AS(parse_scene("{"), SceneFormatError);
    CHECK_THROWS_AS(parse_scene(R"({"version":1,"seed":1,"width":2,"height":1,"obstacles":[[3]],"objects":[]})"),
                    SceneFormatError);
    CHECK_THROWS_AS(parse_scene(R"({"version":9,"seed":1,"width":1,"height":1,"obstacles":[[1]],"objects":[]})"),
                    SceneFormatError);
}
