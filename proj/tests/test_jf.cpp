#include <cmath>

#include "doctest.h"
#include "mwlab/jf.hpp"
#include "mwlab/scenario.hpp"

using namespace mwlab;

namespace {
const double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("budget_ok follows the worked examples") {
    CHECK(budget_ok({0.4, 0.4, kInf}, {1, 1, 0}));        // 0.8 <= 1
    CHECK_FALSE(budget_ok({0.8, 0.8, kInf}, {1, 1, 0}));  // 1.6 > 1
    CHECK(budget_ok({kInf, kInf, kInf}, {0, 0, 0}));      // inf * 0 = 0
    CHECK_FALSE(budget_ok({0.4, 0.4, kInf}, {0, 0, 1}));
    CHECK(budget_ok({0.5, 0.5}, {2, 0}));
    CHECK_THROWS(budget_ok({0.0, 1.0}, {0, 0}));
    CHECK_THROWS(budget_ok({-0.4, 1.0}, {0, 0}));
}

TEST_CASE("enumerate_budgets equals brute force over the box") {
    const Vec gamma{0.4, 0.7, kInf};
    auto got = enumerate_budgets(gamma, 3);
    std::vector<std::vector<int>> expect;
    for (int a = 0; a <= 2; ++a)
        for (int b = 0; b <= 1; ++b) {
            std::vector<int> n{a, b, 0};
            if (budget_ok(gamma, n)) expect.push_back(n);
        }
    CHECK(got.size() == expect.size());
    for (const auto& n : expect) {
        bool found = false;
        for (const auto& g : got)
            if (g == n) found = true;
        CHECK(found);
    }
}

TEST_CASE("integrate_jf reproduces the two-jump growth") {
    Network net = three_queue_network();
    RateProfile prof = RateProfile::constant({0.5, 0.5, 0.25}, 0.0);
    JumpSchedule js;
    js.jumps = {{0.0, 0, 1.0}, {0.0, 1, 1.0}};
    auto traj = integrate_jf(net, prof, js, 2.0);
    CHECK(traj.eval(0.0) == Vec{1, 1, 0});
    CHECK(traj.drifts.front()[0] == doctest::Approx(-0.5));
    CHECK(traj.drifts.front()[1] == doctest::Approx(-0.5));
    CHECK(traj.drifts.front()[2] == doctest::Approx(0.25));
    CHECK(traj.eval(1.0)[2] == doctest::Approx(0.25));
    CHECK(traj.jump_marks.size() == 2);
}

TEST_CASE("integrate_jf without jumps stays at zero under interior rates") {
    Network net = three_queue_network();
    RateProfile prof = RateProfile::constant({0.5, 0.5, 0.25}, 0.0);
    auto traj = integrate_jf(net, prof, {}, 5.0);
    for (double t = 0.0; t <= 5.0; t += 0.5)
        for (double v : traj.eval(t)) CHECK(std::fabs(v) <= 1e-12);
}

TEST_CASE("a single jump keeps queue 3 at zero in case 2") {
    Network net = three_queue_network();
    RateProfile prof = RateProfile::constant({0.5, 0.5, 0.25}, 0.0);
    JumpSchedule js;
    js.jumps = {{0.0, 0, 1.0}};
    auto traj = integrate_jf(net, prof, js, 6.0);
    for (double t = 0.0; t <= 6.0; t += 0.1) CHECK(traj.eval(t)[2] <= 1e-9);
}

TEST_CASE("jump marks raise exactly one coordinate") {
    Network net = three_queue_network();
    RateProfile prof = RateProfile::constant({0.5, 0.5, 0.25}, 0.05);
    JumpSchedule js;
    js.jumps = {{0.25, 0, 2.0}, {0.5, 1, 0.7}};
    auto traj = integrate_jf(net, prof, js, 3.0);
    REQUIRE(traj.jump_marks.size() == 2);
    for (const JumpMark& jm : traj.jump_marks) {
        Vec right = traj.eval(jm.time);
        Vec left = traj.left_limit(jm.time);
        int raised = 0;
        for (std::size_t j = 0; j < right.size(); ++j) {
            if (right[j] > left[j] + 1e-12) {
                ++raised;
                CHECK(static_cast<int>(j) == jm.queue);
                CHECK(right[j] - left[j] == doctest::Approx(jm.size));
            }
        }
        CHECK(raised == 1);
    }
}

TEST_CASE("jf input validation") {
    Network net = three_queue_network();
    RateProfile prof = RateProfile::constant({0.5, 0.5, 0.25}, 0.0);
    JumpSchedule bad;
    bad.jumps = {{0.5, 0, -1.0}};
    CHECK_THROWS(integrate_jf(net, prof, bad, 1.0));
    JumpSchedule late;
    late.jumps = {{2.0, 0, 1.0}};
    CHECK_THROWS(integrate_jf(net, prof, late, 1.0));
    RateProfile off = RateProfile::constant({0.9, 0.5, 0.25}, 0.0);
    off.lambda_star = {0.5, 0.5, 0.25};  // piece is outside the 0-ball
    CHECK_THROWS(integrate_jf(net, off, {}, 1.0));
}

TEST_CASE("two jumps at different times drive queue 4 in the timing example") {
    Network net = four_queue_timing_network();
    RateProfile prof = RateProfile::constant({1, 2, 1, 1}, 0.0);

    SUBCASE("single jump keeps queue 4 empty") {
        JumpSchedule js;
        js.jumps = {{0.0, 0, 27.0}};
        auto traj = integrate_jf(net, prof, js, 12.0);
        auto [v, t] = traj.max_component(3);
        CHECK(v <= 1e-9);
    }
    SUBCASE("a second jump of size 2 at time 5 makes queue 4 positive") {
        JumpSchedule js;
        js.jumps = {{0.0, 0, 27.0}, {5.0, 0, 2.0}};
        auto traj = integrate_jf(net, prof, js, 12.0);
        CHECK(traj.eval(5.0) == Vec{2, 2, 2, 0});
        auto [v, t] = traj.max_component(3);
        CHECK(v > 0.05);
        CHECK(t > 5.0);
    }
}

TEST_CASE("check_rjf reproduces the verdict table") {
    Network net = three_queue_network();
    SearchConfig cfg;
    cfg.budget_evals = 50000;

    SUBCASE("case 3: coordinated jumps violate") {
        auto v = check_rjf(net, {0.5, 0.5, 0.25}, {0.4, 0.4, kInf}, 0.05, 2, cfg);
        CHECK(v.status == RjfStatus::Violated);
        REQUIRE(v.witness.has_value());
        const auto n = v.witness->jumps.counts(3);
        CHECK(n[0] + n[1] >= 1);
        CHECK(v.witness->value > 1e-6);
    }
    SUBCASE("case 2: no violation found") {
        auto v = check_rjf(net, {0.5, 0.5, 0.25}, {0.8, 0.8, kInf}, 0.05, 2, cfg);
        CHECK(v.status == RjfStatus::NoViolationFound);
        CHECK(v.search_stats.best_value <= 1e-6);
        CHECK(v.search_stats.evaluations > 0);
    }
    SUBCASE("case 1: a single jump violates") {
        auto v = check_rjf(net, {0.5, 0.5, 0.75}, {0.8, 0.8, kInf}, 0.05, 2, cfg);
        CHECK(v.status == RjfStatus::Violated);
    }
    SUBCASE("a heavy-tailed target queue is never robustly delay stable") {
        auto v = check_rjf(net, {0.5, 0.5, 0.25}, {0.8, 0.8, 0.9}, 0.05, 2, cfg);
        CHECK(v.status == RjfStatus::Violated);
        REQUIRE(v.witness.has_value());
    }
    SUBCASE("zero gamma rejected") {
        CHECK_THROWS(check_rjf(net, {0.5, 0.5, 0.25}, {0.0, 0.8, kInf}, 0.05, 2, cfg));
    }
}

TEST_CASE("violated witnesses replay to the recorded value") {
    Network net = three_queue_network();
    auto v = check_rjf(net, {0.5, 0.5, 0.25}, {0.4, 0.4, kInf}, 0.05, 2);
    REQUIRE(v.witness.has_value());
    auto traj = integrate_jf(net, v.witness->profile, v.witness->jumps,
                             std::max(1.0, v.witness->time));
    const double replay = traj.eval(v.witness->time)[2];
    CHECK(std::fabs(replay - v.witness->value) <= 1e-9 * (1.0 + v.witness->value));
}

TEST_CASE("violations are monotone in epsilon when the witness is seeded") {
    Network net = three_queue_network();
    auto v1 = check_rjf(net, {0.5, 0.5, 0.75}, {0.8, 0.8, kInf}, 0.01, 2);
    REQUIRE(v1.status == RjfStatus::Violated);
    SearchConfig cfg;
    cfg.seed_witness = v1.witness;
    for (double eps2 : {0.02, 0.05, 0.1}) {
        auto v2 = check_rjf(net, {0.5, 0.5, 0.75}, {0.8, 0.8, kInf}, eps2, 2, cfg);
        CHECK(v2.status == RjfStatus::Violated);
    }
}

TEST_CASE("witness json round trip") {
    Network net = three_queue_network();
    auto v = check_rjf(net, {0.5, 0.5, 0.75}, {0.8, 0.8, kInf}, 0.05, 2);
    REQUIRE(v.witness.has_value());
    const std::string text = witness_json(*v.witness, {0.8, 0.8, kInf}, 2, 1);
    RjfWitness back = witness_from_json(text);
    CHECK(back.value == v.witness->value);
    CHECK(back.time == v.witness->time);
    REQUIRE(back.jumps.jumps.size() == v.witness->jumps.jumps.size());
    auto traj = integrate_jf(net, back.profile, back.jumps, std::max(1.0, back.time));
    CHECK(std::fabs(traj.eval(back.time)[2] - back.value) <= 1e-9 * (1.0 + back.value));
}

TEST_CASE("sample_reachable basics") {
    Network net = three_queue_network();
    SUBCASE("no jumps, no rate slack: the cloud is the origin") {
        auto cloud = sample_reachable(net, {0.5, 0.5, 0.25}, {0.8, 0.8, kInf}, 0.0,
                                      {0, 0, 0}, 20, 42);
        for (const Vec& p : cloud.points) CHECK(norm2(p) <= 1e-9);
    }
    SUBCASE("single queue-1 jumps stay on the first axis") {
        auto cloud = sample_reachable(net, {0.5, 0.5, 0.25}, {0.8, 0.8, kInf}, 0.02,
                                      {1, 0, 0}, 60, 42);
        CHECK(cloud.points.size() > 60);
        for (const Vec& p : cloud.points) {
            CHECK(p[1] <= 1e-9);
            CHECK(p[2] <= 1e-9);
            for (double x : p) CHECK(x >= -1e-12);
        }
    }
    SUBCASE("budget violations rejected") {
        CHECK_THROWS(sample_reachable(net, {0.5, 0.5, 0.25}, {0.8, 0.8, kInf}, 0.02,
                                      {1, 1, 0}, 10, 42));
    }
}

TEST_CASE("attraction_test on the origin cloud") {
    Network net = three_queue_network();
    PointCloud cloud;
    cloud.points = {Vec{0, 0, 0}};
    auto rep = attraction_test(cloud, net, {0.5, 0.5, 0.25}, 0.05, 40, 9);
    CHECK(rep.trials_run > 0);
    CHECK(rep.pass_fraction >= 0.95);
    CHECK(rep.worst_rate < 0.0);
}

TEST_CASE("attraction_test on the sampled single-jump cloud") {
    Network net = three_queue_network();
    auto cloud = sample_reachable(net, {0.5, 0.5, 0.25}, {0.8, 0.8, kInf}, 0.05,
                                  {1, 0, 0}, 200, 11);
    auto rep = attraction_test(cloud, net, {0.5, 0.5, 0.25}, 0.05, 60, 13);
    CHECK(rep.trials_run > 0);
    CHECK(rep.pass_fraction >= 0.95);
}
