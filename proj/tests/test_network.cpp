#include <cmath>

#include "doctest.h"
#include "mwlab/network.hpp"
#include "mwlab/scenario.hpp"

using namespace mwlab;

namespace {

bool contains(const std::vector<Vec>& set, const Vec& v) {
    for (const Vec& s : set)
        if (s == v) return true;
    return false;
}

}  // namespace

TEST_CASE("zero_closure of a single pair vector") {
    auto out = zero_closure({{1, 1}});
    CHECK(out.size() == 4);
    CHECK(contains(out, {0, 0}));
    CHECK(contains(out, {0, 1}));
    CHECK(contains(out, {1, 0}));
    CHECK(contains(out, {1, 1}));
    CHECK(std::is_sorted(out.begin(), out.end(), lex_less));
}

TEST_CASE("zero_closure fixed point") {
    auto out = zero_closure({{0, 0, 0}});
    CHECK(out.size() == 1);
    CHECK(out.front() == Vec{0, 0, 0});
}

TEST_CASE("zero_closure of the three-queue pair set") {
    auto out = zero_closure({{1, 1, 0}, {1, 0, 1}, {0, 1, 1}});
    CHECK(out.size() == 7);
    for (const Vec& v : {Vec{1, 0, 0}, Vec{0, 1, 0}, Vec{0, 0, 1}, Vec{0, 0, 0}})
        CHECK(contains(out, v));
}

TEST_CASE("zero_closure rejects bad input") {
    CHECK_THROWS(zero_closure({}));
    CHECK_THROWS(zero_closure({{1.0, -0.5}}));
}

TEST_CASE("zero_closure is idempotent") {
    auto once = zero_closure({{2, 1, 0}, {0, 1, 3}});
    auto twice = zero_closure(once);
    CHECK(once == twice);
}

TEST_CASE("mw_schedules on the three-queue network") {
    Network net = three_queue_network();
    CHECK(net.closure_added());  // closure adds the singletons

    SUBCASE("unique maximizer") {
        auto sched = mw_schedules(net, {2, 3, 1});
        REQUIRE(sched.size() == 1);
        CHECK(sched.front() == Vec{1, 1, 0});
    }
    SUBCASE("zero state ties everything") {
        auto sched = mw_schedules(net, {0, 0, 0});
        CHECK(sched.size() == net.service_set().size());
    }
    SUBCASE("first-coordinate maximizers") {
        auto sched = mw_schedules(net, {5, 0, 0});
        REQUIRE(sched.size() == 3);
        CHECK(contains(sched, {1, 0, 0}));
        CHECK(contains(sched, {1, 0, 1}));
        CHECK(contains(sched, {1, 1, 0}));
    }
    SUBCASE("dimension mismatch") { CHECK_THROWS(mw_schedules(net, {1, 2})); }
}

TEST_CASE("mw_pick is the lexicographically smallest maximizer") {
    Network net = three_queue_network();
    CHECK(mw_pick(net, {2, 3, 1}) == Vec{1, 1, 0});
    CHECK(mw_pick(net, {0, 0, 0}) == Vec{0, 0, 0});
    CHECK(mw_pick(net, {5, 0, 0}) == Vec{1, 0, 0});
}

TEST_CASE("mw_schedules contains mw_pick and is scale invariant") {
    Network net = three_queue_network();
    CounterRng rng = make_rng(7, {1});
    for (int i = 0; i < 200; ++i) {
        Vec q(3);
        for (double& v : q) v = rng.uniform(0.0, 4.0);
        auto sched = mw_schedules(net, q, 0.0);
        CHECK(contains(sched, mw_pick(net, q)));
        const double a = rng.uniform(0.1, 9.0);
        Vec aq = scale(q, a);
        // scores scale uniformly, so the exact-tie argmax is unchanged
        auto sched2 = mw_schedules(net, aq, 0.0);
        CHECK(sched.size() == sched2.size());
        for (std::size_t k = 0; k < sched.size(); ++k) CHECK(sched[k] == sched2[k]);
    }
}

TEST_CASE("a maximizer zeroed at an empty queue is still a maximizer") {
    Network net = three_queue_network();
    CounterRng rng = make_rng(11, {2});
    for (int i = 0; i < 100; ++i) {
        Vec q(3);
        for (double& v : q) v = rng.uniform(0.0, 2.0);
        q[rng.next_below(3)] = 0.0;
        auto sched = mw_schedules(net, q, 0.0);
        for (const Vec& mu : sched) {
            for (int j = 0; j < 3; ++j) {
                if (q[j] != 0.0) continue;
                Vec z = mu;
                z[j] = 0.0;
                CHECK(contains(sched, z));
            }
        }
    }
}

TEST_CASE("capacity classification on the three-queue region") {
    // conv(S) = {v in [0,1]^3 : v1+v2+v3 <= 2}
    Network net = three_queue_network();
    SUBCASE("interior") {
        auto v = capacity_membership(net, {0.5, 0.5, 0.25});
        CHECK(v.classification == CapacityClass::Interior);
        CHECK(v.margin > 1e-9);
        CHECK(v.margin == doctest::Approx(0.25).epsilon(1e-6));  // limited by the third axis
    }
    SUBCASE("exterior") {
        auto v = capacity_membership(net, {1, 1, 1});
        CHECK(v.classification == CapacityClass::Exterior);
        CHECK(v.margin == doctest::Approx(-std::sqrt(1.0 / 3.0)).epsilon(1e-6));
    }
    SUBCASE("vertex is boundary") {
        auto v = capacity_membership(net, {1, 1, 0});
        CHECK(v.classification == CapacityClass::Boundary);
        CHECK(std::fabs(v.margin) <= 1e-9);
    }
    SUBCASE("random membership agrees with the analytic region") {
        CounterRng rng = make_rng(3, {9});
        for (int i = 0; i < 60; ++i) {
            Vec lam(3);
            for (double& v : lam) v = rng.uniform(0.0, 1.3);
            auto verdict = capacity_membership(net, lam);
            const double sum = lam[0] + lam[1] + lam[2];
            const double mx = std::max({lam[0], lam[1], lam[2]});
            const bool inside = sum <= 2.0 + 1e-12 && mx <= 1.0 + 1e-12;
            if (verdict.classification == CapacityClass::Exterior) CHECK_FALSE(inside);
            if (verdict.classification == CapacityClass::Interior) CHECK(inside);
        }
    }
}

TEST_CASE("network json round trip applies the closure") {
    const std::string text = R"({"ell": 2, "service_vectors": [[1, 1]]})";
    Network net = load_network_json(text);
    CHECK(net.ell() == 2);
    CHECK(net.service_set().size() == 4);
    CHECK(net.closure_added());
    Network net2 = load_network_json(network_json(net));
    CHECK(net2.service_set() == net.service_set());
    CHECK_FALSE(net2.closure_added());
}
