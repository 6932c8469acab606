#include <cmath>

#include "doctest.h"
#include "mwlab/fluid.hpp"
#include "mwlab/scenario.hpp"

using namespace mwlab;

namespace {

void approx_vec(const Vec& a, const Vec& b, double tol) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::fabs(a[i] - b[i]) <= tol);
}

// random zero-closed network on ell queues
Network random_network(CounterRng& rng, int ell) {
    const int base = 1 + static_cast<int>(rng.next_below(3));
    std::vector<Vec> vecs;
    for (int b = 0; b < base; ++b) {
        Vec v(ell, 0.0);
        for (int j = 0; j < ell; ++j)
            v[j] = rng.next_u01() < 0.6 ? std::round(rng.uniform(0.0, 8.0)) / 4.0 : 0.0;
        vecs.push_back(v);
    }
    return Network(ell, vecs);
}

}  // namespace

TEST_CASE("min_norm_point on simple sets") {
    SUBCASE("symmetric pair") {
        auto r = min_norm_point({{1, 0}, {0, 1}});
        CHECK(r.point[0] == doctest::Approx(0.5));
        CHECK(r.point[1] == doctest::Approx(0.5));
        CHECK(r.weights[0] == doctest::Approx(0.5));
    }
    SUBCASE("collinear, nearest vertex") {
        auto r = min_norm_point({{2, 0}, {3, 0}});
        CHECK(r.point[0] == doctest::Approx(2.0));
        CHECK(r.point[1] == doctest::Approx(0.0));
    }
    SUBCASE("drift set of the three-queue example") {
        // one-dimensional closed form: minimize (0.5-w)^2 + (w-0.25)^2 at w=0.375
        auto r = min_norm_point({{-0.5, -0.5, 0.75}, {-0.5, 0.5, -0.25}});
        CHECK(r.point[0] == doctest::Approx(-0.5));
        CHECK(r.point[1] == doctest::Approx(0.125));
        CHECK(r.point[2] == doctest::Approx(0.125));
    }
    SUBCASE("hull containing the origin") {
        auto r = min_norm_point({{1, 0}, {-1, 1}, {-1, -1}});
        CHECK(norm2(r.point) < 1e-8);
    }
    SUBCASE("errors") {
        CHECK_THROWS(min_norm_point({}));
        CHECK_THROWS(min_norm_point({{1, 0}, {1, 0, 0}}));
    }
}

TEST_CASE("min_norm_point certificate and convex-combination consistency") {
    CounterRng rng = make_rng(17, {0});
    for (int trial = 0; trial < 300; ++trial) {
        const int d = 1 + static_cast<int>(rng.next_below(4));
        const int n = 1 + static_cast<int>(rng.next_below(8));
        std::vector<Vec> gens;
        for (int i = 0; i < n; ++i) {
            Vec v(d);
            for (double& x : v) x = rng.uniform(-2.0, 2.0);
            gens.push_back(v);
        }
        auto r = min_norm_point(gens);
        // weights reconstruct the point
        Vec rec(d, 0.0);
        double wsum = 0.0;
        for (int i = 0; i < n; ++i) {
            CHECK(r.weights[i] >= -1e-12);
            wsum += r.weights[i];
            axpy(rec, r.weights[i], gens[i]);
        }
        CHECK(wsum == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(dist2(rec, r.point) < 1e-9);
        // variational inequality
        const double pp = dot(r.point, r.point);
        for (const Vec& v : gens) CHECK(dot(r.point, v) >= pp - 1e-8 * (1.0 + pp));
    }
}

TEST_CASE("Wolfe agrees with the face-enumeration oracle") {
    CounterRng rng = make_rng(23, {1});
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 1 + static_cast<int>(rng.next_below(4));
        const int n = 1 + static_cast<int>(rng.next_below(8));
        std::vector<Vec> gens;
        for (int i = 0; i < n; ++i) {
            Vec v(d);
            for (double& x : v) x = rng.uniform(-1.5, 1.5);
            gens.push_back(v);
        }
        auto a = min_norm_point(gens);
        auto b = min_norm_point_bruteforce(gens);
        CHECK(std::fabs(norm2(a.point) - norm2(b.point)) < 1e-6);
        CHECK(dist2(a.point, b.point) < 1e-6);
    }
}

TEST_CASE("min_norm_drift matches the worked three-queue drifts") {
    Network net = three_queue_network();
    SUBCASE("case 2 start keeps queues 2 and 3 flat") {
        auto q = min_norm_drift(net, {0.5, 0.5, 0.25}, {1, 0, 0});
        approx_vec(q.drift, {-0.5, 0.0, 0.0}, 1e-9);
    }
    SUBCASE("case 1 start grows queue 3 at (lambda-0.5)/2") {
        auto q = min_norm_drift(net, {0.5, 0.5, 0.75}, {1, 0, 0});
        approx_vec(q.drift, {-0.5, 0.125, 0.125}, 1e-9);
    }
    SUBCASE("two positive queues serve the pair") {
        auto q = min_norm_drift(net, {0.5, 0.5, 0.25}, {1, 1, 0});
        approx_vec(q.drift, {-0.5, -0.5, 0.25}, 1e-9);
    }
    SUBCASE("drift membership certificate") {
        auto q = min_norm_drift(net, {0.5, 0.5, 0.75}, {1, 0, 0});
        Vec rec = q.lambda;
        double wsum = 0.0;
        for (std::size_t i = 0; i < q.active_set.size(); ++i) {
            axpy(rec, -q.weights[i], q.active_set[i]);
            wsum += q.weights[i];
        }
        CHECK(wsum == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(dist2(rec, q.drift) < 1e-9);
    }
}

TEST_CASE("next_event finds crossings and zero hits") {
    Network net = three_queue_network();
    SUBCASE("queue 3 catches queue 1 at t = 1.6") {
        const double t = next_event(net, {0.5, 0.5, 0.75}, {1, 0, 0}, {-0.5, 0.125, 0.125});
        CHECK(t == doctest::Approx(1.6).epsilon(1e-9));
    }
    SUBCASE("queue 1 hits zero at t = 2") {
        const double t = next_event(net, {0.5, 0.5, 0.25}, {1, 0, 0}, {-0.5, 0.0, 0.0});
        CHECK(t == doctest::Approx(2.0).epsilon(1e-9));
    }
    SUBCASE("stationary state has no events") {
        const double t = next_event(net, {0.5, 0.5, 0.25}, {1, 1, 1}, {0, 0, 0});
        CHECK(std::isinf(t));
    }
}

TEST_CASE("integrate_fluid reproduces the worked trajectories") {
    Network net = three_queue_network();
    SUBCASE("case 2: drain to zero at t = 2 and stay") {
        auto traj = integrate_fluid(net, {0.5, 0.5, 0.25}, {1, 0, 0}, 10.0);
        approx_vec(traj.eval(2.0), {0, 0, 0}, 1e-9);
        approx_vec(traj.eval(10.0), {0, 0, 0}, 1e-9);
        for (double t = 0.0; t <= 10.0; t += 0.25) CHECK(traj.eval(t)[2] <= 1e-9);
    }
    SUBCASE("case 1: breakpoints at 1.6 and 4.0") {
        auto traj = integrate_fluid(net, {0.5, 0.5, 0.75}, {1, 0, 0}, 6.0);
        approx_vec(traj.eval(1.6), {0.2, 0.2, 0.2}, 1e-9);
        approx_vec(traj.eval(4.0), {0, 0, 0}, 1e-9);
        approx_vec(traj.eval(6.0), {0, 0, 0}, 1e-9);
        CHECK(traj.eval(0.8)[2] == doctest::Approx(0.1));  // slope 0.125
        bool has_16 = false, has_40 = false;
        for (double t : traj.times) {
            if (std::fabs(t - 1.6) < 1e-9) has_16 = true;
            if (std::fabs(t - 4.0) < 1e-9) has_40 = true;
        }
        CHECK(has_16);
        CHECK(has_40);
    }
    SUBCASE("zero start under interior rates stays zero") {
        auto traj = integrate_fluid(net, {0.5, 0.5, 0.25}, {0, 0, 0}, 5.0);
        approx_vec(traj.eval(5.0), {0, 0, 0}, 1e-12);
    }
    SUBCASE("errors") {
        CHECK_THROWS(integrate_fluid(net, {0.5, 0.5, 0.25}, {1, 0, 0}, -1.0));
        CHECK_THROWS(integrate_fluid(net, {0.5, 0.5, 0.25}, {-1, 0, 0}, 1.0));
    }
}

TEST_CASE("fluid trajectories are deterministic and nonnegative") {
    CounterRng rng = make_rng(31, {5});
    for (int trial = 0; trial < 40; ++trial) {
        const int ell = 2 + static_cast<int>(rng.next_below(3));
        Network net = random_network(rng, ell);
        Vec lam(ell), q0(ell);
        for (double& v : lam) v = rng.uniform(0.0, 1.0);
        for (double& v : q0) v = rng.uniform(0.0, 3.0);
        auto t1 = integrate_fluid(net, lam, q0, 8.0);
        auto t2 = integrate_fluid(net, lam, q0, 8.0);
        REQUIRE(t1.times.size() == t2.times.size());
        for (std::size_t i = 0; i < t1.times.size(); ++i) {
            CHECK(t1.times[i] == t2.times[i]);
            CHECK(t1.states[i] == t2.states[i]);
        }
        for (double t = 0.0; t <= 8.0; t += 0.37) {
            for (double v : t1.eval(t)) CHECK(v >= -1e-9);
        }
    }
}

TEST_CASE("MW fluid dynamics are nonexpansive and scale invariant") {
    CounterRng rng = make_rng(37, {6});
    for (int trial = 0; trial < 30; ++trial) {
        const int ell = 2 + static_cast<int>(rng.next_below(3));
        Network net = random_network(rng, ell);
        Vec lam(ell), q0(ell), p0(ell);
        for (double& v : lam) v = rng.uniform(0.0, 1.2);
        for (double& v : q0) v = rng.uniform(0.0, 3.0);
        for (double& v : p0) v = rng.uniform(0.0, 3.0);

        auto tq = integrate_fluid(net, lam, q0, 6.0);
        auto tp = integrate_fluid(net, lam, p0, 6.0);
        double prev = dist2(tq.eval(0.0), tp.eval(0.0));
        for (double t = 0.3; t <= 6.0; t += 0.3) {
            const double cur = dist2(tq.eval(t), tp.eval(t));
            CHECK(cur <= prev + 1e-7);
            prev = cur;
        }

        const double a = rng.uniform(0.3, 3.0);
        auto ta = integrate_fluid(net, lam, scale(q0, a), 6.0 * a);
        for (double t = 0.0; t <= 6.0; t += 0.5) {
            Vec expect = scale(tq.eval(t), a);
            Vec got = ta.eval(a * t);
            for (int j = 0; j < ell; ++j)
                CHECK(std::fabs(expect[j] - got[j]) <= 1e-9 * (1.0 + std::fabs(expect[j])));
        }
    }
}

TEST_CASE("trajectory CSV has the documented schema") {
    Network net = three_queue_network();
    auto traj = integrate_fluid(net, {0.5, 0.5, 0.75}, {1, 0, 0}, 5.0);
    const std::string csv = trajectory_csv(traj);
    CHECK(csv.rfind("t,q_1,q_2,q_3,drift_1,drift_2,drift_3,is_jump\n", 0) == 0);
    CHECK(csv.find("1.6") != std::string::npos);
}

TEST_CASE("four-queue timing reconstruction matches the reported breakpoints") {
    Network net = four_queue_timing_network();
    const Vec lam{1, 2, 1, 1};
    auto traj = integrate_fluid(net, lam, {27, 0, 0, 0}, 12.0);
    approx_vec(traj.eval(3.0), {6, 6, 0, 0}, 1e-9);
    approx_vec(traj.eval(5.0), {0, 2, 2, 0}, 1e-9);
    approx_vec(traj.eval(9.0), {0, 0, 0, 0}, 1e-9);
    // a single jump at time zero keeps queue 4 empty throughout
    for (double t = 0.0; t <= 12.0; t += 0.25) CHECK(traj.eval(t)[3] <= 1e-9);
}
