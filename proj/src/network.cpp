#include "mwlab/network.hpp"

#include <cmath>
#include <set>

#include "mwlab/fluid.hpp"

namespace mwlab {

namespace {

int pool_threads = 0;

}  // namespace

int default_thread_count() {
    if (pool_threads > 0) return pool_threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void set_default_thread_count(int n) { pool_threads = n; }

std::vector<Vec> zero_closure(const std::vector<Vec>& vectors) {
    require(!vectors.empty(), "zero_closure: empty input");
    const std::size_t ell = vectors.front().size();
    for (const Vec& v : vectors) {
        require(v.size() == ell, "zero_closure: inconsistent dimensions");
        require(all_nonneg(v), "zero_closure: negative entry");
    }
    // Breadth-first over single-coordinate zeroings; reaches every subset.
    std::set<Vec> out(vectors.begin(), vectors.end());
    std::vector<Vec> frontier(vectors.begin(), vectors.end());
    while (!frontier.empty()) {
        std::vector<Vec> next;
        for (const Vec& v : frontier) {
            for (std::size_t j = 0; j < ell; ++j) {
                if (v[j] == 0.0) continue;
                Vec w = v;
                w[j] = 0.0;
                if (out.insert(w).second) next.push_back(std::move(w));
            }
        }
        frontier = std::move(next);
    }
    return {out.begin(), out.end()};  // std::set of Vec orders lexicographically
}

Network::Network(int ell, std::vector<Vec> service_vectors) : ell_(ell) {
    require(ell > 0, "Network: ell must be positive");
    require(!service_vectors.empty(), "Network: empty service set");
    for (const Vec& v : service_vectors)
        require(static_cast<int>(v.size()) == ell, "Network: service vector length != ell");
    std::set<Vec> raw(service_vectors.begin(), service_vectors.end());
    set_ = zero_closure(service_vectors);
    closure_added_ = set_.size() != raw.size();
}

double Network::max_service_norm() const {
    double m = 0.0;
    for (const Vec& v : set_) m = std::max(m, norm2(v));
    return m;
}

std::vector<int> mw_schedule_indices(const Network& net, const Vec& q, double tol) {
    require(static_cast<int>(q.size()) == net.ell(), "mw_schedules: dimension mismatch");
    require(tol >= 0.0, "mw_schedules: negative tolerance");
    double best = -1.0;
    for (const Vec& v : net.service_set()) best = std::max(best, dot(v, q));
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(net.service_set().size()); ++i)
        if (dot(net.service_set()[i], q) >= best - tol) out.push_back(i);
    return out;
}

std::vector<Vec> mw_schedules(const Network& net, const Vec& q, double tol) {
    std::vector<Vec> out;
    for (int i : mw_schedule_indices(net, q, tol)) out.push_back(net.service_set()[i]);
    return out;
}

int mw_pick_index(const Network& net, const Vec& q, double tol) {
    require(static_cast<int>(q.size()) == net.ell(), "mw_pick: dimension mismatch");
    double best = -1.0;
    for (const Vec& v : net.service_set()) best = std::max(best, dot(v, q));
    // service_set is sorted canonically, so the first vector within tolerance
    // of the maximum is the lexicographically smallest maximizer
    for (int i = 0; i < static_cast<int>(net.service_set().size()); ++i)
        if (dot(net.service_set()[i], q) >= best - tol) return i;
    return 0;  // unreachable: the set is nonempty
}

const Vec& mw_pick(const Network& net, const Vec& q) {
    return net.service_set()[mw_pick_index(net, q, 0.0)];
}

std::string to_string(CapacityClass c) {
    switch (c) {
        case CapacityClass::Interior: return "Interior";
        case CapacityClass::Boundary: return "Boundary";
        case CapacityClass::Exterior: return "Exterior";
    }
    return "?";
}

namespace {

// Euclidean distance from a point to conv(service set), via the certified
// min-norm projection on the shifted generators.
double hull_distance(const Network& net, const Vec& p) {
    std::vector<Vec> gens;
    gens.reserve(net.service_set().size());
    for (const Vec& v : net.service_set()) gens.push_back(sub(v, p));
    return norm2(min_norm_point(gens).point);
}

}  // namespace

CapacityVerdict capacity_membership(const Network& net, const Vec& lambda, double tol) {
    require(static_cast<int>(lambda.size()) == net.ell(), "capacity_membership: dimension mismatch");
    require(all_nonneg(lambda), "capacity_membership: negative rate");
    const double d_out = hull_distance(net, lambda);
    if (d_out > tol) return {CapacityClass::Exterior, -d_out};

    // Inside (up to tol): margin is the largest r such that the cross-polytope
    // lambda +- r e_j stays inside conv(S), found by bisection on certified
    // membership tests.  A conservative estimate of the Euclidean boundary
    // distance, exact enough for classification.
    const int ell = net.ell();
    double hi = 1.0;
    for (const Vec& v : net.service_set())
        for (double x : v) hi = std::max(hi, x);
    hi += 1.0;
    double lo = 0.0;
    auto ball_inside = [&](double r) {
        for (int j = 0; j < ell; ++j) {
            for (double sgn : {1.0, -1.0}) {
                Vec p = lambda;
                p[j] += sgn * r;
                if (p[j] < 0.0) return false;  // conv(S) lies in the nonnegative orthant
                if (hull_distance(net, p) > tol) return false;
            }
        }
        return true;
    };
    if (!ball_inside(1e-12)) return {CapacityClass::Boundary, 0.0};
    for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        (ball_inside(mid) ? lo : hi) = mid;
    }
    if (lo > tol) return {CapacityClass::Interior, lo};
    return {CapacityClass::Boundary, lo};
}

}  // namespace mwlab
