#include "mwlab/fluid.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace mwlab {

namespace {

void check_common_dimension(const std::vector<Vec>& vectors) {
    require(!vectors.empty(), "min_norm_point: empty input");
    const std::size_t d = vectors.front().size();
    for (const Vec& v : vectors)
        require(v.size() == d, "min_norm_point: dimension mismatch");
}

// Affine minimizer over the span of the corral: minimize |sum a_i p_i| subject
// to sum a_i = 1 (signs free), via the KKT system on the Gram matrix.
bool affine_minimizer(const std::vector<Vec>& gens, const std::vector<int>& corral,
                      Vec& alpha) {
    const std::size_t m = corral.size();
    std::vector<std::vector<double>> sys(m + 1, std::vector<double>(m + 1, 0.0));
    Vec rhs(m + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j)
            sys[i][j] = dot(gens[corral[i]], gens[corral[j]]);
        sys[i][m] = 1.0;
        sys[m][i] = 1.0;
    }
    rhs[m] = 1.0;
    Vec sol;
    if (!solve_dense(sys, rhs, sol)) return false;
    alpha.assign(sol.begin(), sol.begin() + m);
    return true;
}

Vec combine(const std::vector<Vec>& gens, const std::vector<int>& corral, const Vec& w) {
    Vec x(gens.front().size(), 0.0);
    for (std::size_t i = 0; i < corral.size(); ++i) axpy(x, w[i], gens[corral[i]]);
    return x;
}

}  // namespace

MinNormResult min_norm_point(const std::vector<Vec>& vectors, double tol) {
    check_common_dimension(vectors);
    const int n = static_cast<int>(vectors.size());

    // start from the smallest-norm generator
    int start = 0;
    for (int i = 1; i < n; ++i)
        if (dot(vectors[i], vectors[i]) < dot(vectors[start], vectors[start])) start = i;

    std::vector<int> corral{start};
    Vec w{1.0};
    Vec x = vectors[start];

    const double scale = 1.0 + dot(vectors[start], vectors[start]);
    for (int iter = 0; iter < 64 * (n + 8); ++iter) {
        // most violating generator of the variational inequality
        int best = -1;
        double best_score = dot(x, x) - tol * scale;
        for (int i = 0; i < n; ++i) {
            const double s = dot(x, vectors[i]);
            if (s < best_score - 1e-15) {
                best_score = s;
                best = i;
            }
        }
        if (best < 0) break;  // certificate holds
        bool present = false;
        for (int c : corral)
            if (c == best) present = true;
        if (present) break;  // numerically stalled; certificate is checked below
        corral.push_back(best);
        w.push_back(0.0);

        // minor cycle: pull the affine minimizer back into the simplex
        for (int guard = 0; guard < 2 * n + 16; ++guard) {
            Vec alpha;
            if (!affine_minimizer(vectors, corral, alpha)) {
                // affinely dependent corral: drop the smallest-weight member
                std::size_t drop = 0;
                for (std::size_t i = 1; i < corral.size(); ++i)
                    if (w[i] < w[drop]) drop = i;
                corral.erase(corral.begin() + drop);
                w.erase(w.begin() + drop);
                double s = 0.0;
                for (double v : w) s += v;
                if (s <= 0.0) w.assign(corral.size(), 1.0 / corral.size());
                else
                    for (double& v : w) v /= s;
                continue;
            }
            bool inside = true;
            for (double a : alpha)
                if (a < 1e-12) inside = false;
            if (inside) {
                w = alpha;
                break;
            }
            // step from w toward alpha until the first coordinate hits zero
            double theta = 1.0;
            for (std::size_t i = 0; i < corral.size(); ++i)
                if (alpha[i] < 1e-12 && w[i] > alpha[i])
                    theta = std::min(theta, w[i] / (w[i] - alpha[i]));
            for (std::size_t i = 0; i < corral.size(); ++i)
                w[i] = (1.0 - theta) * w[i] + theta * alpha[i];
            // remove zeroed members
            for (std::size_t i = corral.size(); i-- > 0;) {
                if (w[i] <= 1e-12) {
                    corral.erase(corral.begin() + i);
                    w.erase(w.begin() + i);
                }
            }
            if (corral.empty()) {  // cannot happen, defensive renormalization
                corral.push_back(best);
                w.assign(1, 1.0);
            }
        }
        x = combine(vectors, corral, w);
    }

    MinNormResult res;
    res.point = x;
    res.weights.assign(n, 0.0);
    for (std::size_t i = 0; i < corral.size(); ++i) res.weights[corral[i]] += w[i];

    // variational-inequality certificate: x . v >= |x|^2 - tol for all v
    const double xx = dot(x, x);
    for (int i = 0; i < n; ++i) {
        if (dot(x, vectors[i]) < xx - 1e-7 * scale)
            throw std::runtime_error("min_norm_point: optimality certificate failed");
    }
    return res;
}

MinNormResult min_norm_point_bruteforce(const std::vector<Vec>& vectors) {
    check_common_dimension(vectors);
    const int n = static_cast<int>(vectors.size());
    require(n <= 20, "min_norm_point_bruteforce: too many generators");
    const int d = static_cast<int>(vectors.front().size());

    MinNormResult best;
    double best_sq = std::numeric_limits<double>::infinity();

    std::vector<int> subset;
    // enumerate subsets of size <= d+1: the optimum lies in the relative
    // interior of the hull of such a subset, where the affine projection of
    // the origin has nonnegative weights
    const int total = 1 << n;
    for (int mask = 1; mask < total; ++mask) {
        if (__builtin_popcount(static_cast<unsigned>(mask)) > d + 1) continue;
        subset.clear();
        for (int i = 0; i < n; ++i)
            if (mask & (1 << i)) subset.push_back(i);
        Vec alpha;
        if (subset.size() == 1) {
            alpha = {1.0};
        } else if (!affine_minimizer(vectors, subset, alpha)) {
            continue;  // affinely dependent; a smaller subset covers this face
        }
        bool convex = true;
        for (double a : alpha)
            if (a < -1e-12) convex = false;
        if (!convex) continue;
        Vec x = combine(vectors, subset, alpha);
        const double sq = dot(x, x);
        if (sq < best_sq - 1e-15) {
            best_sq = sq;
            best.point = x;
            best.weights.assign(n, 0.0);
            for (std::size_t i = 0; i < subset.size(); ++i)
                best.weights[subset[i]] = std::max(alpha[i], 0.0);
        }
    }
    return best;
}

DriftQuery min_norm_drift(const Network& net, const Vec& lambda, const Vec& x) {
    require(static_cast<int>(lambda.size()) == net.ell(), "min_norm_drift: lambda dimension");
    require(static_cast<int>(x.size()) == net.ell(), "min_norm_drift: state dimension");
    DriftQuery q;
    q.lambda = lambda;
    double score_scale = 0.0;
    for (const Vec& v : net.service_set()) score_scale = std::max(score_scale, std::fabs(dot(v, x)));
    q.active_set = mw_schedules(net, x, 1e-9 * (1.0 + score_scale));
    std::vector<Vec> gens;
    gens.reserve(q.active_set.size());
    for (const Vec& mu : q.active_set) gens.push_back(sub(lambda, mu));
    MinNormResult mn = min_norm_point(gens);
    q.drift = mn.point;
    q.weights = mn.weights;
    return q;
}

double next_event(const Network& net, const Vec& lambda, const Vec& x, const Vec& drift,
                  const FluidOptions& opts) {
    double score_scale = 0.0;
    for (const Vec& v : net.service_set()) score_scale = std::max(score_scale, std::fabs(dot(v, x)));
    const double tol = opts.active_tol * (1.0 + score_scale);

    double max_score = -1.0;
    for (const Vec& v : net.service_set()) max_score = std::max(max_score, dot(v, x));

    // Of the current maximizers, the ones that stay maximal for t > 0 are
    // those with the largest slope mu.drift; every min-norm support vector is
    // among them.
    double eff_slope = -std::numeric_limits<double>::infinity();
    for (const Vec& v : net.service_set())
        if (dot(v, x) >= max_score - tol) eff_slope = std::max(eff_slope, dot(v, drift));

    const double slope_tol = opts.active_tol * (1.0 + std::fabs(eff_slope));
    double t_min = kInfTime;

    for (const Vec& v : net.service_set()) {
        const double gap = max_score - dot(v, x);
        const double ds = dot(v, drift) - eff_slope;
        if (gap <= tol && ds >= -slope_tol) continue;  // already effectively active
        if (ds <= slope_tol) continue;                 // never catches up
        const double t = std::max(gap, 0.0) / ds;
        if (t > 0.0) t_min = std::min(t_min, t);
    }
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (x[j] > opts.active_tol && drift[j] < -opts.active_tol) {
            const double t = x[j] / -drift[j];
            if (t > 0.0) t_min = std::min(t_min, t);
        }
    }
    return t_min;
}

Vec PiecewiseLinearTrajectory::eval(double t) const {
    if (t <= times.front()) return states.front();
    if (t >= times.back()) {
        Vec out = states.back();
        if (!drifts.empty() && t > times.back()) {
            // extrapolate with the final recorded drift (callers normally stay
            // within [t_begin, t_end])
            axpy(out, t - times.back(), drifts.back());
        }
        return out;
    }
    // last breakpoint with time <= t
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
    Vec out = states[i];
    axpy(out, t - times[i], drifts[i]);
    return out;
}

Vec PiecewiseLinearTrajectory::left_limit(double t) const {
    for (const JumpMark& jm : jump_marks) {
        if (std::fabs(jm.time - t) <= 1e-15 * std::max(1.0, std::fabs(t))) {
            Vec out = eval(t);
            for (const JumpMark& jm2 : jump_marks)
                if (jm2.time == jm.time) out[jm2.queue] -= jm2.size;
            return out;
        }
    }
    return eval(t);
}

Vec PiecewiseLinearTrajectory::drift_at(double t) const {
    if (drifts.empty() || t >= times.back()) return Vec(states.front().size(), 0.0);
    if (t < times.front()) return Vec(states.front().size(), 0.0);
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
    return drifts[std::min(i, drifts.size() - 1)];
}

std::pair<double, double> PiecewiseLinearTrajectory::max_component(int m) const {
    double best = -std::numeric_limits<double>::infinity();
    double at = times.front();
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (states[i][m] > best + 1e-15) {
            best = states[i][m];
            at = times[i];
        }
    }
    return {best, at};
}

void PiecewiseLinearTrajectory::append_breakpoint(double t, Vec state, Vec drift_before) {
    times.push_back(t);
    states.push_back(std::move(state));
    if (times.size() > 1) drifts.push_back(std::move(drift_before));
}

PiecewiseLinearTrajectory integrate_fluid(const Network& net, const Vec& lambda,
                                          const Vec& q0, double t_end,
                                          const FluidOptions& opts) {
    require(all_nonneg(lambda), "integrate_fluid: negative rate");
    require(all_nonneg(q0, 1e-9), "integrate_fluid: negative initial state");
    require(t_end > 0.0, "integrate_fluid: t_end must be positive");

    Vec q = q0;
    for (double& v : q) v = std::max(v, 0.0);

    PiecewiseLinearTrajectory traj;
    traj.times.push_back(0.0);
    traj.states.push_back(q);

    double t = 0.0;
    int zeno_streak = 0;
    for (std::size_t ev = 0; ev < opts.event_cap; ++ev) {
        DriftQuery dq = min_norm_drift(net, lambda, q);
        // boundary consistency: zero-closure must make the selected drift
        // nonnegative at zero coordinates
        for (int j = 0; j < net.ell(); ++j) {
            if (q[j] <= opts.active_tol && dq.drift[j] < -1e-9)
                throw std::runtime_error("integrate_fluid: negative drift at an empty queue; "
                                         "service set is not behaving as zero-closed");
        }
        const double remaining = t_end - t;
        double dt = next_event(net, lambda, q, dq.drift, opts);
        dt = std::min(dt, remaining);
        if (dt <= 0.0) {
            if (traj.times.back() < t_end) traj.append_breakpoint(t_end, q, dq.drift);
            return traj;
        }
        if (dt < opts.zeno_gap && dt < remaining) {
            dt = std::min(opts.zeno_gap, remaining);
            if (++zeno_streak > opts.zeno_patience)
                throw std::runtime_error("integrate_fluid: Zeno guard violated (events too dense)");
        } else {
            zeno_streak = 0;
        }
        const Vec q_prev = q;
        axpy(q, dt, dq.drift);
        for (int j = 0; j < net.ell(); ++j) {
            if (q[j] < -1e-9)
                throw std::runtime_error("integrate_fluid: state went negative");
            // snap roundoff residue of an exact zero hit
            if (dq.drift[j] < 0.0 && q[j] < 1e-11 * (1.0 + q_prev[j])) q[j] = 0.0;
        }
        t += dt;
        traj.append_breakpoint(t, q, dq.drift);
        if (t >= t_end) return traj;
    }
    traj.event_cap_hit = true;
    return traj;
}

std::string trajectory_csv(const PiecewiseLinearTrajectory& traj) {
    const std::size_t ell = traj.states.front().size();
    std::string out = "t";
    char buf[64];
    for (std::size_t j = 1; j <= ell; ++j) {
        std::snprintf(buf, sizeof buf, ",q_%zu", j);
        out += buf;
    }
    for (std::size_t j = 1; j <= ell; ++j) {
        std::snprintf(buf, sizeof buf, ",drift_%zu", j);
        out += buf;
    }
    out += ",is_jump\n";

    auto emit = [&](double t, const Vec& state, const Vec& drift, int is_jump) {
        std::snprintf(buf, sizeof buf, "%.17g", t);
        out += buf;
        for (double v : state) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            out += buf;
        }
        for (double v : drift) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            out += buf;
        }
        out += is_jump ? ",1\n" : ",0\n";
    };

    const Vec zero(ell, 0.0);
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double t = traj.times[i];
        bool jumped = false;
        for (const JumpMark& jm : traj.jump_marks)
            if (jm.time == t) jumped = true;
        const Vec& drift = i < traj.drifts.size() ? traj.drifts[i] : zero;
        if (jumped) {
            Vec left = traj.states[i];
            for (const JumpMark& jm : traj.jump_marks)
                if (jm.time == t) left[jm.queue] -= jm.size;
            emit(t, left, i > 0 ? traj.drifts[i - 1] : zero, 0);
            emit(t, traj.states[i], drift, 1);
        } else {
            emit(t, traj.states[i], drift, 0);
        }
    }
    return out;
}

}  // namespace mwlab
