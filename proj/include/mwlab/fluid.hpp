#ifndef MWLAB_FLUID_HPP
#define MWLAB_FLUID_HPP

#include <limits>
#include <string>
#include <vector>

#include "mwlab/network.hpp"

namespace mwlab {

constexpr double kInfTime = std::numeric_limits<double>::infinity();

/// Result of projecting the origin onto the convex hull of a finite set:
/// the point itself plus certifying convex weights over the input vectors.
struct MinNormResult {
    Vec point;
    Vec weights;  // one per input vector, >= 0, summing to 1
};

/// Minimum-norm element of conv(vectors), Wolfe active-set method.
/// Optimality is certified by the variational inequality
///   point . v >= |point|^2 - tol   for every input vector v.
MinNormResult min_norm_point(const std::vector<Vec>& vectors, double tol = 1e-10);

/// Independent oracle: enumerates affinely independent faces (<= dim+1
/// generators) and projects onto each affine hull.  Intended for small
/// generator counts (<= 12); used as the test oracle for the Wolfe route.
MinNormResult min_norm_point_bruteforce(const std::vector<Vec>& vectors);

/// The drift selected by the Max-Weight fluid dynamics at state x:
/// the minimum-norm element of lambda - conv(S(x)).
struct DriftQuery {
    Vec lambda;
    std::vector<Vec> active_set;  // S(x), canonical order
    Vec drift;                    // selected xi_lambda(x)
    Vec weights;                  // convex weights over active_set certifying membership
};

DriftQuery min_norm_drift(const Network& net, const Vec& lambda, const Vec& x);

struct JumpMark {
    double time;
    int queue;    // 0-based
    double size;  // strictly positive
};

/// Piecewise-linear trajectory: breakpoint times, right-value states, one
/// constant drift per segment, and the jump discontinuities.
struct PiecewiseLinearTrajectory {
    std::vector<double> times;   // strictly increasing, times.front() == t0
    std::vector<Vec> states;     // right-value at each breakpoint
    std::vector<Vec> drifts;     // drifts[i] on [times[i], times[i+1]); size = times.size()-1
    std::vector<JumpMark> jump_marks;
    bool event_cap_hit = false;  // true when integration stopped at the event cap

    double t_begin() const { return times.front(); }
    double t_end() const { return times.back(); }

    /// Right-continuous evaluation.
    Vec eval(double t) const;
    /// Left limit at t (differs from eval(t) only at jump marks).
    Vec left_limit(double t) const;
    /// Drift in effect on [t, next breakpoint); zero vector past the end.
    Vec drift_at(double t) const;

    /// Largest value of component m over [t_begin, t_end] together with the
    /// earliest time attaining it (piecewise-linear, so it is attained at a
    /// breakpoint or at the horizon).
    std::pair<double, double> max_component(int m) const;

    void append_breakpoint(double t, Vec state, Vec drift_before);
};

struct FluidOptions {
    double active_tol = 1e-9;      // absolute score tolerance for S(x)
    std::size_t event_cap = 1000000;
    double zeno_gap = 1e-12;       // minimal forward step
    int zeno_patience = 100;       // consecutive minimal steps tolerated
};

/// Event-driven integration of the fluid model at constant rate lambda.
/// Throws std::runtime_error on a Zeno-guard violation; an exceeded event cap
/// is reported through `event_cap_hit` with the partial trajectory attached.
PiecewiseLinearTrajectory integrate_fluid(const Network& net, const Vec& lambda,
                                          const Vec& q0, double t_end,
                                          const FluidOptions& opts = {});

/// Earliest t > 0 at which the argmax set S(x + t drift) changes or a
/// positive coordinate reaches zero; +inf when neither occurs.
double next_event(const Network& net, const Vec& lambda, const Vec& x, const Vec& drift,
                  const FluidOptions& opts = {});

/// CSV export with columns t, q_1..q_ell, drift_1..drift_ell, is_jump.
std::string trajectory_csv(const PiecewiseLinearTrajectory& traj);

}  // namespace mwlab

#endif
