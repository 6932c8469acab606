#ifndef MWLAB_JF_HPP
#define MWLAB_JF_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mwlab/fluid.hpp"

namespace mwlab {

/// Piecewise-constant arrival rates within an epsilon-ball of lambda_star.
struct RateProfile {
    struct Piece {
        double start;  // right-continuous piece starting here
        Vec rate;
    };
    std::vector<Piece> pieces;  // sorted by start, pieces.front().start == 0
    double epsilon = 0.0;
    Vec lambda_star;

    const Vec& rate_at(double t) const;
    void validate() const;

    static RateProfile constant(const Vec& lambda_star, double epsilon);
};

struct JumpSpec {
    double time;  // >= 0
    int queue;    // 0-based
    double size;  // > 0
};

/// Timed positive jumps, sorted by time.
struct JumpSchedule {
    std::vector<JumpSpec> jumps;

    /// Per-queue jump counts (the vector n).
    std::vector<int> counts(int ell) const;
    void validate() const;
};

/// True iff sum_j gamma_j n_j <= 1, with the convention inf * 0 = 0.
bool budget_ok(const Vec& gamma, const std::vector<int>& n);

/// All nonnegative integer vectors n with gamma^T n <= 1 (finite since every
/// gamma_j > 0), ordered by total jump count then lexicographically.
std::vector<std::vector<int>> enumerate_budgets(const Vec& gamma, int ell);

/// Integrates an epsilon-JF trajectory: start from the zero state, apply the
/// jumps as instantaneous increments, follow the fluid dynamics at the
/// profile's piecewise-constant rates in between.
PiecewiseLinearTrajectory integrate_jf(const Network& net, const RateProfile& profile,
                                       const JumpSchedule& jumps, double t_end,
                                       const FluidOptions& opts = {});

enum class RjfStatus { Violated, NoViolationFound };

struct RjfWitness {
    RateProfile profile;
    JumpSchedule jumps;
    double value = 0.0;  // attained q_m
    double time = 0.0;   // when it is attained
};

struct SearchStats {
    std::uint64_t evaluations = 0;
    double best_value = 0.0;
    std::uint64_t budget_evals = 0;
};

struct RjfVerdict {
    RjfStatus status = RjfStatus::NoViolationFound;
    std::optional<RjfWitness> witness;
    SearchStats search_stats;
};

struct SearchConfig {
    int grid = 17;                      // jump-time grid points in (0,1)
    int size_grid = 7;                  // geometric size grid points in [size_min, size_max]
    double size_min = 0.05;
    double size_max = 20.0;
    std::uint64_t budget_evals = 200000;
    std::uint64_t seed = 1;
    int polish_rounds = 200;            // random local perturbations of the best candidate
    double threshold = 1e-6;            // violation threshold on q_m
    int threads = 0;
    std::optional<RjfWitness> seed_witness;  // evaluated first when present
};

/// Sound violation finder for the RJF condition: enumerates admissible jump
/// count vectors and searches jump times, sizes and rate profiles for a
/// trajectory with q_m > threshold.  Violated verdicts carry a re-integrated
/// witness; NoViolationFound is relative to the search budget.
RjfVerdict check_rjf(const Network& net, const Vec& lambda_star, const Vec& gamma,
                     double epsilon, int m, const SearchConfig& search = {});

/// Point cloud sampled from the reachable set W(n) of epsilon-JF(n)
/// trajectories.
struct PointCloud {
    std::vector<Vec> points;
    std::vector<int> n;  // the jump-count vector that generated the cloud
    std::uint64_t seed = 0;
    int samples = 0;

    double distance(const Vec& x) const;  // exact nearest neighbor
};

struct ReachableOptions {
    double t_max = 3.0;          // trajectories integrated on [0, t_max]
    int points_per_traj = 4;     // random evaluation times per trajectory
    double size_min = 0.05;
    double size_max = 20.0;
    std::size_t cloud_cap = 100000;
    int threads = 0;
};

PointCloud sample_reachable(const Network& net, const Vec& lambda_star, const Vec& gamma,
                            double epsilon, const std::vector<int>& n, int samples,
                            std::uint64_t seed, const ReachableOptions& opts = {});

struct AttractionReport {
    int trials_requested = 0;
    int trials_run = 0;  // starts found outside the cloud
    int passed = 0;
    double pass_fraction = 1.0;  // vacuously 1 when trials_run == 0
    double worst_rate = 0.0;     // largest (least negative) observed decay rate
    bool vacuous = false;
};

/// Empirical test that the cloud is epsilon-attracting: from random starts
/// outside the cloud, the fluid flow at lambda_star must reduce the distance
/// to the cloud at average rate >= epsilon - tol while it stays positive.
AttractionReport attraction_test(const PointCloud& cloud, const Network& net,
                                 const Vec& lambda_star, double epsilon, int trials,
                                 std::uint64_t seed, double tol = -1.0);

}  // namespace mwlab

#endif
