#ifndef MWLAB_STABILITY_HPP
#define MWLAB_STABILITY_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mwlab/arrivals.hpp"

namespace mwlab {

/// One-slot Max-Weight evolution: [q - mu]^+ + a.
Vec step(const Vec& q, const Vec& mu, const Vec& a);

struct SimTrace {
    std::int64_t horizon = 0;
    std::uint64_t seed = 0;
    std::uint64_t replication = 0;
    std::vector<std::int64_t> checkpoint_slots;
    std::vector<Vec> checkpoint_states;
    // full logs are optional; arrival_log[t][j] covers t in [0, horizon)
    std::vector<Vec> arrival_log;
    std::vector<int> schedule_log;  // mw_pick index per slot when recorded

    const Vec& state_at(std::int64_t slot) const;
};

struct SimOptions {
    std::vector<std::int64_t> checkpoints;  // defaults to geometric ratio 2 + horizon
    bool record_arrivals = false;
    bool record_schedule = false;
    std::uint64_t replication = 0;
    double pick_tol = 1e-9;
};

/// Simulates Max-Weight from the empty state; bit-exact reproducible from
/// (seed, replication).
SimTrace simulate(const Network& net, const ArrivalPlan& plan, std::int64_t T,
                  std::uint64_t seed, const SimOptions& opts = {});

enum class Trend { BoundedTrend, GrowingTrend, Inconclusive };
std::string to_string(Trend t);

struct QueueTrend {
    Trend verdict = Trend::Inconclusive;
    double slope_index = 0.0;        // trimmed mean vs checkpoint index
    double slope_index_lb90 = 0.0;   // bootstrap lower confidence bound
    double slope_horizon = 0.0;      // trimmed mean vs horizon (slots)
    double last_diff = 0.0;          // est[last] - est[last-1]
    double last_diff_lb90 = 0.0;     // bootstrap band for the plateau test
    double last_diff_ub90 = 0.0;
    double growth_ratio = 1.0;       // est[last] / max(est[first], eps)
};

struct StabilityReport {
    std::vector<std::int64_t> horizons;
    // estimates[q][h]: per queue, per horizon
    std::vector<std::vector<double>> trimmed_mean;
    std::vector<std::vector<double>> median;
    std::vector<std::vector<double>> raw_mean;
    std::vector<QueueTrend> trends;
    int replications = 0;
    double trim = 0.1;
    std::uint64_t seed = 0;
    int bootstrap = 200;
};

struct MonteCarloOptions {
    double trim = 0.1;
    int bootstrap = 200;
    int threads = 0;
};

/// R independent replications; per horizon, trimmed mean / median / raw mean
/// of every queue, with a growth verdict driven by the trimmed means only.
StabilityReport monte_carlo(const Network& net, const ArrivalPlan& plan,
                            const std::vector<std::int64_t>& horizons, int R,
                            std::uint64_t seed, const MonteCarloOptions& opts = {});

/// Recomputes a queue's verdict from stored estimates (pure function; used to
/// check report reproducibility).
QueueTrend trend_from_estimates(const std::vector<double>& trimmed_by_horizon,
                                const std::vector<std::vector<double>>& per_rep_by_horizon,
                                double trim, int bootstrap, std::uint64_t boot_seed);

struct JumpLogEntry {
    std::int64_t slot;
    int queue;
    double value;
    double threshold;
};

struct JumpLog {
    std::vector<JumpLogEntry> entries;
    std::vector<int> counts;   // N
    bool budget_ok_flag = true;  // gamma^T N <= 1
    double M = 0.0, eta = 0.0;
};

/// Flags slots with A_j(t) > theta_t = (M+T-t) / (eta log(M+T-t)).
JumpLog detect_jumps(const SimTrace& trace, const Vec& gamma, double M, double eta);

struct SensitivityDiagnostic {
    double c_hat = 0.0;                  // max ratio over checkpoints
    std::vector<double> ratio_profile;   // one per checkpoint
    std::vector<std::int64_t> slots;
};

/// Empirical counterpart of the Max-Weight sensitivity bound: the ratio of
/// |Q(t) - q(t)| to 1 + |lambda| + max_k |sum_{tau<=k} (A(tau) - lambda)|.
SensitivityDiagnostic sensitivity_check(const SimTrace& trace, const Network& net,
                                        const Vec& lambda);

struct EpisodeDiagnostic {
    std::int64_t start = 0, end = 0;
    double start_norm_bound = 0.0;   // c * len / 5
    bool start_ok = false;           // |Q(start)| <= bound
    std::vector<bool> jump_events;   // E_jump analogue per scheduled jump
    std::vector<bool> fluc_events;   // E_fluc analogue per inter-jump window
    bool exceedance = false;         // Q_m(end) >= c * len / 2
};

struct WitnessRunReport {
    int replications = 0;
    int exceedances = 0;                 // over the final episode
    double exceedance_probability = 0.0;
    double c = 0.0;
    std::int64_t final_T = 0;
    std::vector<std::vector<EpisodeDiagnostic>> diagnostics;  // [rep][episode]
    std::uint64_t seed = 0;
};

struct WitnessRunOptions {
    double c_diag = 1.0;  // stands in for the unknown sensitivity constant in E_fluc
    int threads = 0;
};

/// Stochastic witness runner: estimates P(Q_m(end) >= c len / 2) over the
/// final episode of the plan and reports per-episode event diagnostics.
WitnessRunReport run_witness(const Network& net, const ConcatenatedPlan& plan, int m,
                             int R, std::uint64_t seed,
                             const WitnessRunOptions& opts = {});
WitnessRunReport run_witness_single(const Network& net, const EpisodePlanSpec& spec,
                                    std::int64_t T, int m, int R, std::uint64_t seed,
                                    const WitnessRunOptions& opts = {});

struct ForcedJumpResult {
    bool ran = false;         // false when T is below the threshold
    bool pass = false;        // Q_m(T) >= c T / 2 - tol T
    double q_m_final = 0.0;
    double bound = 0.0;       // c T / 2 - tol T
    SimTrace trace;
};

struct ForcedJumpOptions {
    std::int64_t min_T = 1000;   // below this the check is Inconclusive
    double tol_frac = 0.02;      // tolerance as a fraction of T
    std::vector<std::int64_t> checkpoints;
};

/// Deterministic desk-scale check of the tracking lemma: mean arrivals plus a
/// bulk of T a_k at queue j_k spread over floor(dT) slots at each jump
/// fraction; asserts Q_m(T) >= cT/2 - tol T.
ForcedJumpResult forced_jump_run(const Network& net, const EpisodePlanSpec& spec,
                                 std::int64_t T, int m, const ForcedJumpOptions& opts = {});

/// Trace CSV: slot, Q_1..Q_ell (checkpoints), plus A_1..A_ell when recorded.
std::string trace_csv(const SimTrace& trace, int stride = 1);

}  // namespace mwlab

#endif
