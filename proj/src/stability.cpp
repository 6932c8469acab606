#include "mwlab/stability.hpp"

#include <cmath>
#include <cstdio>

namespace mwlab {

Vec step(const Vec& q, const Vec& mu, const Vec& a) {
    require(q.size() == mu.size() && q.size() == a.size(), "step: dimension mismatch");
    require(all_nonneg(q) && all_nonneg(a), "step: negative state or arrival");
    Vec out(q.size());
    for (std::size_t j = 0; j < q.size(); ++j)
        out[j] = std::max(q[j] - mu[j], 0.0) + a[j];
    return out;
}

const Vec& SimTrace::state_at(std::int64_t slot) const {
    for (std::size_t i = 0; i < checkpoint_slots.size(); ++i)
        if (checkpoint_slots[i] == slot) return checkpoint_states[i];
    throw std::invalid_argument("SimTrace: no checkpoint at requested slot");
}

namespace {

std::vector<std::int64_t> default_checkpoints(std::int64_t T) {
    std::vector<std::int64_t> cps;
    for (std::int64_t c = 1; c < T; c *= 2) cps.push_back(c);
    cps.push_back(T);
    return cps;
}

}  // namespace

SimTrace simulate(const Network& net, const ArrivalPlan& plan, std::int64_t T,
                  std::uint64_t seed, const SimOptions& opts) {
    require(T >= 1, "simulate: horizon must be positive");
    require(plan.ell() == net.ell(), "simulate: plan/network dimension mismatch");
    require(plan.length() >= T, "simulate: plan shorter than the horizon");

    SimTrace trace;
    trace.horizon = T;
    trace.seed = seed;
    trace.replication = opts.replication;
    std::vector<std::int64_t> cps = opts.checkpoints.empty() ? default_checkpoints(T)
                                                             : opts.checkpoints;
    std::sort(cps.begin(), cps.end());
    cps.erase(std::unique(cps.begin(), cps.end()), cps.end());

    const int ell = net.ell();
    Vec q(ell, 0.0);
    Vec a(ell, 0.0);
    std::size_t next_cp = 0;
    while (next_cp < cps.size() && cps[next_cp] == 0) {
        trace.checkpoint_slots.push_back(0);
        trace.checkpoint_states.push_back(q);
        ++next_cp;
    }
    if (opts.record_arrivals) trace.arrival_log.reserve(static_cast<std::size_t>(T));

    for (std::int64_t t = 0; t < T; ++t) {
        const int pick = mw_pick_index(net, q, opts.pick_tol);
        const Vec& mu = net.service_set()[pick];
        for (int j = 0; j < ell; ++j)
            a[j] = plan.sample(seed, opts.replication, t, j);
        for (int j = 0; j < ell; ++j)
            q[j] = std::max(q[j] - mu[j], 0.0) + a[j];
        if (opts.record_arrivals) trace.arrival_log.push_back(a);
        if (opts.record_schedule) trace.schedule_log.push_back(pick);
        while (next_cp < cps.size() && cps[next_cp] == t + 1) {
            trace.checkpoint_slots.push_back(t + 1);
            trace.checkpoint_states.push_back(q);
            ++next_cp;
        }
    }
    return trace;
}

std::string to_string(Trend t) {
    switch (t) {
        case Trend::BoundedTrend: return "BoundedTrend";
        case Trend::GrowingTrend: return "GrowingTrend";
        case Trend::Inconclusive: return "Inconclusive";
    }
    return "?";
}

namespace {

double trimmed_mean_of(std::vector<double> v, double trim) {
    std::sort(v.begin(), v.end());
    const std::size_t k = static_cast<std::size_t>(std::floor(trim * v.size()));
    double s = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = k; i + k < v.size(); ++i) {
        s += v[i];
        ++cnt;
    }
    return cnt > 0 ? s / cnt : 0.0;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 0) return 0.0;
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (x[i] - mx) * (y[i] - my);
        den += (x[i] - mx) * (x[i] - mx);
    }
    return den > 0.0 ? num / den : 0.0;
}

double quantile_of(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double idx = p * (v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(idx));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double w = idx - lo;
    return (1.0 - w) * v[lo] + w * v[hi];
}

}  // namespace

QueueTrend trend_from_estimates(const std::vector<double>& trimmed_by_horizon,
                                const std::vector<std::vector<double>>& per_rep_by_horizon,
                                double trim, int bootstrap, std::uint64_t boot_seed) {
    QueueTrend out;
    const std::size_t H = trimmed_by_horizon.size();
    std::vector<double> idx(H);
    for (std::size_t h = 0; h < H; ++h) idx[h] = static_cast<double>(h);
    out.slope_index = lsq_slope(idx, trimmed_by_horizon);
    out.last_diff = H >= 2 ? trimmed_by_horizon[H - 1] - trimmed_by_horizon[H - 2] : 0.0;
    // head/tail averages over a few checkpoints; single endpoints are too noisy
    const std::size_t k = std::max<std::size_t>(1, std::min<std::size_t>(3, H / 2));
    double head = 0.0, tail = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        head += trimmed_by_horizon[i];
        tail += trimmed_by_horizon[H - 1 - i];
    }
    out.growth_ratio = tail / std::max(head, 1e-9);

    // bootstrap over replications
    const std::size_t R = per_rep_by_horizon.front().size();
    std::vector<double> slopes, diffs;
    CounterRng rng = make_rng(boot_seed, {0x626f6f74ULL});
    std::vector<double> est(H), vals(R);
    for (int b = 0; b < bootstrap; ++b) {
        std::vector<std::size_t> pick(R);
        for (std::size_t r = 0; r < R; ++r) pick[r] = rng.next_below(R);
        for (std::size_t h = 0; h < H; ++h) {
            for (std::size_t r = 0; r < R; ++r) vals[r] = per_rep_by_horizon[h][pick[r]];
            est[h] = trimmed_mean_of(vals, trim);
        }
        slopes.push_back(lsq_slope(idx, est));
        if (H >= 2) diffs.push_back(est[H - 1] - est[H - 2]);
    }
    out.slope_index_lb90 = quantile_of(slopes, 0.10);
    if (!diffs.empty()) {
        out.last_diff_lb90 = quantile_of(diffs, 0.10);
        out.last_diff_ub90 = quantile_of(diffs, 0.90);
    }

    // Verdict rules (documented; reproducible from the stored estimates):
    //  - GrowingTrend: bootstrap lower bound of the index slope is positive
    //    and the run shows material growth (final estimate at least 1.5x the
    //    first).
    //  - BoundedTrend: the last two checkpoints agree within the bootstrap
    //    band and the growth ratio stays below 1.5.
    //  - otherwise Inconclusive.
    const bool slope_positive = out.slope_index_lb90 > 0.0;
    const bool grew = out.growth_ratio > 1.5;
    const bool plateau = out.last_diff_lb90 <= 0.0 && out.last_diff_ub90 >= 0.0;
    if (slope_positive && grew)
        out.verdict = Trend::GrowingTrend;
    else if (plateau || !grew)
        out.verdict = Trend::BoundedTrend;
    else
        out.verdict = Trend::Inconclusive;
    return out;
}

StabilityReport monte_carlo(const Network& net, const ArrivalPlan& plan,
                            const std::vector<std::int64_t>& horizons, int R,
                            std::uint64_t seed, const MonteCarloOptions& opts) {
    require(R >= 8, "monte_carlo: need at least 8 replications");
    require(!horizons.empty(), "monte_carlo: no horizons");
    std::vector<std::int64_t> hs = horizons;
    std::sort(hs.begin(), hs.end());
    const std::int64_t T = hs.back();
    const int ell = net.ell();

    // values[rep][h][q]
    std::vector<std::vector<Vec>> values(R);
    parallel_for(static_cast<std::size_t>(R), [&](std::size_t rep) {
        SimOptions so;
        so.checkpoints = hs;
        so.replication = rep;
        SimTrace tr = simulate(net, plan, T, seed, so);
        values[rep].resize(hs.size());
        for (std::size_t h = 0; h < hs.size(); ++h) values[rep][h] = tr.state_at(hs[h]);
    }, opts.threads);

    StabilityReport rep;
    rep.horizons = hs;
    rep.replications = R;
    rep.trim = opts.trim;
    rep.seed = seed;
    rep.bootstrap = opts.bootstrap;
    rep.trimmed_mean.assign(ell, std::vector<double>(hs.size(), 0.0));
    rep.median.assign(ell, std::vector<double>(hs.size(), 0.0));
    rep.raw_mean.assign(ell, std::vector<double>(hs.size(), 0.0));

    for (int q = 0; q < ell; ++q) {
        std::vector<std::vector<double>> per_rep(hs.size(), std::vector<double>(R, 0.0));
        for (int r = 0; r < R; ++r)
            for (std::size_t h = 0; h < hs.size(); ++h) per_rep[h][r] = values[r][h][q];
        for (std::size_t h = 0; h < hs.size(); ++h) {
            rep.trimmed_mean[q][h] = trimmed_mean_of(per_rep[h], opts.trim);
            rep.median[q][h] = median_of(per_rep[h]);
            double s = 0.0;
            for (double v : per_rep[h]) s += v;
            rep.raw_mean[q][h] = s / R;
        }
        rep.trends.push_back(trend_from_estimates(rep.trimmed_mean[q], per_rep, opts.trim,
                                                  opts.bootstrap, seed + q));
        std::vector<double> idxh(hs.size());
        for (std::size_t h = 0; h < hs.size(); ++h) idxh[h] = static_cast<double>(hs[h]);
        rep.trends.back().slope_horizon = lsq_slope(idxh, rep.trimmed_mean[q]);
    }
    return rep;
}

JumpLog detect_jumps(const SimTrace& trace, const Vec& gamma, double M, double eta) {
    require(!trace.arrival_log.empty(), "detect_jumps: trace has no arrival log");
    require(M > 0.0 && eta > 0.0, "detect_jumps: M and eta must be positive");
    const std::int64_t T = trace.horizon;
    const int ell = static_cast<int>(trace.arrival_log.front().size());
    JumpLog log;
    log.M = M;
    log.eta = eta;
    log.counts.assign(ell, 0);
    for (std::int64_t t = 0; t < T; ++t) {
        const double arg = M + static_cast<double>(T - t);
        const double theta = arg / (eta * std::log(arg));
        for (int j = 0; j < ell; ++j) {
            const double v = trace.arrival_log[t][j];
            if (v > theta) {
                log.entries.push_back({t, j, v, theta});
                ++log.counts[j];
            }
        }
    }
    log.budget_ok_flag = budget_ok(gamma, log.counts);
    return log;
}

SensitivityDiagnostic sensitivity_check(const SimTrace& trace, const Network& net,
                                        const Vec& lambda) {
    require(!trace.arrival_log.empty(), "sensitivity_check: trace has no arrival log");
    SensitivityDiagnostic diag;
    const int ell = net.ell();
    const Vec q0(ell, 0.0);
    PiecewiseLinearTrajectory fl =
        integrate_fluid(net, lambda, q0, static_cast<double>(trace.horizon));

    // running max of |sum_{tau<=k}(A - lambda)| for k < t
    Vec cum(ell, 0.0);
    std::vector<double> max_fluc(static_cast<std::size_t>(trace.horizon) + 1, 0.0);
    double run = 0.0;
    for (std::int64_t t = 0; t < trace.horizon; ++t) {
        for (int j = 0; j < ell; ++j) cum[j] += trace.arrival_log[t][j] - lambda[j];
        run = std::max(run, norm2(cum));
        max_fluc[static_cast<std::size_t>(t) + 1] = run;
    }

    const double lam_norm = norm2(lambda);
    for (std::size_t i = 0; i < trace.checkpoint_slots.size(); ++i) {
        const std::int64_t t = trace.checkpoint_slots[i];
        const Vec qf = fl.eval(static_cast<double>(t));
        const double num = dist2(trace.checkpoint_states[i], qf);
        const double den = 1.0 + lam_norm + (t > 0 ? max_fluc[static_cast<std::size_t>(t)] : 0.0);
        const double ratio = num / den;
        diag.slots.push_back(t);
        diag.ratio_profile.push_back(ratio);
        diag.c_hat = std::max(diag.c_hat, ratio);
    }
    return diag;
}

// ---------------------------------------------------------------------------
// witness runners
// ---------------------------------------------------------------------------

namespace {

struct EpisodeWindow {
    std::int64_t start, end;
};

EpisodeDiagnostic diagnose_episode(const EpisodePlanSpec& spec, std::int64_t start,
                                   std::int64_t end, const std::vector<Vec>& arrivals,
                                   const Vec& q_start, const Vec& q_end, int m,
                                   double c_diag) {
    EpisodeDiagnostic d;
    d.start = start;
    d.end = end;
    const std::int64_t len = end - start;
    d.start_norm_bound = spec.c * static_cast<double>(len) / 5.0;
    d.start_ok = norm2(q_start) <= d.start_norm_bound;
    d.exceedance = q_end[m] >= spec.c * static_cast<double>(len) / 2.0;

    const int ell = static_cast<int>(spec.gamma.size());
    const std::int64_t dT = static_cast<std::int64_t>(
        std::floor(spec.d * static_cast<double>(len)));
    const int n = static_cast<int>(spec.theta_times.size());
    const int r = static_cast<int>(spec.profile.pieces.size());

    // E_jump analogue per scheduled jump
    for (int k = 0; k < n; ++k) {
        const std::int64_t w0 = start + static_cast<std::int64_t>(
            std::floor(spec.theta_times[k] * static_cast<double>(len)));
        const std::int64_t w1 = std::min(end, w0 + std::max<std::int64_t>(dT, 1));
        Vec B(ell, 0.0);
        for (std::int64_t t = w0; t < w1; ++t)
            for (int j = 0; j < ell; ++j) B[j] += arrivals[static_cast<std::size_t>(t - start)][j];
        Vec target(ell, 0.0);
        target[spec.jump_queues[k]] = spec.jump_sizes[k] * static_cast<double>(len);
        const double bound = spec.d * static_cast<double>(len) * (1.0 + 2.0 * spec.mu_bar);
        d.jump_events.push_back(dist2(B, target) <= bound);
    }

    // E_fluc analogue per inter-jump window, bound gamma_min c len / (32 C r)
    std::vector<double> thetas = spec.theta_times;
    thetas.insert(thetas.begin(), 0.0);
    thetas.push_back(1.0);
    double gamma_min = 1.0;
    for (double g : spec.gamma) gamma_min = std::min(gamma_min, g);
    const double fluc_bound =
        (c_diag > 0.0 && r > 0)
            ? gamma_min * spec.c * static_cast<double>(len) / (32.0 * c_diag * r)
            : 0.0;
    for (std::size_t k = 0; k + 1 < thetas.size(); ++k) {
        const std::int64_t a = start + static_cast<std::int64_t>(
            std::floor(thetas[k] * static_cast<double>(len))) + (k == 0 ? 0 : std::max<std::int64_t>(dT, 1));
        const std::int64_t b = start + static_cast<std::int64_t>(
            std::floor(thetas[k + 1] * static_cast<double>(len)));
        Vec cum(ell, 0.0);
        double worst = 0.0;
        for (std::int64_t t = a; t < b && t < end; ++t) {
            if (t < start) continue;
            for (int j = 0; j < ell; ++j) {
                const double frac = static_cast<double>(t - start) / static_cast<double>(len);
                cum[j] += arrivals[static_cast<std::size_t>(t - start)][j] -
                          spec.profile.rate_at(frac)[j];
            }
            worst = std::max(worst, norm2(cum));
        }
        d.fluc_events.push_back(worst <= fluc_bound);
    }
    return d;
}

WitnessRunReport run_witness_impl(const Network& net, const ArrivalPlan& plan,
                                  const std::vector<EpisodeWindow>& windows,
                                  const EpisodePlanSpec& spec, int m, int R,
                                  std::uint64_t seed, const WitnessRunOptions& opts) {
    WitnessRunReport report;
    report.replications = R;
    report.seed = seed;
    report.c = spec.c;
    report.final_T = windows.back().end - windows.back().start;
    report.diagnostics.resize(R);

    std::vector<int> exceed(R, 0);
    parallel_for(static_cast<std::size_t>(R), [&](std::size_t rep) {
        const int ell = net.ell();
        Vec q(ell, 0.0);
        std::vector<Vec> boundary_states;
        boundary_states.push_back(q);
        std::vector<std::vector<Vec>> episode_arrivals(windows.size());
        std::size_t w = 0;
        const std::int64_t T = windows.back().end;
        episode_arrivals[0].reserve(static_cast<std::size_t>(windows[0].end));
        Vec a(ell, 0.0);
        for (std::int64_t t = 0; t < T; ++t) {
            const Vec& mu = net.service_set()[mw_pick_index(net, q)];
            for (int j = 0; j < ell; ++j) a[j] = plan.sample(seed, rep, t, j);
            episode_arrivals[w].push_back(a);
            for (int j = 0; j < ell; ++j) q[j] = std::max(q[j] - mu[j], 0.0) + a[j];
            if (t + 1 == windows[w].end) {
                boundary_states.push_back(q);
                if (w + 1 < windows.size()) ++w;
            }
        }
        for (std::size_t k = 0; k < windows.size(); ++k) {
            report.diagnostics[rep].push_back(
                diagnose_episode(spec, windows[k].start, windows[k].end, episode_arrivals[k],
                                 boundary_states[k], boundary_states[k + 1], m, opts.c_diag));
        }
        exceed[rep] = report.diagnostics[rep].back().exceedance ? 1 : 0;
    }, opts.threads);

    for (int e : exceed) report.exceedances += e;
    report.exceedance_probability = static_cast<double>(report.exceedances) / R;
    return report;
}

}  // namespace

WitnessRunReport run_witness(const Network& net, const ConcatenatedPlan& plan, int m,
                             int R, std::uint64_t seed, const WitnessRunOptions& opts) {
    std::vector<EpisodeWindow> windows;
    const auto& bounds = plan.boundaries();
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i)
        windows.push_back({bounds[i], bounds[i + 1]});
    return run_witness_impl(net, plan, windows, plan.spec(), m, R, seed, opts);
}

WitnessRunReport run_witness_single(const Network& net, const EpisodePlanSpec& spec,
                                    std::int64_t T, int m, int R, std::uint64_t seed,
                                    const WitnessRunOptions& opts) {
    EpisodeSchedule plan(spec, T, 0);
    std::vector<EpisodeWindow> windows{{0, T}};
    return run_witness_impl(net, plan, windows, spec, m, R, seed, opts);
}

ForcedJumpResult forced_jump_run(const Network& net, const EpisodePlanSpec& spec,
                                 std::int64_t T, int m, const ForcedJumpOptions& opts) {
    ForcedJumpResult res;
    if (T < opts.min_T) return res;  // explicitly inconclusive
    res.ran = true;

    const int ell = net.ell();
    const std::int64_t dT = std::max<std::int64_t>(
        static_cast<std::int64_t>(std::floor(spec.d * static_cast<double>(T))), 1);
    const int n = static_cast<int>(spec.theta_times.size());

    // per-slot injected bulk: T a_k / floor(dT) at queue j_k over the window
    std::vector<std::pair<std::int64_t, std::int64_t>> windows;
    for (int k = 0; k < n; ++k) {
        const std::int64_t w0 = static_cast<std::int64_t>(
            std::floor(spec.theta_times[k] * static_cast<double>(T)));
        windows.push_back({w0, std::min<std::int64_t>(T, w0 + dT)});
    }

    SimTrace trace;
    trace.horizon = T;
    std::vector<std::int64_t> cps = opts.checkpoints;
    if (cps.empty())
        for (std::int64_t c = 1; c < T; c *= 2) cps.push_back(c);
    cps.push_back(T);
    std::sort(cps.begin(), cps.end());
    cps.erase(std::unique(cps.begin(), cps.end()), cps.end());

    Vec q(ell, 0.0);
    std::size_t next_cp = 0;
    for (std::int64_t t = 0; t < T; ++t) {
        const Vec& mu = net.service_set()[mw_pick_index(net, q)];
        const double frac = static_cast<double>(t) / static_cast<double>(T);
        Vec a = spec.profile.rate_at(frac);  // mean arrivals
        for (int k = 0; k < n; ++k) {
            if (t >= windows[k].first && t < windows[k].second)
                a[spec.jump_queues[k]] +=
                    spec.jump_sizes[k] * static_cast<double>(T) / static_cast<double>(dT);
        }
        for (int j = 0; j < ell; ++j) q[j] = std::max(q[j] - mu[j], 0.0) + a[j];
        while (next_cp < cps.size() && cps[next_cp] == t + 1) {
            trace.checkpoint_slots.push_back(t + 1);
            trace.checkpoint_states.push_back(q);
            ++next_cp;
        }
    }
    res.q_m_final = q[m];
    res.bound = spec.c * static_cast<double>(T) / 2.0 - opts.tol_frac * static_cast<double>(T);
    res.pass = res.q_m_final >= res.bound;
    res.trace = std::move(trace);
    return res;
}

std::string trace_csv(const SimTrace& trace, int stride) {
    require(stride >= 1, "trace_csv: stride must be positive");
    const int ell = trace.checkpoint_states.empty()
                        ? (trace.arrival_log.empty() ? 0 : static_cast<int>(trace.arrival_log.front().size()))
                        : static_cast<int>(trace.checkpoint_states.front().size());
    std::string out = "slot";
    char buf[64];
    for (int j = 1; j <= ell; ++j) {
        std::snprintf(buf, sizeof buf, ",Q_%d", j);
        out += buf;
    }
    if (!trace.arrival_log.empty())
        for (int j = 1; j <= ell; ++j) {
            std::snprintf(buf, sizeof buf, ",A_%d", j);
            out += buf;
        }
    out += "\n";
    for (std::size_t i = 0; i < trace.checkpoint_slots.size(); i += stride) {
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(trace.checkpoint_slots[i]));
        out += buf;
        for (double v : trace.checkpoint_states[i]) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            out += buf;
        }
        if (!trace.arrival_log.empty()) {
            const std::int64_t t = trace.checkpoint_slots[i];
            if (t >= 1 && t <= static_cast<std::int64_t>(trace.arrival_log.size()))
                for (double v : trace.arrival_log[static_cast<std::size_t>(t - 1)]) {
                    std::snprintf(buf, sizeof buf, ",%.17g", v);
                    out += buf;
                }
        }
        out += "\n";
    }
    return out;
}

}  // namespace mwlab
