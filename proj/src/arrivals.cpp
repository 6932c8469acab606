#include "mwlab/arrivals.hpp"

#include <cmath>
#include <map>

namespace mwlab {

namespace {

// adaptive Simpson on [a,b]
double simpson(const std::function<double(double)>& f, double a, double b, double fa,
               double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol, int depth = 48) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson(f, a, b, fa, fm, fb, whole, tol, depth);
}

}  // namespace

double sigma(double alpha, double mu_bar) {
    require(alpha > 0.0, "sigma: alpha must be positive");
    require(mu_bar > 0.0, "sigma: mu_bar must be positive");
    // substitute x = mu_bar * e^y:
    //   sigma = mu_bar^-alpha * integral_0^inf e^(-alpha y) log(mu_bar e^y + 1) dy
    auto g = [&](double y) { return std::exp(-alpha * y) * std::log1p(mu_bar * std::exp(y)); };
    // truncation point: bound the tail by e^(-aY)((log(2 mu_bar) + Y)/a + 1/a^2)
    double Y = std::max(10.0 / alpha, 10.0);
    double est = integrate_adaptive(g, 0.0, Y, 1e-12);
    for (int it = 0; it < 40; ++it) {
        const double tail =
            std::exp(-alpha * Y) *
            ((std::log(2.0 * mu_bar + 2.0) + Y) / alpha + 1.0 / (alpha * alpha));
        if (tail <= 1e-10 * est) break;
        const double Y2 = Y * 1.5;
        est += integrate_adaptive(g, Y, Y2, 1e-13 * std::max(est, 1.0));
        Y = Y2;
    }
    return std::pow(mu_bar, -alpha) * est;
}

double compute_mu_bar(const Network& net, const Vec& lambda_star, double epsilon) {
    return 1.0 + net.max_service_norm() + norm2(lambda_star) + epsilon;
}

void ArrivalSpec::validate() const {
    switch (kind) {
        case Kind::Deterministic:
            require(rate >= 0.0, "ArrivalSpec: negative rate");
            break;
        case Kind::ParetoMixture:
            require(std::isfinite(gamma) && gamma > 0.0, "ArrivalSpec: Pareto gamma in (0,inf)");
            require(rate > 0.0 && x_min > 0.0, "ArrivalSpec: Pareto mean and x_min positive");
            pareto_mixture_weight(gamma, rate, x_min);  // throws when infeasible
            break;
        case Kind::EpisodeDensity:
            require(std::isfinite(gamma) && gamma > 0.0, "ArrivalSpec: episode gamma in (0,inf)");
            require(rate >= 0.0 && mu_bar > 0.0, "ArrivalSpec: episode mean/mu_bar");
            break;
    }
}

// ---------------------------------------------------------------------------
// episode density
// ---------------------------------------------------------------------------

EpisodeDensityTable::EpisodeDensityTable(double gamma, double mu_bar)
    : gamma_(gamma), mu_bar_(mu_bar) {
    require(std::isfinite(gamma) && gamma > 0.0, "EpisodeDensityTable: gamma in (0,inf)");
    require(mu_bar > 0.0, "EpisodeDensityTable: mu_bar must be positive");
    sigma_g_ = sigma(gamma, mu_bar);
    sigma_1g_ = sigma(1.0 + gamma, mu_bar);
    tail_mean_ = sigma_g_ / sigma_1g_;

    // support cutoff: both the residual mass and the mean contribution of
    // the truncated tail must be negligible
    double x_max = mu_bar * 4.0;
    auto mass_tail = [&](double X) {
        return std::pow(X, -(1.0 + gamma)) *
               ((std::log(X) + 1.0) / (1.0 + gamma) + 1.0 / ((1.0 + gamma) * (1.0 + gamma)));
    };
    auto mean_tail = [&](double X) {
        return std::pow(X, -gamma) * ((std::log(X) + 1.0) / gamma + 1.0 / (gamma * gamma));
    };
    while (mass_tail(x_max) > 1e-9 * sigma_1g_ || mean_tail(x_max) > 2e-4 * sigma_g_)
        x_max *= 2.0;

    const int cells = 4096;
    grid_x_.resize(cells + 1);
    grid_cdf_.resize(cells + 1);
    const double lr = std::log(x_max / mu_bar);
    for (int i = 0; i <= cells; ++i) grid_x_[i] = mu_bar * std::exp(lr * i / cells);
    auto dens = [&](double x) { return std::pow(x, -(2.0 + gamma)) * std::log1p(x); };
    grid_cdf_[0] = 0.0;
    for (int i = 1; i <= cells; ++i) {
        // Simpson per cell; the log-spaced grid keeps cells locally smooth
        const double a = grid_x_[i - 1], b = grid_x_[i];
        const double m = 0.5 * (a + b);
        grid_cdf_[i] =
            grid_cdf_[i - 1] + (b - a) / 6.0 * (dens(a) + 4.0 * dens(m) + dens(b));
    }
    const double total = grid_cdf_.back();
    for (double& c : grid_cdf_) c /= total;
}

double EpisodeDensityTable::atom_mass(double lambda_bar) const {
    const double atom = 1.0 - lambda_bar * sigma_1g_ / sigma_g_;
    require(atom >= -1e-9 && atom <= 1.0 + 1e-12,
            "episode density: atom mass outside [0,1] (mean too large for mu_bar)");
    return std::clamp(atom, 0.0, 1.0);
}

double EpisodeDensityTable::quantile(double u) const {
    u = std::clamp(u, 0.0, 1.0);
    const auto it = std::lower_bound(grid_cdf_.begin(), grid_cdf_.end(), u);
    if (it == grid_cdf_.begin()) return grid_x_.front();
    if (it == grid_cdf_.end()) return grid_x_.back();
    const std::size_t i = static_cast<std::size_t>(it - grid_cdf_.begin());
    const double c0 = grid_cdf_[i - 1], c1 = grid_cdf_[i];
    const double w = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
    return grid_x_[i - 1] + w * (grid_x_[i] - grid_x_[i - 1]);
}

double EpisodeDensityTable::cdf(double x) const {
    if (x <= grid_x_.front()) return 0.0;
    if (x >= grid_x_.back()) return 1.0;
    const auto it = std::upper_bound(grid_x_.begin(), grid_x_.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - grid_x_.begin());
    const double x0 = grid_x_[i - 1], x1 = grid_x_[i];
    const double w = (x - x0) / (x1 - x0);
    return grid_cdf_[i - 1] + w * (grid_cdf_[i] - grid_cdf_[i - 1]);
}

double sample_episode_density(const EpisodeDensityTable& table, double lambda_bar,
                              CounterRng& rng) {
    const double atom = table.atom_mass(lambda_bar);
    const double u = rng.next_u01();
    if (u < atom) return 0.0;
    return table.quantile(rng.next_u01());
}

double sample_episode_density(double gamma, double lambda_bar, double mu_bar,
                              CounterRng& rng) {
    const EpisodeDensityTable table(gamma, mu_bar);
    return sample_episode_density(table, lambda_bar, rng);
}

// ---------------------------------------------------------------------------
// Pareto mixture
// ---------------------------------------------------------------------------

double pareto_mixture_weight(double gamma, double mean, double x_min) {
    require(std::isfinite(gamma) && gamma > 0.0,
            "pareto_mixture: gamma must be finite and positive (Deterministic covers inf)");
    require(x_min > 0.0 && mean > 0.0, "pareto_mixture: positive mean and x_min required");
    const double tail_mean = x_min * (1.0 + gamma) / gamma;
    const double w = mean / tail_mean;
    require(w <= 1.0 + 1e-12, "pareto_mixture: requested mean too large for weight <= 1");
    return std::min(w, 1.0);
}

double sample_pareto_mixture(double gamma, double mean, double x_min, CounterRng& rng) {
    const double w = pareto_mixture_weight(gamma, mean, x_min);
    if (rng.next_u01() >= w) return 0.0;
    const double u = std::max(rng.next_u01(), 1e-300);
    return x_min * std::pow(u, -1.0 / (1.0 + gamma));
}

// ---------------------------------------------------------------------------
// plans
// ---------------------------------------------------------------------------

namespace {
constexpr std::uint64_t kIidTag = 0x696964706cULL;       // "iidpl"
constexpr std::uint64_t kEpisodeTag = 0x6570697364ULL;   // "episd"
}  // namespace

IidPlan::IidPlan(std::vector<ArrivalSpec> specs) : specs_(std::move(specs)) {
    require(!specs_.empty(), "IidPlan: no queues");
    for (const ArrivalSpec& s : specs_) s.validate();
    for (const ArrivalSpec& s : specs_) {
        if (s.kind == ArrivalSpec::Kind::EpisodeDensity)
            tables_.push_back(std::make_shared<EpisodeDensityTable>(s.gamma, s.mu_bar));
        else
            tables_.push_back(nullptr);
    }
}

std::int64_t IidPlan::length() const { return std::numeric_limits<std::int64_t>::max(); }

double IidPlan::mean(std::int64_t, int queue) const { return specs_[queue].rate; }

double IidPlan::sample(std::uint64_t seed, std::uint64_t replication, std::int64_t slot,
                       int queue) const {
    const ArrivalSpec& s = specs_[queue];
    if (s.kind == ArrivalSpec::Kind::Deterministic) return s.rate;
    CounterRng rng = make_rng(seed, {kIidTag, replication, static_cast<std::uint64_t>(slot),
                                     static_cast<std::uint64_t>(queue)});
    if (s.kind == ArrivalSpec::Kind::ParetoMixture)
        return sample_pareto_mixture(s.gamma, s.rate, s.x_min, rng);
    return sample_episode_density(*tables_[queue], s.rate, rng);
}

EpisodePlanSpec make_episode_spec(const Network& net, const RjfWitness& witness,
                                  const Vec& gamma) {
    require(static_cast<int>(gamma.size()) == net.ell(), "make_episode_spec: gamma dimension");
    EpisodePlanSpec spec;
    spec.profile = witness.profile;
    spec.jumps = witness.jumps;
    spec.gamma = gamma;
    spec.c = witness.value;
    require(spec.c > 0.0, "make_episode_spec: witness value must be positive");
    spec.mu_bar = compute_mu_bar(net, witness.profile.lambda_star, witness.profile.epsilon);

    double gamma_min = 1.0;  // the tracking constants assume gamma <= 1
    for (double g : gamma) {
        require(g > 0.0, "make_episode_spec: tail exponents must be positive");
        if (std::isfinite(g)) gamma_min = std::min(gamma_min, g);
    }

    for (const JumpSpec& j : spec.jumps.jumps) {
        require(j.time > 0.0 && j.time < 1.0, "make_episode_spec: jump times must lie in (0,1)");
        spec.theta_times.push_back(j.time);
        spec.jump_sizes.push_back(j.size);
        spec.jump_queues.push_back(j.queue);
    }
    for (std::size_t k = 1; k < spec.theta_times.size(); ++k)
        require(spec.theta_times[k] > spec.theta_times[k - 1],
                "make_episode_spec: jump times must be strictly increasing");

    // d = (1/2) min{ gamma c / (4 (1+4 mu_bar)), min gap, min size / (1+2 mu_bar) }
    double min_gap = 1.0;
    {
        double prev = 0.0;
        for (double th : spec.theta_times) {
            min_gap = std::min(min_gap, th - prev);
            prev = th;
        }
        min_gap = std::min(min_gap, 1.0 - prev);
    }
    double term3;
    if (spec.jump_sizes.empty()) {
        term3 = 0.0;  // no jumps: the episode degenerates to pure rate-following
    } else {
        double min_size = spec.jump_sizes.front();
        for (double a : spec.jump_sizes) min_size = std::min(min_size, a);
        term3 = min_size / (1.0 + 2.0 * spec.mu_bar);
    }
    const double term1 = gamma_min * spec.c / (4.0 * (1.0 + 4.0 * spec.mu_bar));
    spec.d = 0.5 * std::min({term1, min_gap, term3});
    return spec;
}

EpisodeSchedule::EpisodeSchedule(EpisodePlanSpec spec, std::int64_t T, std::int64_t t0)
    : spec_(std::move(spec)), T_(T), t0_(t0) {
    require(T_ >= 1, "EpisodeSchedule: T must be at least 1");
    require(t0_ >= 0, "EpisodeSchedule: negative start slot");
    std::map<double, std::shared_ptr<const EpisodeDensityTable>> cache;
    for (double g : spec_.gamma) {
        if (std::isfinite(g)) {
            auto& slot = cache[g];
            if (!slot) slot = std::make_shared<EpisodeDensityTable>(g, spec_.mu_bar);
        }
    }
    for (double g : spec_.gamma)
        tables_.push_back(std::isfinite(g) ? cache[g] : nullptr);
}

double EpisodeSchedule::mean(std::int64_t slot, int queue) const {
    if (slot < t0_ || slot >= t0_ + T_) return 0.0;
    const double frac = static_cast<double>(slot - t0_) / static_cast<double>(T_);
    return spec_.profile.rate_at(frac)[queue];
}

double EpisodeSchedule::sample(std::uint64_t seed, std::uint64_t replication,
                               std::int64_t slot, int queue) const {
    const double lam = mean(slot, queue);
    if (!std::isfinite(spec_.gamma[queue])) return lam;  // deterministic queue
    CounterRng rng = make_rng(seed, {kEpisodeTag, replication,
                                     static_cast<std::uint64_t>(slot),
                                     static_cast<std::uint64_t>(queue)});
    return sample_episode_density(*tables_[queue], lam, rng);
}

ConcatenatedPlan::ConcatenatedPlan(EpisodePlanSpec spec, std::vector<std::int64_t> boundaries)
    : spec_(std::move(spec)), boundaries_(std::move(boundaries)) {
    require(boundaries_.size() >= 2 && boundaries_.front() == 0,
            "ConcatenatedPlan: boundaries must start at 0");
    for (std::size_t i = 1; i < boundaries_.size(); ++i) {
        require(boundaries_[i] > boundaries_[i - 1], "ConcatenatedPlan: unsorted boundaries");
        episodes_.push_back(std::make_unique<EpisodeSchedule>(
            spec_, boundaries_[i] - boundaries_[i - 1], boundaries_[i - 1]));
    }
}

const EpisodeSchedule& ConcatenatedPlan::episode_at(std::int64_t slot) const {
    const auto it = std::upper_bound(boundaries_.begin(), boundaries_.end(), slot);
    std::size_t i = static_cast<std::size_t>(it - boundaries_.begin());
    i = std::min(std::max<std::size_t>(i, 1), episodes_.size());
    return *episodes_[i - 1];
}

double ConcatenatedPlan::mean(std::int64_t slot, int queue) const {
    if (slot < 0 || slot >= length()) return 0.0;
    return episode_at(slot).mean(slot, queue);
}

double ConcatenatedPlan::sample(std::uint64_t seed, std::uint64_t replication,
                                std::int64_t slot, int queue) const {
    if (slot < 0 || slot >= length()) return 0.0;
    return episode_at(slot).sample(seed, replication, slot, queue);
}

// ---------------------------------------------------------------------------
// episode concatenation with pilot estimates
// ---------------------------------------------------------------------------

namespace {

double trimmed_mean(std::vector<double> v, double trim) {
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

// trimmed-mean pilot estimate of E|Q(T)| under the plan, Max-Weight dynamics
double pilot_queue_norm(const Network& net, const ArrivalPlan& plan, std::int64_t T, int R,
                        double trim, std::uint64_t seed, int threads) {
    std::vector<double> norms(R, 0.0);
    parallel_for(static_cast<std::size_t>(R), [&](std::size_t rep) {
        Vec q(net.ell(), 0.0);
        for (std::int64_t t = 0; t < T; ++t) {
            const Vec& mu = net.service_set()[mw_pick_index(net, q)];
            for (int j = 0; j < net.ell(); ++j)
                q[j] = std::max(q[j] - mu[j], 0.0) + plan.sample(seed, rep, t, j);
        }
        norms[rep] = norm2(q);
    }, threads);
    return trimmed_mean(std::move(norms), trim);
}

}  // namespace

ConcatenateResult concatenate_episodes(const Network& net, const EpisodePlanSpec& spec,
                                       std::int64_t base_T, int horizon_episodes,
                                       const ConcatenateOptions& opts) {
    require(spec.c > 0.0, "concatenate_episodes: witness value c must be positive");
    require(base_T >= 2, "concatenate_episodes: base_T must be at least 2");
    require(horizon_episodes >= 1, "concatenate_episodes: need at least one episode");

    ConcatenateResult res;
    res.boundaries = {0, base_T};
    res.queue_norm_estimates = {0.0};
    for (int i = 1; i < horizon_episodes; ++i) {
        const std::int64_t Ti = res.boundaries.back();
        ConcatenatedPlan current(spec, res.boundaries);
        const double est = pilot_queue_norm(net, current, Ti, opts.pilot_replications,
                                            opts.trim, opts.seed, opts.threads);
        res.queue_norm_estimates.push_back(est);
        const std::int64_t grow =
            static_cast<std::int64_t>(std::ceil(10.0 * est / spec.c));
        res.boundaries.push_back(Ti + std::max(Ti, grow));
    }
    res.plan = std::make_shared<ConcatenatedPlan>(spec, res.boundaries);
    return res;
}

}  // namespace mwlab
