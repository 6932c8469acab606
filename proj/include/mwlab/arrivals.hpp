#ifndef MWLAB_ARRIVALS_HPP
#define MWLAB_ARRIVALS_HPP

#include <cstdint>
#include <memory>
#include <vector>

#include "mwlab/jf.hpp"
#include "mwlab/network.hpp"

namespace mwlab {

/// sigma(alpha) = integral over [mu_bar, inf) of x^-(1+alpha) log(x+1) dx,
/// adaptive quadrature with relative error <= 1e-8.
double sigma(double alpha, double mu_bar);

/// mu_bar = 1 + max |mu| + |lambda_star| + epsilon.
double compute_mu_bar(const Network& net, const Vec& lambda_star, double epsilon);

/// Per-queue arrival law.
struct ArrivalSpec {
    enum class Kind { Deterministic, ParetoMixture, EpisodeDensity };
    Kind kind = Kind::Deterministic;
    double rate = 0.0;    // Deterministic: the value; others: the mean
    double gamma = 0.0;   // tail exponent (ParetoMixture / EpisodeDensity)
    double x_min = 1.0;   // ParetoMixture support start
    double mu_bar = 1.0;  // EpisodeDensity support start

    void validate() const;
};

/// Tabulated inverse CDF for the episode tail density
/// f(x) proportional to x^-(2+gamma) log(x+1) on [mu_bar, inf).
/// Immutable after construction; safe for concurrent use.
class EpisodeDensityTable {
  public:
    EpisodeDensityTable(double gamma, double mu_bar);

    double gamma() const { return gamma_; }
    double mu_bar() const { return mu_bar_; }
    /// Mean of the conditional (tail) part, sigma(gamma)/sigma(1+gamma).
    double tail_mean() const { return tail_mean_; }
    /// Zero-atom mass for a given per-slot mean.
    double atom_mass(double lambda_bar) const;
    /// Inverse CDF of the tail part.
    double quantile(double u) const;
    /// CDF of the tail part (for verification).
    double cdf(double x) const;

  private:
    double gamma_, mu_bar_, tail_mean_;
    double sigma_g_, sigma_1g_;
    std::vector<double> grid_x_;   // log-spaced support grid
    std::vector<double> grid_cdf_;
};

/// One draw from the episode-adjusted density with mean lambda_bar:
/// zero with the atom mass, otherwise a tail draw from the table.
double sample_episode_density(const EpisodeDensityTable& table, double lambda_bar,
                              CounterRng& rng);
double sample_episode_density(double gamma, double lambda_bar, double mu_bar,
                              CounterRng& rng);

/// Zero-atom plus Pareto tail on [x_min, inf) with tail exponent gamma and the
/// requested mean.  Throws when the mean is not achievable with weight <= 1.
double sample_pareto_mixture(double gamma, double mean, double x_min, CounterRng& rng);
double pareto_mixture_weight(double gamma, double mean, double x_min);

// ---------------------------------------------------------------------------
// arrival plans: per-slot per-queue laws with counter-based sampling
// ---------------------------------------------------------------------------

/// A stochastic arrival plan over discrete slots.  sample() is a pure
/// function of (seed, replication, slot, queue): replays are bit-exact and
/// independent draws use disjoint stream positions.
class ArrivalPlan {
  public:
    virtual ~ArrivalPlan() = default;
    virtual int ell() const = 0;
    /// Slots covered; simulate() refuses horizons beyond this.
    virtual std::int64_t length() const = 0;
    virtual double mean(std::int64_t slot, int queue) const = 0;
    virtual double sample(std::uint64_t seed, std::uint64_t replication, std::int64_t slot,
                          int queue) const = 0;
};

/// Same per-queue law at every slot.
class IidPlan : public ArrivalPlan {
  public:
    IidPlan(std::vector<ArrivalSpec> specs);
    int ell() const override { return static_cast<int>(specs_.size()); }
    std::int64_t length() const override;
    double mean(std::int64_t slot, int queue) const override;
    double sample(std::uint64_t seed, std::uint64_t replication, std::int64_t slot,
                  int queue) const override;
    const std::vector<ArrivalSpec>& specs() const { return specs_; }

  private:
    std::vector<ArrivalSpec> specs_;
    std::vector<std::shared_ptr<const EpisodeDensityTable>> tables_;
};

/// The witness data of a violated RJF verdict in episode form.
struct EpisodePlanSpec {
    RateProfile profile;           // the witness rate profile (unit horizon)
    JumpSchedule jumps;            // witness jumps, times in (0,1)
    Vec gamma;                     // per-queue tail exponents
    double c = 0.0;                // q_m(1) of the witness
    double d = 0.0;                // the jump-window constant
    double mu_bar = 0.0;
    std::vector<double> theta_times;  // jump fractions
    std::vector<double> jump_sizes;
    std::vector<int> jump_queues;
};

/// Derives the episode constants (c, d, mu_bar, ...) from a witness.
EpisodePlanSpec make_episode_spec(const Network& net, const RjfWitness& witness,
                                  const Vec& gamma);

/// Episode-adjusted arrivals over [t0, t0+T): the witness rate profile
/// time-scaled by T, deterministic for gamma_j = inf, episode-density
/// otherwise.
class EpisodeSchedule : public ArrivalPlan {
  public:
    EpisodeSchedule(EpisodePlanSpec spec, std::int64_t T, std::int64_t t0 = 0);
    int ell() const override { return static_cast<int>(spec_.gamma.size()); }
    std::int64_t length() const override { return t0_ + T_; }
    double mean(std::int64_t slot, int queue) const override;
    double sample(std::uint64_t seed, std::uint64_t replication, std::int64_t slot,
                  int queue) const override;

    const EpisodePlanSpec& spec() const { return spec_; }
    std::int64_t T() const { return T_; }
    std::int64_t t0() const { return t0_; }

  private:
    EpisodePlanSpec spec_;
    std::int64_t T_, t0_;
    std::vector<std::shared_ptr<const EpisodeDensityTable>> tables_;
};

/// Concatenated episodes with the doubling length recursion.
class ConcatenatedPlan : public ArrivalPlan {
  public:
    ConcatenatedPlan(EpisodePlanSpec spec, std::vector<std::int64_t> boundaries);
    int ell() const override { return static_cast<int>(spec_.gamma.size()); }
    std::int64_t length() const override { return boundaries_.back(); }
    double mean(std::int64_t slot, int queue) const override;
    double sample(std::uint64_t seed, std::uint64_t replication, std::int64_t slot,
                  int queue) const override;

    const std::vector<std::int64_t>& boundaries() const { return boundaries_; }
    const EpisodePlanSpec& spec() const { return spec_; }

  private:
    const EpisodeSchedule& episode_at(std::int64_t slot) const;
    EpisodePlanSpec spec_;
    std::vector<std::int64_t> boundaries_;  // T_0=0 < T_1 < ... episode ends
    std::vector<std::unique_ptr<EpisodeSchedule>> episodes_;
};

struct ConcatenateOptions {
    int pilot_replications = 64;  // Monte Carlo estimate of E|Q(T_i)|
    double trim = 0.1;
    std::uint64_t seed = 1;
    int threads = 0;
};

struct ConcatenateResult {
    std::shared_ptr<ConcatenatedPlan> plan;
    std::vector<std::int64_t> boundaries;          // T_0..T_k
    std::vector<double> queue_norm_estimates;      // trimmed-mean estimate at each T_i
};

/// Builds the episode sequence T_0=0, T_1=base_T,
/// T_{i+1} = T_i + max(T_i, ceil(10 * est|Q(T_i)| / c)), with the expectation
/// replaced by a trimmed-mean pilot estimate.
ConcatenateResult concatenate_episodes(const Network& net, const EpisodePlanSpec& spec,
                                       std::int64_t base_T, int horizon_episodes,
                                       const ConcatenateOptions& opts = {});

}  // namespace mwlab

#endif
