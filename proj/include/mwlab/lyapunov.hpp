#ifndef MWLAB_LYAPUNOV_HPP
#define MWLAB_LYAPUNOV_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "mwlab/jf.hpp"

namespace mwlab {

/// A candidate special epsilon-Lyapunov function.
///
/// DistanceToCloud candidates evaluate the distance to the heavy-upward
/// closure of the stored points: for heavy coordinates only the shortfall
/// below a cloud point contributes.  The true reachable union is closed under
/// positive jumps along heavy coordinates, so the closure is the faithful
/// object and makes the monotonicity property exact on samples.  With an
/// empty heavy set this is the plain Euclidean distance to the points.
struct LyapunovCandidate {
    enum class Kind { DistanceToCloud, UserSupplied };
    Kind kind = Kind::DistanceToCloud;
    std::vector<Vec> cloud;          // DistanceToCloud only
    std::vector<int> heavy_set;      // 0-based heavy queue indices
    double epsilon = 0.0;
    std::function<double(const Vec&)> user_fn;  // UserSupplied only

    double operator()(const Vec& x) const;

    static LyapunovCandidate distance_to_cloud(std::vector<Vec> cloud,
                                               std::vector<int> heavy_set, double epsilon);
    static LyapunovCandidate user(std::function<double(const Vec&)> fn,
                                  std::vector<int> heavy_set, double epsilon);
};

/// Merges the sampled clouds (and the origin) into a distance candidate.
LyapunovCandidate build_distance_lyapunov(const std::vector<PointCloud>& clouds,
                                          std::vector<int> heavy_set, double epsilon);

struct PropertyCounterexample {
    Vec x;
    Vec y;             // second point (Lipschitz) or shifted/advanced point
    double margin;     // how badly the property failed
    double cloud_distance;  // annotation for decay failures near the sampled cloud
};

struct PropertyReport {
    bool pass = true;
    int checked = 0;
    int failures = 0;
    int flagged = 0;          // decay failures attributed to cloud sampling bias
    double worst_margin = 0.0;
    std::vector<PropertyCounterexample> counterexamples;  // capped
};

struct VerificationReport {
    PropertyReport lipschitz;      // |V(x)-V(y)| <= (1+tol)|x-y|
    PropertyReport drift;          // decay <= -epsilon + tol along fluid flows where V > 0
    PropertyReport zero_set;       // V(0)=0 and x_m>0 => V(x)>0
    PropertyReport heavy_monotone; // V(x + a e_j) <= V(x) + tol for heavy j
    bool overall_pass = false;
    std::uint64_t seed = 0;
    int samples = 0;
};

struct VerifyOptions {
    double tol_frac = 0.1;     // drift tolerance as a fraction of epsilon
    double box_hi = 3.0;       // sampling box [0, box_hi]^ell
    double bias_floor = 0.5;   // decay failures with V(x) below this are flagged, not failed
    int max_counterexamples = 8;
    int threads = 0;
};

/// Numerically verifies the four properties of a special epsilon-Lyapunov
/// function.  FAIL is certified by a concrete counterexample; PASS means no
/// counterexample was found at the sample budget.
VerificationReport verify_special(const LyapunovCandidate& candidate, const Network& net,
                                  const Vec& lambda_star, double epsilon, int m,
                                  int samples, std::uint64_t seed,
                                  const VerifyOptions& opts = {});

}  // namespace mwlab

#endif
