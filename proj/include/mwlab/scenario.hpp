#ifndef MWLAB_SCENARIO_HPP
#define MWLAB_SCENARIO_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "mwlab/arrivals.hpp"
#include "mwlab/jf.hpp"
#include "mwlab/lyapunov.hpp"
#include "mwlab/network.hpp"
#include "mwlab/stability.hpp"

namespace mwlab {

/// Network description file (JSON): {"ell": n, "service_vectors": [[...], ...]}.
/// The loader applies the zero closure and records whether it added vectors.
Network load_network_json(const std::string& text);
Network load_network_file(const std::string& path);
std::string network_json(const Network& net);

/// Witness serialization: rate profile, jump schedule, attained value/time,
/// seed; queue indices are 1-based in the file.
std::string witness_json(const RjfWitness& w, const Vec& gamma, int m, std::uint64_t seed);
RjfWitness witness_from_json(const std::string& text);

/// A scenario: network + nominal rates + tail exponents + target queue.
struct Scenario {
    explicit Scenario(Network n) : net(std::move(n)) {}

    Network net;
    Vec lambda_star;
    Vec gamma;
    double epsilon = 0.05;
    int m = 0;  // 0-based target queue
    std::vector<ArrivalSpec> arrivals;  // per queue, for stochastic commands
    std::string name;

    void validate() const;
};

/// The three-queue example: up to two queues served per slot, each at rate 1.
Network three_queue_network();

/// Cases of the three-queue example:
///  1: lambda3 = 0.75, gamma = (0.6, 0.6, inf)  (single jumps suffice)
///  2: lambda3 = 0.25, gamma = (0.8, 0.8, inf)  (robustly delay stable)
///  3: lambda3 = 0.25, gamma = (0.4, 0.4, inf)  (coordinated jumps required)
Scenario three_queue_scenario(int case_id, double x_min = 10.0);

/// Three-queue scenario with explicit rates/exponents.
Scenario three_queue_custom(const Vec& lambda_star, const Vec& gamma, double epsilon,
                            int m, double x_min = 10.0);

/// A four-queue service set reconstructed to reproduce the reported two-jump
/// timing trajectory (the original figure is unavailable); lambda* = (1,2,1,1),
/// gamma = (1/2, inf, inf, inf).
Network four_queue_timing_network();
Scenario four_queue_timing_scenario();

/// Light-tailed interior instance on the three-queue network.
Scenario three_queue_light_tailed();

// report serialization (JSON text with full provenance)
std::string stability_report_json(const StabilityReport& rep);
std::string rjf_verdict_json(const RjfVerdict& v, const Vec& gamma, int m,
                             std::uint64_t seed);
std::string verification_report_json(const VerificationReport& rep);
std::string witness_run_json(const WitnessRunReport& rep);
std::string forced_jump_json(const ForcedJumpResult& res, double c);
std::string attraction_report_json(const AttractionReport& rep);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace mwlab

#endif
