#include "mwlab/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace mwlab {

using nlohmann::json;

namespace {

json vec_to_json(const Vec& v) {
    json a = json::array();
    for (double x : v) a.push_back(x);
    return a;
}

Vec vec_from_json(const json& j) {
    Vec v;
    for (const auto& x : j) v.push_back(x.get<double>());
    return v;
}

// gamma entries may be "inf"
json gamma_to_json(const Vec& g) {
    json a = json::array();
    for (double x : g) {
        if (std::isinf(x)) a.push_back("inf");
        else a.push_back(x);
    }
    return a;
}

Vec gamma_from_json(const json& j) {
    Vec v;
    for (const auto& x : j) {
        if (x.is_string()) {
            require(x.get<std::string>() == "inf", "gamma: unknown string entry");
            v.push_back(std::numeric_limits<double>::infinity());
        } else {
            v.push_back(x.get<double>());
        }
    }
    return v;
}

}  // namespace

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), "cannot write file: " + path);
    out << text;
}

Network load_network_json(const std::string& text) {
    json j = json::parse(text);
    const int ell = j.at("ell").get<int>();
    std::vector<Vec> vecs;
    for (const auto& row : j.at("service_vectors")) vecs.push_back(vec_from_json(row));
    return Network(ell, vecs);
}

Network load_network_file(const std::string& path) {
    return load_network_json(read_text_file(path));
}

std::string network_json(const Network& net) {
    json j;
    j["ell"] = net.ell();
    json rows = json::array();
    for (const Vec& v : net.service_set()) rows.push_back(vec_to_json(v));
    j["service_vectors"] = rows;
    j["closure_added"] = net.closure_added();
    return j.dump(2) + "\n";
}

std::string witness_json(const RjfWitness& w, const Vec& gamma, int m, std::uint64_t seed) {
    json j;
    j["lambda_star"] = vec_to_json(w.profile.lambda_star);
    j["epsilon"] = w.profile.epsilon;
    j["gamma"] = gamma_to_json(gamma);
    j["queue"] = m + 1;  // 1-based in files
    j["value"] = w.value;
    j["time"] = w.time;
    j["seed"] = seed;
    json pieces = json::array();
    for (const auto& p : w.profile.pieces)
        pieces.push_back({{"start", p.start}, {"rate", vec_to_json(p.rate)}});
    j["profile"] = {{"pieces", pieces}};
    json jumps = json::array();
    for (const auto& jm : w.jumps.jumps)
        jumps.push_back({{"time", jm.time}, {"queue", jm.queue + 1}, {"size", jm.size}});
    j["jumps"] = jumps;
    return j.dump(2) + "\n";
}

RjfWitness witness_from_json(const std::string& text) {
    json j = json::parse(text);
    RjfWitness w;
    w.profile.lambda_star = vec_from_json(j.at("lambda_star"));
    w.profile.epsilon = j.at("epsilon").get<double>();
    for (const auto& p : j.at("profile").at("pieces"))
        w.profile.pieces.push_back({p.at("start").get<double>(), vec_from_json(p.at("rate"))});
    for (const auto& jm : j.at("jumps"))
        w.jumps.jumps.push_back({jm.at("time").get<double>(), jm.at("queue").get<int>() - 1,
                                 jm.at("size").get<double>()});
    w.value = j.at("value").get<double>();
    w.time = j.at("time").get<double>();
    return w;
}

void Scenario::validate() const {
    require(static_cast<int>(lambda_star.size()) == net.ell(), "Scenario: lambda dimension");
    require(static_cast<int>(gamma.size()) == net.ell(), "Scenario: gamma dimension");
    for (double g : gamma) require(g > 0.0, "Scenario: gamma entries must be positive");
    require(m >= 0 && m < net.ell(), "Scenario: queue index out of range");
    require(epsilon >= 0.0, "Scenario: negative epsilon");
}

Network three_queue_network() {
    return Network(3, {{1, 1, 0}, {1, 0, 1}, {0, 1, 1}});
}

Scenario three_queue_custom(const Vec& lambda_star, const Vec& gamma, double epsilon,
                            int m, double x_min) {
    Scenario s(three_queue_network());
    s.lambda_star = lambda_star;
    s.gamma = gamma;
    s.epsilon = epsilon;
    s.m = m;
    s.name = "three-queue";
    for (int j = 0; j < 3; ++j) {
        ArrivalSpec a;
        if (std::isinf(gamma[j])) {
            a.kind = ArrivalSpec::Kind::Deterministic;
            a.rate = lambda_star[j];
        } else {
            a.kind = ArrivalSpec::Kind::ParetoMixture;
            a.gamma = gamma[j];
            a.rate = lambda_star[j];
            a.x_min = x_min;
        }
        s.arrivals.push_back(a);
    }
    s.validate();
    return s;
}

Scenario three_queue_scenario(int case_id, double x_min) {
    const double inf = std::numeric_limits<double>::infinity();
    switch (case_id) {
        case 1: return three_queue_custom({0.5, 0.5, 0.75}, {0.6, 0.6, inf}, 0.05, 2, x_min);
        case 2: return three_queue_custom({0.5, 0.5, 0.25}, {0.8, 0.8, inf}, 0.05, 2, x_min);
        case 3: return three_queue_custom({0.5, 0.5, 0.25}, {0.4, 0.4, inf}, 0.05, 2, x_min);
        default: throw std::invalid_argument("three_queue_scenario: case must be 1, 2 or 3");
    }
}

Scenario three_queue_light_tailed() {
    const double inf = std::numeric_limits<double>::infinity();
    Scenario s = three_queue_custom({0.5, 0.5, 0.25}, {2.5, 2.5, inf}, 0.05, 2, 2.0);
    s.name = "three-queue-light";
    return s;
}

Network four_queue_timing_network() {
    return Network(4, {{8, 0, 1, 1}, {4, 4, 0, 1.6}, {6, 0, 4, 0}});
}

Scenario four_queue_timing_scenario() {
    const double inf = std::numeric_limits<double>::infinity();
    Scenario s(four_queue_timing_network());
    s.lambda_star = {1, 2, 1, 1};
    s.gamma = {0.5, inf, inf, inf};
    s.epsilon = 0.0;
    s.m = 3;
    s.name = "four-queue-timing";
    for (int j = 0; j < 4; ++j) {
        ArrivalSpec a;
        a.kind = ArrivalSpec::Kind::Deterministic;
        a.rate = s.lambda_star[j];
        s.arrivals.push_back(a);
    }
    s.validate();
    return s;
}

std::string stability_report_json(const StabilityReport& rep) {
    json j;
    j["horizons"] = rep.horizons;
    j["replications"] = rep.replications;
    j["trim"] = rep.trim;
    j["seed"] = rep.seed;
    j["bootstrap"] = rep.bootstrap;
    json queues = json::array();
    for (std::size_t q = 0; q < rep.trimmed_mean.size(); ++q) {
        json e;
        e["queue"] = q + 1;
        e["trimmed_mean"] = rep.trimmed_mean[q];
        e["median"] = rep.median[q];
        e["raw_mean"] = rep.raw_mean[q];
        const QueueTrend& t = rep.trends[q];
        e["verdict"] = to_string(t.verdict);
        e["slope_index"] = t.slope_index;
        e["slope_index_lb90"] = t.slope_index_lb90;
        e["slope_horizon"] = t.slope_horizon;
        e["last_diff"] = t.last_diff;
        e["last_diff_lb90"] = t.last_diff_lb90;
        e["last_diff_ub90"] = t.last_diff_ub90;
        e["growth_ratio"] = t.growth_ratio;
        queues.push_back(e);
    }
    j["queues"] = queues;
    return j.dump(2) + "\n";
}

std::string rjf_verdict_json(const RjfVerdict& v, const Vec& gamma, int m,
                             std::uint64_t seed) {
    json j;
    j["status"] = v.status == RjfStatus::Violated ? "Violated" : "NoViolationFound";
    j["evaluations"] = v.search_stats.evaluations;
    j["best_value"] = v.search_stats.best_value;
    j["budget_evals"] = v.search_stats.budget_evals;
    j["queue"] = m + 1;
    j["gamma"] = gamma_to_json(gamma);
    j["seed"] = seed;
    if (v.witness) j["witness"] = json::parse(witness_json(*v.witness, gamma, m, seed));
    return j.dump(2) + "\n";
}

std::string verification_report_json(const VerificationReport& rep) {
    auto prop = [](const PropertyReport& p) {
        json e;
        e["pass"] = p.pass;
        e["checked"] = p.checked;
        e["failures"] = p.failures;
        e["flagged"] = p.flagged;
        e["worst_margin"] = p.worst_margin;
        json ces = json::array();
        for (const auto& ce : p.counterexamples) {
            ces.push_back({{"x", vec_to_json(ce.x)},
                           {"y", vec_to_json(ce.y)},
                           {"margin", ce.margin},
                           {"cloud_distance", ce.cloud_distance}});
        }
        e["counterexamples"] = ces;
        return e;
    };
    json j;
    j["lipschitz"] = prop(rep.lipschitz);
    j["drift"] = prop(rep.drift);
    j["zero_set"] = prop(rep.zero_set);
    j["heavy_monotone"] = prop(rep.heavy_monotone);
    j["overall_pass"] = rep.overall_pass;
    j["seed"] = rep.seed;
    j["samples"] = rep.samples;
    return j.dump(2) + "\n";
}

std::string witness_run_json(const WitnessRunReport& rep) {
    json j;
    j["replications"] = rep.replications;
    j["exceedances"] = rep.exceedances;
    j["exceedance_probability"] = rep.exceedance_probability;
    j["c"] = rep.c;
    j["final_T"] = rep.final_T;
    j["seed"] = rep.seed;
    json reps = json::array();
    for (const auto& per_rep : rep.diagnostics) {
        json eps = json::array();
        for (const auto& d : per_rep) {
            json e;
            e["start"] = d.start;
            e["end"] = d.end;
            e["start_ok"] = d.start_ok;
            e["exceedance"] = d.exceedance;
            e["jump_events"] = d.jump_events;
            e["fluc_events"] = d.fluc_events;
            eps.push_back(e);
        }
        reps.push_back(eps);
    }
    j["episodes"] = reps;
    return j.dump(2) + "\n";
}

std::string forced_jump_json(const ForcedJumpResult& res, double c) {
    json j;
    j["ran"] = res.ran;
    j["pass"] = res.pass;
    j["q_m_final"] = res.q_m_final;
    j["bound"] = res.bound;
    j["c"] = c;
    if (!res.ran) j["note"] = "Inconclusive: T below the configured threshold";
    return j.dump(2) + "\n";
}

std::string attraction_report_json(const AttractionReport& rep) {
    json j;
    j["trials_requested"] = rep.trials_requested;
    j["trials_run"] = rep.trials_run;
    j["passed"] = rep.passed;
    j["pass_fraction"] = rep.pass_fraction;
    j["worst_rate"] = rep.worst_rate;
    j["vacuous"] = rep.vacuous;
    return j.dump(2) + "\n";
}

}  // namespace mwlab
