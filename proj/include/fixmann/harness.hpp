#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fixmann/iteration.hpp"
#include "fixmann/mdp.hpp"

namespace fixmann {

enum class RandomKind { Chain, ChainWithMecs, SimpleMdp, MdpWithMecs };

std::string to_string(RandomKind k);
RandomKind random_kind_from_string(const std::string& s);

// Random instance with exactly mec_count planted zero-reward MECs; rewards
// uniform on [0,1] before optional normalisation to ||v*|| = 1.
Mdp gen_random_mdp(int n_states, RandomKind kind, int mec_count, std::uint64_t seed, bool normalize);

// Linear interpolation between order statistics, q in [0,1].
double percentile(std::vector<double> xs, double q);

struct Bands {
    double mean = 0.0;
    double p10 = 0.0;
    double p90 = 0.0;
    double min = 0.0;
    double max = 0.0;
};

Bands aggregate(const std::vector<double>& xs);

enum class TraceFormat { Csv, Json };

void emit_trace(const IterationTrace& t, const std::string& path, TraceFormat format);
std::string trace_csv(const IterationTrace& t);
nlohmann::json trace_to_json(const IterationTrace& t);
IterationTrace trace_from_json(const nlohmann::json& j);
IterationTrace load_trace_json(const std::string& path);

struct RunSpec {
    std::string name;
    MannScheme scheme;
    bool kleene = false;
    // Restart from x0 every this many steps; 0 disables.
    std::int64_t reset_every = 0;
};

struct ExperimentConfig {
    std::string kind;  // exact_fn, exact_mdp, approx_fn, sampled_mdp, sampled_ssg, random_bench
    nlohmann::json instance;
    std::vector<RunSpec> runs;
    std::optional<Vec> x0;
    StopRule stop;
    std::vector<std::uint64_t> seeds;
    nlohmann::json extra = nlohmann::json::object();
    std::string base_dir;

    static ExperimentConfig from_json(const nlohmann::json& j, const std::string& base_dir = "");
    static ExperimentConfig load(const std::string& path);
};

struct RunReport {
    std::string name;
    std::vector<double> final_errors;  // one per instance or seed
    std::vector<std::int64_t> steps;
    std::vector<std::string> stop_reasons;
    // First recorded index with error below the threshold, -1 if never.
    std::vector<std::int64_t> reach_index;
    std::vector<IterationTrace> traces;
    std::vector<std::vector<double>> errors;  // per trace, aligned with its points
    std::vector<std::string> failures;
};

struct ExperimentReport {
    std::string kind;
    std::vector<RunReport> runs;
    std::vector<Vec> references;
    nlohmann::json metadata = nlohmann::json::object();

    const RunReport& run(const std::string& name) const;
    nlohmann::json summary() const;
};

ExperimentReport run_experiment(const ExperimentConfig& cfg);
// Writes one CSV per trace, an error-band CSV per run and summary.json.
void write_report(const ExperimentReport& r, const std::string& out_dir);

}  // namespace fixmann
