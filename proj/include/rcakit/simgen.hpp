#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "rcakit/core_types.hpp"
#include "rcakit/ingestion.hpp"

namespace rcakit::simgen {

enum class Topology { Chain, Tree, RandomDagWithBackedges };
enum class Drift { None, Linear, Seasonal };

struct FaultPlanEntry {
    std::string fault_type;  // cpu_hog | mem_leak | net_delay | error_storm
    int target = 0;          // root service index
    Timestamp start = 0;     // seconds from scenario start
    Timestamp end = 0;
    double severity = 1.0;
};

struct ScenarioConfig {
    int n_services = 10;
    Topology topology = Topology::Tree;
    std::int64_t duration = 2400;  // seconds
    std::int64_t interval = 20;    // seconds per bucket
    double base_rate = 8.0;        // calls per edge per bucket (Poisson mean)
    double noise_std = 0.05;
    Drift drift = Drift::None;
    double drift_amplitude = 0.0;
    double attenuation = 0.5;  // per-hop propagation factor, (0,1]
    int max_hops = 3;
    std::uint64_t seed = 1;

    // Scenario flags for the harder generative regimes.
    bool edge_only = false;             // circulant graph, fault visible only in edge stats
    bool deviation_inversion = false;   // downstream metric deviation dwarfs the root's
    double inversion_factor = 5.0;

    std::vector<FaultPlanEntry> fault_plan;

    // Convenience plan synthesis: when fault_plan is empty and auto_cases > 0,
    // a plan of auto_cases entries is generated round-robin over
    // (service, fault type), all with the same in-case interval.
    int auto_cases = 0;
    std::vector<std::string> auto_fault_types = {"cpu_hog", "mem_leak", "net_delay",
                                                 "error_storm"};
    double auto_severity = 1.0;

    void validate() const;
    static ScenarioConfig from_json_file(const std::filesystem::path& path);
    std::string to_json() const;
};

inline const std::vector<std::string>& fault_type_names() {
    static const std::vector<std::string> names = {"cpu_hog", "mem_leak", "net_delay",
                                                   "error_storm"};
    return names;
}

// Deterministic per seed; connected; no self-edges.
std::vector<std::pair<int, int>> generate_topology(const ScenarioConfig& cfg);

// Baseline telemetry of one case (no fault).  `case_seed` drives all noise.
CaseTelemetry generate_normal(const ScenarioConfig& cfg, const std::vector<std::pair<int, int>>& edges,
                              std::uint64_t case_seed, Timestamp base_time);

// Applies the fault-plan entry's effects plus cascading propagation
// (1 bucket of delay per hop, amplitude scaled by attenuation^hops).
void inject_fault(CaseTelemetry& streams, const ScenarioConfig& cfg,
                  const std::vector<std::pair<int, int>>& edges, const FaultPlanEntry& entry,
                  Timestamp base_time, std::uint64_t case_seed);

// Materialized fault plan (explicit entries, or the synthesized auto plan).
std::vector<FaultPlanEntry> resolve_fault_plan(const ScenarioConfig& cfg);

// Writes the full dataset (meta.json + one case directory per plan entry)
// in the ingestion on-disk layout.
void emit_dataset(const ScenarioConfig& cfg, const std::filesystem::path& out_dir);

inline std::string service_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "svc-%02d", i);
    return buf;
}

}  // namespace rcakit::simgen
