#include "rcakit/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include <json.hpp>

namespace rcakit::simgen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr Timestamp kBaseTime = 1700000000;
constexpr double kPi = 3.14159265358979323846;

std::uint64_t case_seed_of(std::uint64_t root_seed, int case_index) {
    // splitmix64 over the root seed and the case index
    std::uint64_t z = root_seed + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(case_index) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

struct Baselines {
    std::vector<double> cpu, mem, lat;   // per service
    std::vector<double> edge_latency;    // per edge
};

// Scenario-level baselines: stable across cases, derived from the root seed.
Baselines compute_baselines(const ScenarioConfig& cfg, size_t n_edges) {
    std::mt19937_64 rng(cfg.seed ^ 0x5DEECE66Dull);
    Baselines b;
    auto u = [&](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    for (int i = 0; i < cfg.n_services; ++i) {
        b.cpu.push_back(u(0.2, 0.6));
        b.mem.push_back(u(0.3, 0.7));
        b.lat.push_back(u(80.0, 160.0));
    }
    for (size_t e = 0; e < n_edges; ++e) b.edge_latency.push_back(u(40.0, 120.0));
    if (cfg.edge_only) {
        // identical node-level baselines so no service is distinguishable
        std::fill(b.cpu.begin(), b.cpu.end(), b.cpu[0]);
        std::fill(b.mem.begin(), b.mem.end(), b.mem[0]);
        std::fill(b.lat.begin(), b.lat.end(), b.lat[0]);
        std::fill(b.edge_latency.begin(), b.edge_latency.end(), b.edge_latency[0]);
    }
    return b;
}

int poisson(std::mt19937_64& rng, double mean) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<int>(mean)(rng);
}

std::vector<int> bfs_hops(int root, int n, const std::vector<std::pair<int, int>>& edges,
                          int max_hops) {
    std::vector<std::vector<int>> adj(n);
    for (auto [a, c] : edges) {
        adj[a].push_back(c);
        adj[c].push_back(a);
    }
    std::vector<int> dist(n, -1);
    dist[root] = 0;
    std::vector<int> q{root};
    for (size_t head = 0; head < q.size(); ++head) {
        int u = q[head];
        if (dist[u] >= max_hops) continue;
        for (int w : adj[u])
            if (dist[w] < 0) {
                dist[w] = dist[u] + 1;
                q.push_back(w);
            }
    }
    return dist;
}

}  // namespace

void ScenarioConfig::validate() const {
    if (n_services < 2) throw ConfigError("scenario needs at least 2 services");
    if (interval <= 0 || duration < interval) throw ConfigError("bad duration/interval");
    if (attenuation <= 0.0 || attenuation > 1.0)
        throw ConfigError("attenuation must be in (0,1]");
    if (base_rate <= 0.0) throw ConfigError("base_rate must be > 0");
    if (edge_only && n_services < 5)
        throw ConfigError("edge_only scenarios need at least 5 services");
    if (fault_plan.empty() && auto_cases <= 0)
        throw ConfigError("scenario has no fault plan and no auto_cases");
    for (const auto& e : fault_plan) {
        if (e.target < 0 || e.target >= n_services)
            throw UnknownService("fault plan targets unknown service " + std::to_string(e.target));
        if (e.start < 0 || e.end > duration || e.start >= e.end)
            throw IntervalOutOfRange("fault interval outside [0, duration]");
        if (std::find(fault_type_names().begin(), fault_type_names().end(), e.fault_type) ==
            fault_type_names().end())
            throw ConfigError("unknown fault type '" + e.fault_type + "'");
    }
}

std::vector<std::pair<int, int>> generate_topology(const ScenarioConfig& cfg) {
    int n = cfg.n_services;
    std::vector<std::pair<int, int>> edges;
    if (cfg.edge_only) {
        // circulant graph: vertex-transitive, so topology alone cannot single
        // out any service
        for (int i = 0; i < n; ++i) {
            edges.emplace_back(i, (i + 1) % n);
            edges.emplace_back(i, (i + 2) % n);
        }
        return edges;
    }
    std::mt19937_64 rng(cfg.seed ^ 0x70F0ull);
    switch (cfg.topology) {
        case Topology::Chain:
            for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
            break;
        case Topology::Tree:
            for (int i = 1; i < n; ++i) {
                int parent = std::uniform_int_distribution<int>(0, i - 1)(rng);
                edges.emplace_back(parent, i);
            }
            break;
        case Topology::RandomDagWithBackedges: {
            for (int i = 1; i < n; ++i) {
                int parent = std::uniform_int_distribution<int>(0, i - 1)(rng);
                edges.emplace_back(parent, i);
            }
            std::set<std::pair<int, int>> have(edges.begin(), edges.end());
            int extra = std::max(1, n / 2);
            for (int e = 0; e < extra; ++e) {
                int a = std::uniform_int_distribution<int>(0, n - 1)(rng);
                int b = std::uniform_int_distribution<int>(0, n - 1)(rng);
                if (a == b) continue;
                if (e % 3 == 2) std::swap(a, b);  // occasional back edge
                if (have.insert({a, b}).second) edges.emplace_back(a, b);
            }
            break;
        }
    }
    return edges;
}

CaseTelemetry generate_normal(const ScenarioConfig& cfg,
                              const std::vector<std::pair<int, int>>& edges,
                              std::uint64_t case_seed, Timestamp base_time) {
    std::mt19937_64 rng(case_seed);
    Baselines base = compute_baselines(cfg, edges.size());
    int buckets = static_cast<int>(cfg.duration / cfg.interval);
    CaseTelemetry out;
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_int_distribution<Timestamp> offset(0, cfg.interval - 1);
    long trace_counter = 0;

    auto drift_of = [&](int b) {
        double x = buckets > 1 ? static_cast<double>(b) / (buckets - 1) : 0.0;
        switch (cfg.drift) {
            case Drift::Linear: return cfg.drift_amplitude * x;
            case Drift::Seasonal: return cfg.drift_amplitude * std::sin(2.0 * kPi * 4.0 * x);
            case Drift::None: break;
        }
        return 0.0;
    };

    const double log_rates[5] = {2.0, 5.0, 0.3, 0.05, 0.01};  // DEBUG..FATAL
    const LogLevel levels[5] = {LogLevel::Debug, LogLevel::Info, LogLevel::Warn, LogLevel::Error,
                                LogLevel::Fatal};

    for (int b = 0; b < buckets; ++b) {
        Timestamp t0 = base_time + static_cast<Timestamp>(b) * cfg.interval;
        double d = drift_of(b);
        for (int s = 0; s < cfg.n_services; ++s) {
            double ns = cfg.noise_std;
            out.metrics.push_back({t0, s, "cpu", base.cpu[s] + ns * noise(rng) + d});
            out.metrics.push_back({t0, s, "mem", base.mem[s] + ns * noise(rng) + d});
            out.metrics.push_back(
                {t0, s, "latency", base.lat[s] + 200.0 * ns * noise(rng) + 200.0 * d});
            for (int l = 0; l < 5; ++l) {
                int cnt = poisson(rng, log_rates[l]);
                for (int c = 0; c < cnt; ++c)
                    out.logs.push_back({t0 + offset(rng), s, levels[l],
                                        "tmpl-" + std::string(log_level_name(levels[l]))});
            }
        }
        for (size_t e = 0; e < edges.size(); ++e) {
            int calls = poisson(rng, cfg.base_rate);
            for (int c = 0; c < calls; ++c) {
                RawTraceRecord r;
                r.timestamp = t0 + offset(rng);
                r.trace_id = "tr-" + std::to_string(trace_counter++);
                r.caller = edges[e].first;
                r.callee = edges[e].second;
                r.latency_ms = std::max(0.1, base.edge_latency[e] + 5.0 * noise(rng));
                r.status_code = 200;
                out.traces.push_back(std::move(r));
            }
        }
    }
    return out;
}

void inject_fault(CaseTelemetry& streams, const ScenarioConfig& cfg,
                  const std::vector<std::pair<int, int>>& edges, const FaultPlanEntry& entry,
                  Timestamp base_time, std::uint64_t case_seed) {
    if (entry.target < 0 || entry.target >= cfg.n_services)
        throw UnknownService("inject_fault: unknown target service");
    if (entry.start < 0 || entry.end > cfg.duration || entry.start >= entry.end)
        throw IntervalOutOfRange("inject_fault: fault interval outside [0, duration]");

    std::mt19937_64 rng(case_seed ^ 0xFA017ull);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Timestamp abs_start = base_time + entry.start;
    Timestamp abs_end = base_time + entry.end;
    int root = entry.target;
    double sev = entry.severity;
    std::vector<int> hops = bfs_hops(root, cfg.n_services, edges, cfg.max_hops);

    auto in_fault = [&](Timestamp ts) { return ts >= abs_start && ts < abs_end; };

    if (cfg.edge_only) {
        // Fault visible only through per-edge error rates: root's out-edges run
        // hot, the other in-edges of the same callees run cold by the same
        // amount, so per-callee aggregates stay identical across services.
        const double base_p = 0.5, boost = 0.45;
        std::set<int> root_callees;
        std::map<int, int> indeg;
        for (auto [a, c] : edges) {
            ++indeg[c];
            if (a == root) root_callees.insert(c);
        }
        for (auto& r : streams.traces) {
            if (!in_fault(r.timestamp)) continue;
            double p = base_p;
            if (r.caller == root) {
                p = base_p + boost;
            } else if (root_callees.count(r.callee)) {
                int others = indeg[r.callee] - 1;
                p = others > 0 ? std::max(0.0, base_p - boost / others) : base_p;
            }
            if (u01(rng) < p) r.status_code = 500;
        }
        return;
    }

    if (cfg.deviation_inversion) {
        // Challenge-3 regime: the root's own metric shift is small while a
        // 1-hop neighbor's is inversion_factor times larger (and later).
        int neighbor = -1;
        for (int i = 0; i < cfg.n_services && neighbor < 0; ++i)
            if (hops[i] == 1) neighbor = i;
        double root_dev = 0.1 * sev;
        for (auto& m : streams.metrics) {
            if (m.service == root && m.metric_name == "cpu" && in_fault(m.timestamp))
                m.value += root_dev;
            if (neighbor >= 0 && m.service == neighbor && m.metric_name == "mem" &&
                m.timestamp >= abs_start + cfg.interval && m.timestamp < abs_end)
                m.value += cfg.inversion_factor * root_dev;
        }
        // mild propagated latency/errors so the call graph still carries signal
        for (auto& r : streams.traces) {
            int h = hops[r.callee];
            if (h < 1) continue;
            Timestamp onset = abs_start + static_cast<Timestamp>(h) * cfg.interval;
            if (r.timestamp < onset || r.timestamp >= abs_end) continue;
            double scale = sev * std::pow(cfg.attenuation, h);
            r.latency_ms *= 1.0 + scale;
            if (u01(rng) < std::min(0.5, 0.3 * scale)) r.status_code = 500;
        }
        return;
    }

    // Root-local effects per fault type.
    if (entry.fault_type == "cpu_hog") {
        for (auto& m : streams.metrics)
            if (m.service == root && m.metric_name == "cpu" && in_fault(m.timestamp))
                m.value += 0.5 * sev;
    } else if (entry.fault_type == "mem_leak") {
        double span = static_cast<double>(abs_end - abs_start);
        for (auto& m : streams.metrics)
            if (m.service == root && m.metric_name == "mem" && in_fault(m.timestamp)) {
                double progress = static_cast<double>(m.timestamp - abs_start) / span;
                m.value += 0.5 * sev * (0.4 + 0.6 * progress);  // step + ramp
            }
    } else if (entry.fault_type == "net_delay") {
        // the slow service's own latency gauge rises too, so a root without
        // inbound calls is still observable
        for (auto& m : streams.metrics)
            if (m.service == root && m.metric_name == "latency" && in_fault(m.timestamp))
                m.value *= 1.0 + 2.0 * sev;
        for (auto& r : streams.traces)
            if (r.callee == root && in_fault(r.timestamp)) r.latency_ms *= 1.0 + 2.0 * sev;
    } else if (entry.fault_type == "error_storm") {
        for (auto& r : streams.traces)
            if (r.caller == root && in_fault(r.timestamp) && u01(rng) < std::min(0.9, 0.6 * sev))
                r.status_code = 500;
        // the faulty service also logs its own failures, starting at onset
        Timestamp t = abs_start;
        std::uniform_int_distribution<Timestamp> offset(0, cfg.interval - 1);
        for (; t < abs_end; t += cfg.interval) {
            int n = poisson(rng, 8.0 * sev) + 3;
            for (int i = 0; i < n; ++i)
                streams.logs.push_back({t + offset(rng), root, LogLevel::Error, "tmpl-FAULT"});
        }
    } else {
        throw ConfigError("unknown fault type '" + entry.fault_type + "'");
    }

    // Cascade: hop h sees its effects h buckets later, scaled by attenuation^h.
    for (auto& r : streams.traces) {
        int h = hops[r.callee];
        if (h < 1) continue;
        Timestamp onset = abs_start + static_cast<Timestamp>(h) * cfg.interval;
        if (r.timestamp < onset || r.timestamp >= abs_end) continue;
        double scale = sev * std::pow(cfg.attenuation, h);
        r.latency_ms *= 1.0 + 1.5 * scale;
        if (u01(rng) < std::min(0.5, 0.4 * scale)) r.status_code = 500;
    }
}

std::vector<FaultPlanEntry> resolve_fault_plan(const ScenarioConfig& cfg) {
    if (!cfg.fault_plan.empty()) return cfg.fault_plan;
    std::vector<FaultPlanEntry> plan;
    int buckets = static_cast<int>(cfg.duration / cfg.interval);
    Timestamp start = static_cast<Timestamp>(buckets * 3 / 5) * cfg.interval;
    Timestamp end = std::min<Timestamp>(cfg.duration, start + (buckets / 4) * cfg.interval);
    int n_types = static_cast<int>(cfg.auto_fault_types.size());
    for (int i = 0; i < cfg.auto_cases; ++i) {
        FaultPlanEntry e;
        e.fault_type = cfg.auto_fault_types[i % n_types];
        e.target = (i / n_types) % cfg.n_services;
        e.start = start;
        e.end = end;
        e.severity = cfg.auto_severity;
        plan.push_back(std::move(e));
    }
    return plan;
}

namespace {

void write_case(const fs::path& dir, const ScenarioConfig&, CaseTelemetry& t,
                const FaultPlanEntry& entry) {
    fs::create_directories(dir);
    std::stable_sort(t.metrics.begin(), t.metrics.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    std::stable_sort(t.logs.begin(), t.logs.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    std::stable_sort(t.traces.begin(), t.traces.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });

    {
        std::ofstream out(dir / "metrics.csv");
        out << "timestamp,service,metric_name,value\n";
        char buf[64];
        for (const auto& m : t.metrics) {
            std::snprintf(buf, sizeof(buf), "%.6f", m.value);
            out << m.timestamp << "," << service_name(m.service) << "," << m.metric_name << ","
                << buf << "\n";
        }
    }
    {
        std::ofstream out(dir / "logs.csv");
        out << "timestamp,service,level,template_id\n";
        for (const auto& l : t.logs)
            out << l.timestamp << "," << service_name(l.service) << "," << log_level_name(l.level)
                << "," << l.template_id << "\n";
    }
    {
        std::ofstream out(dir / "traces.csv");
        out << "timestamp,trace_id,span_id,caller,callee,latency_ms,status_code\n";
        char buf[64];
        long span = 0;
        for (const auto& r : t.traces) {
            std::snprintf(buf, sizeof(buf), "%.3f", r.latency_ms);
            out << r.timestamp << "," << r.trace_id << ",span-" << span++ << ","
                << service_name(r.caller) << "," << service_name(r.callee) << "," << buf << ","
                << r.status_code << "\n";
        }
    }
    json gt;
    gt["root_cause"] = service_name(entry.target);
    gt["fault_type"] = entry.fault_type;
    gt["inject_start"] = kBaseTime + entry.start;
    gt["inject_end"] = kBaseTime + entry.end;
    std::ofstream out(dir / "ground_truth.json");
    out << gt.dump(2) << "\n";
}

}  // namespace

void emit_dataset(const ScenarioConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    auto edges = generate_topology(cfg);
    auto plan = resolve_fault_plan(cfg);

    fs::create_directories(out_dir);
    {
        json meta;
        std::vector<std::string> names;
        for (int i = 0; i < cfg.n_services; ++i) names.push_back(service_name(i));
        meta["services"] = names;
        meta["interval_s"] = cfg.interval;
        meta["fault_types"] = fault_type_names();
        std::ofstream out(out_dir / "meta.json");
        out << meta.dump(2) << "\n";
    }

    for (size_t i = 0; i < plan.size(); ++i) {
        std::uint64_t cs = case_seed_of(cfg.seed, static_cast<int>(i));
        CaseTelemetry t = generate_normal(cfg, edges, cs, kBaseTime);
        inject_fault(t, cfg, edges, plan[i], kBaseTime, cs);
        char name[32];
        std::snprintf(name, sizeof(name), "case-%04zu", i);
        write_case(out_dir / "cases" / name, cfg, t, plan[i]);
    }
}

// --- config file ------------------------------------------------------------

ScenarioConfig ScenarioConfig::from_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile("cannot open scenario file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }

    static const std::set<std::string> known = {
        "n_services", "topology", "duration", "interval", "base_rate", "noise_std", "drift",
        "drift_amplitude", "attenuation", "max_hops", "seed", "edge_only", "deviation_inversion",
        "inversion_factor", "fault_plan", "auto_cases", "auto_fault_types", "auto_severity"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw ConfigError("unknown scenario key '" + it.key() + "'");

    ScenarioConfig c;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("n_services", c.n_services);
    if (j.contains("topology")) {
        std::string t = j.at("topology").get<std::string>();
        if (t == "chain") c.topology = Topology::Chain;
        else if (t == "tree") c.topology = Topology::Tree;
        else if (t == "random_dag_with_backedges") c.topology = Topology::RandomDagWithBackedges;
        else throw ConfigError("unknown topology '" + t + "'");
    }
    get("duration", c.duration);
    get("interval", c.interval);
    get("base_rate", c.base_rate);
    get("noise_std", c.noise_std);
    if (j.contains("drift")) {
        std::string d = j.at("drift").get<std::string>();
        if (d == "none") c.drift = Drift::None;
        else if (d == "linear") c.drift = Drift::Linear;
        else if (d == "seasonal") c.drift = Drift::Seasonal;
        else throw ConfigError("unknown drift '" + d + "'");
    }
    get("drift_amplitude", c.drift_amplitude);
    get("attenuation", c.attenuation);
    get("max_hops", c.max_hops);
    get("seed", c.seed);
    get("edge_only", c.edge_only);
    get("deviation_inversion", c.deviation_inversion);
    get("inversion_factor", c.inversion_factor);
    get("auto_cases", c.auto_cases);
    get("auto_fault_types", c.auto_fault_types);
    get("auto_severity", c.auto_severity);
    if (j.contains("fault_plan"))
        for (const auto& e : j.at("fault_plan")) {
            FaultPlanEntry f;
            f.fault_type = e.at("fault_type").get<std::string>();
            f.target = e.at("target").get<int>();
            f.start = e.at("start").get<Timestamp>();
            f.end = e.at("end").get<Timestamp>();
            if (e.contains("severity")) f.severity = e.at("severity").get<double>();
            c.fault_plan.push_back(std::move(f));
        }
    c.validate();
    return c;
}

std::string ScenarioConfig::to_json() const {
    json j;
    j["n_services"] = n_services;
    j["topology"] = topology == Topology::Chain ? "chain"
                    : topology == Topology::Tree ? "tree"
                                                 : "random_dag_with_backedges";
    j["duration"] = duration;
    j["interval"] = interval;
    j["base_rate"] = base_rate;
    j["noise_std"] = noise_std;
    j["drift"] = drift == Drift::None ? "none" : drift == Drift::Linear ? "linear" : "seasonal";
    j["drift_amplitude"] = drift_amplitude;
    j["attenuation"] = attenuation;
    j["max_hops"] = max_hops;
    j["seed"] = seed;
    j["edge_only"] = edge_only;
    j["deviation_inversion"] = deviation_inversion;
    j["inversion_factor"] = inversion_factor;
    j["auto_cases"] = auto_cases;
    j["auto_fault_types"] = auto_fault_types;
    j["auto_severity"] = auto_severity;
    json plan = json::array();
    for (const auto& e : fault_plan)
        plan.push_back({{"fault_type", e.fault_type},
                        {"target", e.target},
                        {"start", e.start},
                        {"end", e.end},
                        {"severity", e.severity}});
    j["fault_plan"] = plan;
    return j.dump(2);
}

}  // namespace rcakit::simgen
