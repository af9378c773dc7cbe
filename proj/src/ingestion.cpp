#include "rcakit/ingestion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "rcakit/csv.hpp"

namespace rcakit {

namespace fs = std::filesystem;
using nlohmann::json;

LogLevel parse_log_level(const std::string& s) {
    if (s == "DEBUG") return LogLevel::Debug;
    if (s == "INFO") return LogLevel::Info;
    if (s == "WARN") return LogLevel::Warn;
    if (s == "ERROR") return LogLevel::Error;
    if (s == "FATAL") return LogLevel::Fatal;
    throw SchemaViolation("unknown log level '" + s + "'");
}

const char* log_level_name(LogLevel lvl) {
    switch (lvl) {
        case LogLevel::Debug: return "DEBUG";
        case LogLevel::Info: return "INFO";
        case LogLevel::Warn: return "WARN";
        case LogLevel::Error: return "ERROR";
        case LogLevel::Fatal: return "FATAL";
    }
    return "?";
}

CaseTelemetry load_case_telemetry(const Dataset& ds, const FaultCase& fc) {
    CaseTelemetry out;
    auto svc = [&](const std::string& name, const fs::path& file, long line) {
        int idx = ds.index_of(name);
        if (idx < 0)
            throw UnknownService("unknown service '" + name + "' at " + file.string() + ":" +
                                 std::to_string(line));
        return idx;
    };

    fs::path mpath = fc.dir / "metrics.csv";
    csv::for_each_row(mpath, "timestamp,service,metric_name,value",
                      [&](long line, const std::vector<std::string>& f) {
                          RawMetricRecord r;
                          r.timestamp = static_cast<Timestamp>(std::floor(std::stod(f[0])));
                          r.service = svc(f[1], mpath, line);
                          r.metric_name = f[2];
                          r.value = std::stod(f[3]);
                          if (!std::isfinite(r.value))
                              throw SchemaViolation("non-finite metric at " + mpath.string() + ":" +
                                                    std::to_string(line));
                          out.metrics.push_back(std::move(r));
                          return true;
                      });

    fs::path lpath = fc.dir / "logs.csv";
    csv::for_each_row(lpath, "timestamp,service,level,template_id",
                      [&](long line, const std::vector<std::string>& f) {
                          RawLogRecord r;
                          r.timestamp = static_cast<Timestamp>(std::floor(std::stod(f[0])));
                          r.service = svc(f[1], lpath, line);
                          r.level = parse_log_level(f[2]);
                          r.template_id = f.size() > 3 ? f[3] : "";
                          out.logs.push_back(std::move(r));
                          return true;
                      });

    fs::path tpath = fc.dir / "traces.csv";
    csv::for_each_row(tpath, "timestamp,trace_id,span_id,caller,callee,latency_ms,status_code",
                      [&](long line, const std::vector<std::string>& f) {
                          RawTraceRecord r;
                          r.timestamp = static_cast<Timestamp>(std::floor(std::stod(f[0])));
                          r.trace_id = f[1];
                          r.caller = svc(f[3], tpath, line);
                          r.callee = svc(f[4], tpath, line);
                          r.latency_ms = std::stod(f[5]);
                          r.status_code = std::stoi(f[6]);
                          out.traces.push_back(std::move(r));
                          return true;
                      });
    return out;
}

// --- resampling -------------------------------------------------------------

std::map<std::pair<int, std::string>, std::vector<double>> resample_metrics(
    const std::vector<RawMetricRecord>& records, const SamplingGrid& grid, int n_services) {
    grid.validate();
    std::map<std::pair<int, std::string>, std::vector<double>> sums;
    std::map<std::pair<int, std::string>, std::vector<int>> counts;
    for (const auto& r : records) {
        if (r.service < 0 || r.service >= n_services)
            throw UnknownService("metric record for service index " + std::to_string(r.service));
        int b = grid.bucket_of(r.timestamp);
        if (b < 0) continue;
        auto key = std::make_pair(r.service, r.metric_name);
        auto [it, fresh] = sums.try_emplace(key, grid.points, 0.0);
        if (fresh) counts.emplace(key, std::vector<int>(grid.points, 0));
        it->second[b] += r.value;
        counts[key][b] += 1;
    }
    std::map<std::pair<int, std::string>, std::vector<double>> out;
    for (auto& [key, s] : sums) {
        std::vector<double> series(grid.points, 0.0);
        const auto& c = counts[key];
        double last = 0.0;  // 0 before the first observation, carry-forward after
        for (int b = 0; b < grid.points; ++b) {
            if (c[b] > 0) last = s[b] / c[b];
            series[b] = last;
        }
        out.emplace(key, std::move(series));
    }
    return out;
}

std::vector<std::vector<std::vector<double>>> extract_log_features(
    const std::vector<RawLogRecord>& records, const SamplingGrid& grid, int n_services) {
    grid.validate();
    std::vector<std::vector<std::vector<double>>> out(
        n_services,
        std::vector<std::vector<double>>(kLogFeatures, std::vector<double>(grid.points, 0.0)));
    for (const auto& r : records) {
        if (r.service < 0 || r.service >= n_services)
            throw UnknownService("log record for service index " + std::to_string(r.service));
        int b = grid.bucket_of(r.timestamp);
        if (b < 0) continue;
        out[r.service][0][b] += 1.0;                                // total
        out[r.service][1 + static_cast<int>(r.level)][b] += 1.0;    // per level
    }
    return out;
}

std::vector<std::vector<std::vector<double>>> extract_trace_features(
    const std::vector<RawTraceRecord>& records, const SamplingGrid& grid, int n_services,
    const std::vector<int>& extra_error_codes) {
    grid.validate();
    std::vector<std::vector<std::vector<double>>> out(
        n_services,
        std::vector<std::vector<double>>(kTraceFeatures, std::vector<double>(grid.points, 0.0)));
    // accumulate latency sums + counts + errors, then finalize
    std::vector<std::vector<double>> lat_sum(n_services, std::vector<double>(grid.points, 0.0));
    std::vector<std::vector<double>> errs(n_services, std::vector<double>(grid.points, 0.0));
    for (const auto& r : records) {
        if (r.callee < 0 || r.callee >= n_services || r.caller < 0 || r.caller >= n_services)
            throw UnknownService("trace record with out-of-range service index");
        int b = grid.bucket_of(r.timestamp);
        if (b < 0) continue;
        lat_sum[r.callee][b] += r.latency_ms;
        out[r.callee][1][b] += 1.0;
        bool err = r.status_code >= 500 ||
                   std::find(extra_error_codes.begin(), extra_error_codes.end(), r.status_code) !=
                       extra_error_codes.end();
        if (err) errs[r.callee][b] += 1.0;
    }
    for (int v = 0; v < n_services; ++v)
        for (int b = 0; b < grid.points; ++b) {
            double n = out[v][1][b];
            if (n > 0) {
                out[v][0][b] = lat_sum[v][b] / n;
                out[v][2][b] = errs[v][b] / n;
            }  // no calls -> explicit (0, 0, 0)
        }
    return out;
}

// --- normalization ----------------------------------------------------------

FeatureNormalizer fit_normalizer(const std::vector<AlignedWindow>& training_windows) {
    if (training_windows.empty()) throw EmptyInput("fit_normalizer: no training windows");
    const auto& first = training_windows.front();
    FeatureNormalizer n;
    n.feature_names = first.feature_names;
    int F = first.n_features;
    n.min.assign(F, std::numeric_limits<double>::infinity());
    n.max.assign(F, -std::numeric_limits<double>::infinity());
    for (const auto& w : training_windows) {
        if (w.n_features != F) throw ShapeMismatch("fit_normalizer: feature count differs");
        for (int v = 0; v < w.n_services; ++v)
            for (int t = 0; t < w.grid.points; ++t)
                for (int f = 0; f < F; ++f) {
                    double x = w.at(v, t, f);
                    n.min[f] = std::min(n.min[f], x);
                    n.max[f] = std::max(n.max[f], x);
                }
    }
    return n;
}

void apply_normalizer(AlignedWindow& w, const FeatureNormalizer& norm) {
    if (w.n_features != static_cast<int>(norm.min.size()))
        throw ShapeMismatch("apply_normalizer: feature count differs from normalizer");
    for (int v = 0; v < w.n_services; ++v)
        for (int t = 0; t < w.grid.points; ++t)
            for (int f = 0; f < w.n_features; ++f) {
                double& x = w.at(v, t, f);
                if (norm.degenerate(f)) {
                    x = 0.0;
                } else {
                    x = (x - norm.min[f]) / (norm.max[f] - norm.min[f]);
                    x = std::clamp(x, 0.0, 1.0);
                }
            }
}

void FeatureNormalizer::save(const fs::path& path) const {
    json j;
    j["feature_names"] = feature_names;
    j["min"] = min;
    j["max"] = max;
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

FeatureNormalizer FeatureNormalizer::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile("cannot open " + path.string());
    json j;
    in >> j;
    FeatureNormalizer n;
    n.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    n.min = j.at("min").get<std::vector<double>>();
    n.max = j.at("max").get<std::vector<double>>();
    return n;
}

// --- alignment --------------------------------------------------------------

std::vector<std::string> FeatureSchema::feature_names() const {
    std::vector<std::string> names;
    for (const auto& m : metric_names) names.push_back("metric." + m);
    names.push_back("log.total");
    for (LogLevel l : {LogLevel::Debug, LogLevel::Info, LogLevel::Warn, LogLevel::Error,
                       LogLevel::Fatal})
        names.push_back(std::string("log.") + log_level_name(l));
    names.push_back("trace.inbound_latency_mean");
    names.push_back("trace.inbound_count");
    names.push_back("trace.inbound_error_rate");
    return names;
}

FeatureSchema scan_feature_schema(const Dataset& ds) {
    std::set<std::string> metrics;
    for (const auto& fc : ds.cases) {
        fs::path mpath = fc.dir / "metrics.csv";
        csv::for_each_row(mpath, "timestamp,service,metric_name,value",
                          [&](long, const std::vector<std::string>& f) {
                              metrics.insert(f[2]);
                              return true;
                          });
    }
    FeatureSchema s;
    s.metric_names.assign(metrics.begin(), metrics.end());
    return s;
}

AlignedCase align_case(const Dataset& ds, const FaultCase& fc, const FeatureSchema& schema) {
    AlignedCase out;
    out.telemetry = load_case_telemetry(ds, fc);

    Timestamp lo = std::numeric_limits<Timestamp>::max();
    Timestamp hi = std::numeric_limits<Timestamp>::min();
    auto span = [&](Timestamp ts) {
        lo = std::min(lo, ts);
        hi = std::max(hi, ts);
    };
    for (const auto& r : out.telemetry.metrics) span(r.timestamp);
    for (const auto& r : out.telemetry.logs) span(r.timestamp);
    for (const auto& r : out.telemetry.traces) span(r.timestamp);
    if (lo > hi) throw EmptyInput("case " + fc.case_id + " has no telemetry");

    SamplingGrid grid;
    grid.interval = ds.interval_s;
    grid.start = (lo / grid.interval) * grid.interval;
    grid.points = static_cast<int>((hi - grid.start) / grid.interval) + 1;
    out.grid = grid;

    int V = ds.n_services();
    int F = schema.n_features();
    out.features.allocate(V, grid.points, F);
    out.features.grid = grid;
    out.features.feature_names = schema.feature_names();

    auto metric_series = resample_metrics(out.telemetry.metrics, grid, V);
    for (int v = 0; v < V; ++v)
        for (size_t m = 0; m < schema.metric_names.size(); ++m) {
            auto it = metric_series.find({v, schema.metric_names[m]});
            if (it == metric_series.end()) continue;  // absent metric stays zero
            for (int t = 0; t < grid.points; ++t)
                out.features.at(v, t, static_cast<int>(m)) = it->second[t];
        }

    auto logf = extract_log_features(out.telemetry.logs, grid, V);
    int base = static_cast<int>(schema.metric_names.size());
    for (int v = 0; v < V; ++v)
        for (int f = 0; f < kLogFeatures; ++f)
            for (int t = 0; t < grid.points; ++t) out.features.at(v, t, base + f) = logf[v][f][t];

    auto tracef = extract_trace_features(out.telemetry.traces, grid, V);
    base += kLogFeatures;
    for (int v = 0; v < V; ++v)
        for (int f = 0; f < kTraceFeatures; ++f)
            for (int t = 0; t < grid.points; ++t) out.features.at(v, t, base + f) = tracef[v][f][t];

    return out;
}

namespace {

AlignedWindow cut_window(const AlignedCase& ac, int start_bucket, int len) {
    AlignedWindow w;
    w.allocate(ac.features.n_services, len, ac.features.n_features);
    w.feature_names = ac.features.feature_names;
    w.grid.interval = ac.grid.interval;
    w.grid.start = ac.grid.at(start_bucket);
    w.grid.points = len;
    for (int v = 0; v < w.n_services; ++v)
        for (int t = 0; t < len; ++t)
            for (int f = 0; f < w.n_features; ++f) w.at(v, t, f) = ac.features.at(v, start_bucket + t, f);
    return w;
}

}  // namespace

SegmentedWindows segment_windows(const AlignedCase& ac, const FaultCase& fc, int T, int stride) {
    if (T <= 0) throw EmptyGrid("window length must be > 0");
    int fault_start = ac.grid.bucket_of(fc.inject_start);
    if (fault_start < 0) {
        if (fc.inject_start >= ac.grid.end())
            throw InsufficientHistory("inject_start beyond the case telemetry span");
        fault_start = 0;
    }
    if (fault_start < T)
        throw InsufficientHistory("case " + fc.case_id + ": no complete pre-injection window (fault bucket " +
                                  std::to_string(fault_start) + ", T=" + std::to_string(T) + ")");
    if (fault_start + T > ac.grid.points)
        throw InsufficientHistory("case " + fc.case_id + ": telemetry ends before the fault window does");

    SegmentedWindows out;
    out.fault_start_bucket = fault_start;
    out.normal_start_bucket = fault_start - T;
    out.fault_window = cut_window(ac, fault_start, T);
    out.normal_window = cut_window(ac, fault_start - T, T);
    if (stride > 0)
        for (int s = 0; s + T <= ac.grid.points; s += stride)
            if (s != fault_start && s != fault_start - T) out.context.push_back(cut_window(ac, s, T));
    return out;
}

}  // namespace rcakit
