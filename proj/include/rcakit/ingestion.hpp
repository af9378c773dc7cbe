#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rcakit/core_types.hpp"

namespace rcakit {

enum class LogLevel { Debug, Info, Warn, Error, Fatal };

LogLevel parse_log_level(const std::string& s);
const char* log_level_name(LogLevel lvl);

struct RawMetricRecord {
    Timestamp timestamp;
    int service;  // dense service index
    std::string metric_name;
    double value;
};

struct RawLogRecord {
    Timestamp timestamp;
    int service;
    LogLevel level;
    std::string template_id;  // may be empty
};

struct RawTraceRecord {
    Timestamp timestamp;
    std::string trace_id;
    int caller;
    int callee;
    double latency_ms;
    int status_code;
};

// Raw telemetry of one case, service names already resolved to indices.
struct CaseTelemetry {
    std::vector<RawMetricRecord> metrics;
    std::vector<RawLogRecord> logs;
    std::vector<RawTraceRecord> traces;
};

CaseTelemetry load_case_telemetry(const Dataset& ds, const FaultCase& fc);

// Per-feature min-max state, fitted on the training split only.
// Serialized as {"feature_names":[...], "min":[...], "max":[...]}.
struct FeatureNormalizer {
    std::vector<std::string> feature_names;
    std::vector<double> min;
    std::vector<double> max;

    bool degenerate(int f) const { return min[f] == max[f]; }
    void save(const std::filesystem::path& path) const;
    static FeatureNormalizer load(const std::filesystem::path& path);
};

// --- resampling -------------------------------------------------------------

// Mean of records per bucket; gaps carry the last observed value forward and
// are 0 before the first observation.  Keyed by (service, metric_name).
std::map<std::pair<int, std::string>, std::vector<double>> resample_metrics(
    const std::vector<RawMetricRecord>& records, const SamplingGrid& grid, int n_services);

// Per-service log series: total count plus one count per severity level.
inline constexpr int kLogFeatures = 6;
// out[service][feature] is a series of grid.points values.
std::vector<std::vector<std::vector<double>>> extract_log_features(
    const std::vector<RawLogRecord>& records, const SamplingGrid& grid, int n_services);

// Per-service trace series attributed to the callee:
// inbound_latency_mean, inbound_count, inbound_error_rate.
// A status code >= 500 (or one of `extra_error_codes`) counts as an error.
inline constexpr int kTraceFeatures = 3;
std::vector<std::vector<std::vector<double>>> extract_trace_features(
    const std::vector<RawTraceRecord>& records, const SamplingGrid& grid, int n_services,
    const std::vector<int>& extra_error_codes = {});

// --- normalization ----------------------------------------------------------

FeatureNormalizer fit_normalizer(const std::vector<AlignedWindow>& training_windows);
void apply_normalizer(AlignedWindow& window, const FeatureNormalizer& norm);

// --- full-case alignment and windowing --------------------------------------

// Schema of the aligned feature vector: metric names (sorted union over the
// dataset), then the fixed log and trace bases.  Constant across all cases of
// a dataset so model input shapes never vary.
struct FeatureSchema {
    std::vector<std::string> metric_names;  // sorted, without prefix
    std::vector<std::string> feature_names() const;
    int n_features() const { return static_cast<int>(metric_names.size()) + kLogFeatures + kTraceFeatures; }
};

FeatureSchema scan_feature_schema(const Dataset& ds);

// Full-length aligned (unnormalized) features of one case on its natural grid
// (from the earliest to the latest telemetry timestamp).
struct AlignedCase {
    SamplingGrid grid;
    AlignedWindow features;  // grid.points == full case length
    CaseTelemetry telemetry;
};

AlignedCase align_case(const Dataset& ds, const FaultCase& fc, const FeatureSchema& schema);

struct SegmentedWindows {
    AlignedWindow normal_window;            // latest complete window before inject_start
    AlignedWindow fault_window;             // window starting at inject_start (snapped)
    int fault_start_bucket = 0;             // bucket index of the fault window start
    int normal_start_bucket = 0;
    std::vector<AlignedWindow> context;     // extra sliding windows when stride > 0
};

// Cuts the per-case fault window and normal-reference window (plus optional
// sliding context windows).  Throws InsufficientHistory when no complete
// pre-injection window exists.
SegmentedWindows segment_windows(const AlignedCase& aligned, const FaultCase& fc, int window_len,
                                 int stride = 0);

}  // namespace rcakit
