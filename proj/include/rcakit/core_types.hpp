#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rcakit/errors.hpp"

namespace rcakit {

using Timestamp = std::int64_t;  // unix seconds; sub-second data is floored

// A service known to the dataset.  `index` is dense and stable: the set of
// indices of a dataset is exactly 0..V-1.
struct ServiceId {
    std::string name;
    int index = -1;

    bool operator==(const ServiceId&) const = default;
};

// Uniform sampling clock.  A window of length T is `points = T` grid steps.
struct SamplingGrid {
    Timestamp start = 0;
    std::int64_t interval = 1;  // seconds, > 0
    int points = 0;

    Timestamp at(int k) const { return start + static_cast<Timestamp>(k) * interval; }
    Timestamp end() const { return at(points); }

    // Bucket index of a timestamp, or -1 when outside [start, end).
    int bucket_of(Timestamp ts) const {
        if (interval <= 0 || ts < start) return -1;
        auto k = (ts - start) / interval;
        return k < points ? static_cast<int>(k) : -1;
    }

    void validate() const {
        if (interval <= 0) throw EmptyGrid("sampling interval must be > 0");
        if (points <= 0) throw EmptyGrid("sampling grid has no points");
    }

    bool operator==(const SamplingGrid&) const = default;
};

// Per-window multivariate features, shape (V, T, F).  Feature names carry a
// modality prefix ("metric.", "log.", "trace.").  Values are in [0,1] once a
// normalizer has been applied.
struct AlignedWindow {
    SamplingGrid grid;  // points == T
    int n_services = 0;
    int n_features = 0;
    std::vector<std::string> feature_names;
    std::vector<double> values;  // row-major (service, time, feature)

    void allocate(int v, int t, int f) {
        n_services = v;
        n_features = f;
        grid.points = t;
        values.assign(static_cast<size_t>(v) * t * f, 0.0);
        feature_names.resize(f);
    }

    double& at(int v, int t, int f) {
        return values[(static_cast<size_t>(v) * grid.points + t) * n_features + f];
    }
    double at(int v, int t, int f) const {
        return values[(static_cast<size_t>(v) * grid.points + t) * n_features + f];
    }

    // (T, F) feature matrix of one service.
    Eigen::MatrixXd service_matrix(int v) const {
        Eigen::MatrixXd m(grid.points, n_features);
        for (int t = 0; t < grid.points; ++t)
            for (int f = 0; f < n_features; ++f) m(t, f) = at(v, t, f);
        return m;
    }
};

// Per-edge call statistics within one window.
struct EdgeStats {
    std::int64_t count = 0;     // C_ij
    double error_rate = 0.0;    // R_ij in [0,1]
    double norm_count = 0.0;    // Norm(C) in [0,1]
    double norm_error = 0.0;    // Norm(R) in [0,1]
    double weight = 0.0;        // sigmoid(alpha*norm_count + (1-alpha)*norm_error)
};

// Weighted directed call graph of one window.  No self-edges in raw data;
// self-loops exist only inside the model.
struct CallGraphSnapshot {
    int n_services = 0;
    std::map<std::pair<int, int>, EdgeStats> edges;  // (caller, callee) -> stats
};

enum class SplitTag { Train, Test, Unassigned };

// One labeled incident.
struct FaultCase {
    std::string case_id;
    std::filesystem::path dir;  // case directory holding the telemetry files
    Timestamp inject_start = 0;
    Timestamp inject_end = 0;
    std::string root_cause;  // service name
    std::string fault_type;
    SplitTag split = SplitTag::Unassigned;
};

struct Dataset {
    std::filesystem::path root_dir;
    std::vector<ServiceId> services;
    std::int64_t interval_s = 1;
    std::vector<std::string> fault_types;
    std::vector<FaultCase> cases;

    int index_of(const std::string& name) const {
        for (const auto& s : services)
            if (s.name == name) return s.index;
        return -1;
    }
    int n_services() const { return static_cast<int>(services.size()); }
};

// One problem found while validating a dataset on disk.
struct ValidationIssue {
    enum class Kind { MissingFile, SchemaViolation, LabelViolation, ClockViolation };
    Kind kind;
    std::string case_id;  // empty for dataset-level issues
    std::string file;
    long line = 0;  // 1-based line in `file`, 0 when not applicable
    std::string message;

    std::string format() const;
};

// Loads and checks a dataset directory against the on-disk layout, collecting
// every violation (with case id and file offset) instead of stopping at the
// first.  Returns the issues; `dataset` is still populated as far as possible.
std::vector<ValidationIssue> validate_dataset_report(const std::filesystem::path& root_dir,
                                                     Dataset& dataset);

// Throwing variant: returns the dataset or throws the error type of the first
// issue, with all issues listed in the message.
Dataset validate_dataset(const std::filesystem::path& root_dir);

}  // namespace rcakit
