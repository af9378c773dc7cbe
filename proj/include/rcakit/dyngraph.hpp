#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "rcakit/core_types.hpp"
#include "rcakit/ingestion.hpp"

namespace rcakit {

// Min-max state of per-edge request counts over the training horizon, with a
// global fallback for pairs never seen in training.
struct EdgeNormalizer {
    std::map<std::pair<int, int>, std::pair<double, double>> per_edge;  // (min, max)
    double global_min = 0.0;
    double global_max = 0.0;
    bool fitted = false;

    void observe(int caller, int callee, double count);
    double normalize(int caller, int callee, double count) const;  // clamped [0,1]
};

// Raw per-edge aggregation over one window: C = calls, R = error fraction.
std::map<std::pair<int, int>, std::pair<std::int64_t, double>> aggregate_edges(
    const std::vector<RawTraceRecord>& traces, const SamplingGrid& window,
    const std::vector<int>& extra_error_codes = {});

// e_ij = sigmoid(alpha*norm_count + (1-alpha)*norm_error); all inputs in [0,1].
double edge_weight(double norm_count, double norm_error, double alpha);

CallGraphSnapshot build_snapshot(const std::vector<RawTraceRecord>& traces,
                                 const SamplingGrid& window, int n_services,
                                 const EdgeNormalizer& normalizer, double alpha,
                                 const std::vector<int>& extra_error_codes = {});

// Static-graph ablation: the same edge set for every window (the given union
// of training edges), every weight 0.5 = sigmoid(0).
CallGraphSnapshot build_static_snapshot(const std::vector<std::pair<int, int>>& edge_union,
                                        int n_services);

}  // namespace rcakit
