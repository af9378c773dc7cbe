#include "rcakit/dyngraph.hpp"

#include <algorithm>
#include <cmath>

namespace rcakit {

void EdgeNormalizer::observe(int caller, int callee, double count) {
    auto [it, fresh] = per_edge.try_emplace({caller, callee}, std::make_pair(count, count));
    if (!fresh) {
        it->second.first = std::min(it->second.first, count);
        it->second.second = std::max(it->second.second, count);
    }
    if (!fitted) {
        global_min = global_max = count;
        fitted = true;
    } else {
        global_min = std::min(global_min, count);
        global_max = std::max(global_max, count);
    }
}

double EdgeNormalizer::normalize(int caller, int callee, double count) const {
    auto it = per_edge.find({caller, callee});
    double lo, hi;
    if (it != per_edge.end()) {
        lo = it->second.first;
        hi = it->second.second;
    } else {
        lo = global_min;
        hi = global_max;
    }
    if (hi <= lo) return 0.0;  // degenerate range
    return std::clamp((count - lo) / (hi - lo), 0.0, 1.0);
}

std::map<std::pair<int, int>, std::pair<std::int64_t, double>> aggregate_edges(
    const std::vector<RawTraceRecord>& traces, const SamplingGrid& window,
    const std::vector<int>& extra_error_codes) {
    std::map<std::pair<int, int>, std::pair<std::int64_t, std::int64_t>> acc;  // count, errors
    for (const auto& r : traces) {
        if (r.timestamp < window.start || r.timestamp >= window.end()) continue;
        auto& [count, errors] = acc[{r.caller, r.callee}];
        ++count;
        bool err = r.status_code >= 500 ||
                   std::find(extra_error_codes.begin(), extra_error_codes.end(), r.status_code) !=
                       extra_error_codes.end();
        if (err) ++errors;
    }
    std::map<std::pair<int, int>, std::pair<std::int64_t, double>> out;
    for (const auto& [edge, ce] : acc)
        out[edge] = {ce.first,
                     ce.first > 0 ? static_cast<double>(ce.second) / ce.first : 0.0};
    return out;
}

double edge_weight(double norm_count, double norm_error, double alpha) {
    auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!in_unit(norm_count) || !in_unit(norm_error) || !in_unit(alpha))
        throw DomainError("edge_weight: inputs must lie in [0,1]");
    double z = alpha * norm_count + (1.0 - alpha) * norm_error;
    return 1.0 / (1.0 + std::exp(-z));
}

CallGraphSnapshot build_snapshot(const std::vector<RawTraceRecord>& traces,
                                 const SamplingGrid& window, int n_services,
                                 const EdgeNormalizer& normalizer, double alpha,
                                 const std::vector<int>& extra_error_codes) {
    CallGraphSnapshot snap;
    snap.n_services = n_services;
    for (const auto& [edge, cr] : aggregate_edges(traces, window, extra_error_codes)) {
        EdgeStats st;
        st.count = cr.first;
        st.error_rate = cr.second;
        st.norm_count = normalizer.normalize(edge.first, edge.second,
                                             static_cast<double>(st.count));
        st.norm_error = st.error_rate;  // already a rate in [0,1]
        st.weight = edge_weight(st.norm_count, st.norm_error, alpha);
        snap.edges.emplace(edge, st);
    }
    return snap;
}

CallGraphSnapshot build_static_snapshot(const std::vector<std::pair<int, int>>& edge_union,
                                        int n_services) {
    CallGraphSnapshot snap;
    snap.n_services = n_services;
    for (const auto& edge : edge_union) {
        EdgeStats st;
        st.weight = 0.5;  // sigmoid(0), the zero-evidence value
        snap.edges.emplace(edge, st);
    }
    return snap;
}

}  // namespace rcakit
