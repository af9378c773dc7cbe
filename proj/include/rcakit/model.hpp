#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "rcakit/autodiff.hpp"
#include "rcakit/core_types.hpp"

namespace rcakit {

struct ModelConfig {
    int d_temp = 32;                // temporal embedding dim
    int n_heads = 4;                // d_k = d_temp / n_heads
    int n_transformer_layers = 2;
    int ffn_hidden = 64;            // transformer feed-forward width
    int n_gat_layers = 2;           // K
    int d_spat = 32;                // spatial embedding dim
    int mlp_hidden = 32;            // scorer hidden width
    double dropout = 0.1;
    std::uint64_t seed = 7;

    int d_k() const { return d_temp / n_heads; }
    void validate() const;
};

// Toggles for the Table-2-style ablation variants that live inside the model.
enum class GatMode {
    Hybrid,   // messages scaled by the dynamic edge weights e_ij
    Vanilla,  // e_ij forced to 1 (plain GAT aggregation)
};

// All learnable weights, keyed by name.  Order is fixed at init time so the
// optimizer state can line up positionally.
struct ModelParams {
    std::vector<std::pair<std::string, Eigen::MatrixXd>> entries;

    Eigen::MatrixXd& get(const std::string& name);
    const Eigen::MatrixXd& get(const std::string& name) const;

    static ModelParams init(const ModelConfig& cfg, int n_features, std::uint64_t seed);
};

struct ServiceEmbeddings {
    Eigen::MatrixXd temporal;        // (V, d_temp)
    Eigen::MatrixXd spatiotemporal;  // (V, d_spat)
    Eigen::VectorXd logits;          // (V,)
    Eigen::VectorXd scores;          // (V,) = sigmoid(logits)
};

// One forward pass lives on one tape.  Parameters are bound to tape leaves on
// first use so their gradients can be read back after backward().
struct ForwardContext {
    ad::Tape tape;
    std::map<std::string, ad::Var> bound;
    bool training = false;
    std::mt19937_64 rng{0};

    ad::Var bind(const ModelParams& params, const std::string& name);
};

// Graph builders (autodiff path).
ad::Var build_temporal(ForwardContext& ctx, const AlignedWindow& window,
                       const ModelParams& params, const ModelConfig& cfg);
ad::Var build_hgat(ForwardContext& ctx, ad::Var temporal, const CallGraphSnapshot& snapshot,
                   const ModelParams& params, const ModelConfig& cfg,
                   GatMode mode = GatMode::Hybrid);
ad::Var build_logits(ForwardContext& ctx, ad::Var spatiotemporal, const ModelParams& params);

// Neighborhood structure used by the GAT: mask of N(i) = in-edges u
// reverse(out-edges) u self-loop, and the message weight matrix E with
// E(i,j) = e_{j->i} (the in-edge weight when observed, otherwise the forward
// weight of i->j reused for the reverse path) and E(i,i) = 1.
struct GatStructure {
    Eigen::MatrixXd mask;     // (V,V) 0/1
    Eigen::MatrixXd weights;  // (V,V)
};
GatStructure gat_structure(const CallGraphSnapshot& snapshot, GatMode mode);

// Plain evaluation-mode operations (no dropout, deterministic).
Eigen::MatrixXd encode_temporal(const AlignedWindow& window, const ModelParams& params,
                                const ModelConfig& cfg);
Eigen::MatrixXd hgat_forward(const Eigen::MatrixXd& temporal, const CallGraphSnapshot& snapshot,
                             const ModelParams& params, const ModelConfig& cfg,
                             GatMode mode = GatMode::Hybrid);
void score(const Eigen::MatrixXd& spatiotemporal, const ModelParams& params,
           Eigen::VectorXd& logits_out, Eigen::VectorXd& scores_out);

ServiceEmbeddings forward(const AlignedWindow& window, const CallGraphSnapshot& snapshot,
                          const ModelParams& params, const ModelConfig& cfg,
                          GatMode mode = GatMode::Hybrid);

}  // namespace rcakit
