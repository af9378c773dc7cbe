#include "rcakit/model.hpp"

#include <cmath>

namespace rcakit {

void ModelConfig::validate() const {
    if (d_temp < 1 || d_spat < 1 || mlp_hidden < 1 || ffn_hidden < 1)
        throw ConfigError("model dims must be >= 1");
    if (n_heads < 1 || d_temp % n_heads != 0)
        throw ConfigError("d_temp must be divisible by n_heads");
    if (n_transformer_layers < 1 || n_gat_layers < 1)
        throw ConfigError("layer counts must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0,1)");
}

Eigen::MatrixXd& ModelParams::get(const std::string& name) {
    for (auto& [n, m] : entries)
        if (n == name) return m;
    throw ConfigError("unknown parameter '" + name + "'");
}

const Eigen::MatrixXd& ModelParams::get(const std::string& name) const {
    for (const auto& [n, m] : entries)
        if (n == name) return m;
    throw ConfigError("unknown parameter '" + name + "'");
}

ModelParams ModelParams::init(const ModelConfig& cfg, int n_features, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    ModelParams p;
    auto uniform = [&](const std::string& name, long rows, long cols, long fan_in) {
        double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> d(-s, s);
        Eigen::MatrixXd m(rows, cols);
        for (long i = 0; i < rows; ++i)
            for (long j = 0; j < cols; ++j) m(i, j) = d(rng);
        p.entries.emplace_back(name, std::move(m));
    };
    auto fill = [&](const std::string& name, long rows, long cols, double v) {
        p.entries.emplace_back(name, Eigen::MatrixXd::Constant(rows, cols, v));
    };

    uniform("in.w", n_features, cfg.d_temp, n_features);
    fill("in.b", 1, cfg.d_temp, 0.0);
    for (int l = 0; l < cfg.n_transformer_layers; ++l) {
        std::string pre = "t" + std::to_string(l) + ".";
        uniform(pre + "wq", cfg.d_temp, cfg.d_temp, cfg.d_temp);
        uniform(pre + "wk", cfg.d_temp, cfg.d_temp, cfg.d_temp);
        uniform(pre + "wv", cfg.d_temp, cfg.d_temp, cfg.d_temp);
        uniform(pre + "wo", cfg.d_temp, cfg.d_temp, cfg.d_temp);
        fill(pre + "bo", 1, cfg.d_temp, 0.0);
        fill(pre + "ln1.g", 1, cfg.d_temp, 1.0);
        fill(pre + "ln1.b", 1, cfg.d_temp, 0.0);
        uniform(pre + "ff.w1", cfg.d_temp, cfg.ffn_hidden, cfg.d_temp);
        fill(pre + "ff.b1", 1, cfg.ffn_hidden, 0.0);
        uniform(pre + "ff.w2", cfg.ffn_hidden, cfg.d_temp, cfg.ffn_hidden);
        fill(pre + "ff.b2", 1, cfg.d_temp, 0.0);
        fill(pre + "ln2.g", 1, cfg.d_temp, 1.0);
        fill(pre + "ln2.b", 1, cfg.d_temp, 0.0);
    }
    for (int k = 0; k < cfg.n_gat_layers; ++k) {
        std::string pre = "g" + std::to_string(k) + ".";
        int d_in = k == 0 ? cfg.d_temp : cfg.d_spat;
        uniform(pre + "w", d_in, cfg.d_spat, d_in);
        uniform(pre + "a_src", cfg.d_spat, 1, cfg.d_spat);
        uniform(pre + "a_dst", cfg.d_spat, 1, cfg.d_spat);
    }
    uniform("s.w1", cfg.d_spat, cfg.mlp_hidden, cfg.d_spat);
    fill("s.b1", 1, cfg.mlp_hidden, 0.0);
    uniform("s.w2", cfg.mlp_hidden, 1, cfg.mlp_hidden);
    fill("s.b2", 1, 1, 0.0);
    return p;
}

ad::Var ForwardContext::bind(const ModelParams& params, const std::string& name) {
    auto it = bound.find(name);
    if (it != bound.end()) return it->second;
    ad::Var v = ad::leaf(tape, params.get(name));
    bound.emplace(name, v);
    return v;
}

ad::Var build_temporal(ForwardContext& ctx, const AlignedWindow& window,
                       const ModelParams& params, const ModelConfig& cfg) {
    if (window.n_features != params.get("in.w").rows())
        throw ShapeMismatch("build_temporal: window has " + std::to_string(window.n_features) +
                            " features, model expects " +
                            std::to_string(params.get("in.w").rows()));
    if (window.grid.points < 1) throw ShapeMismatch("build_temporal: empty window");

    int d_k = cfg.d_k();
    double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(d_k));
    ad::Var in_w = ctx.bind(params, "in.w");
    ad::Var in_b = ctx.bind(params, "in.b");

    std::vector<ad::Var> pooled;
    pooled.reserve(window.n_services);
    for (int v = 0; v < window.n_services; ++v) {
        ad::Var x = ad::constant(ctx.tape, window.service_matrix(v));  // (T,F)
        ad::Var z = ad::add_rowvec(ad::matmul(x, in_w), in_b);        // (T,d_temp)
        for (int l = 0; l < cfg.n_transformer_layers; ++l) {
            std::string pre = "t" + std::to_string(l) + ".";
            ad::Var q = ad::matmul(z, ctx.bind(params, pre + "wq"));
            ad::Var k = ad::matmul(z, ctx.bind(params, pre + "wk"));
            ad::Var val = ad::matmul(z, ctx.bind(params, pre + "wv"));
            std::vector<ad::Var> heads;
            for (int h = 0; h < cfg.n_heads; ++h) {
                ad::Var qh = ad::slice_cols(q, h * d_k, d_k);
                ad::Var kh = ad::slice_cols(k, h * d_k, d_k);
                ad::Var vh = ad::slice_cols(val, h * d_k, d_k);
                ad::Var attn =
                    ad::row_softmax(ad::scale(ad::matmul(qh, ad::transpose(kh)), inv_sqrt_dk));
                attn = ad::dropout(attn, cfg.dropout, ctx.training, ctx.rng);
                heads.push_back(ad::matmul(attn, vh));
            }
            ad::Var o = ad::add_rowvec(ad::matmul(ad::concat_cols(heads), ctx.bind(params, pre + "wo")),
                                       ctx.bind(params, pre + "bo"));
            o = ad::dropout(o, cfg.dropout, ctx.training, ctx.rng);
            z = ad::add_rowvec(ad::mul_rowvec(ad::layer_norm_rows(ad::add(z, o)),
                                              ctx.bind(params, pre + "ln1.g")),
                               ctx.bind(params, pre + "ln1.b"));
            ad::Var f1 = ad::relu(ad::add_rowvec(ad::matmul(z, ctx.bind(params, pre + "ff.w1")),
                                                 ctx.bind(params, pre + "ff.b1")));
            f1 = ad::dropout(f1, cfg.dropout, ctx.training, ctx.rng);
            ad::Var f2 = ad::add_rowvec(ad::matmul(f1, ctx.bind(params, pre + "ff.w2")),
                                        ctx.bind(params, pre + "ff.b2"));
            z = ad::add_rowvec(ad::mul_rowvec(ad::layer_norm_rows(ad::add(z, f2)),
                                              ctx.bind(params, pre + "ln2.g")),
                               ctx.bind(params, pre + "ln2.b"));
        }
        pooled.push_back(ad::mean_rows(z));  // sequence collapses by mean over T
    }
    return ad::vcat_rows(pooled);  // (V, d_temp)
}

GatStructure gat_structure(const CallGraphSnapshot& snapshot, GatMode mode) {
    int V = snapshot.n_services;
    GatStructure s;
    s.mask = Eigen::MatrixXd::Zero(V, V);
    s.weights = Eigen::MatrixXd::Zero(V, V);
    Eigen::MatrixXd has_in_edge = Eigen::MatrixXd::Zero(V, V);
    for (const auto& [edge, st] : snapshot.edges) {
        auto [c, d] = edge;
        if (c < 0 || c >= V || d < 0 || d >= V)
            throw UnknownService("snapshot edge references service outside 0..V-1");
        s.mask(d, c) = 1.0;  // message caller -> callee
        s.weights(d, c) = st.weight;
        has_in_edge(d, c) = 1.0;
    }
    // reverse paths carry the forward weight unless the true in-edge exists
    for (const auto& [edge, st] : snapshot.edges) {
        auto [c, d] = edge;
        s.mask(c, d) = 1.0;
        if (has_in_edge(c, d) == 0.0) s.weights(c, d) = st.weight;
    }
    for (int i = 0; i < V; ++i) {
        s.mask(i, i) = 1.0;
        s.weights(i, i) = 1.0;  // self-loop
    }
    if (mode == GatMode::Vanilla) s.weights = s.mask;  // e_ij forced to 1
    return s;
}

ad::Var build_hgat(ForwardContext& ctx, ad::Var temporal, const CallGraphSnapshot& snapshot,
                   const ModelParams& params, const ModelConfig& cfg, GatMode mode) {
    long V = temporal.value().rows();
    if (snapshot.n_services != V)
        throw ShapeMismatch("build_hgat: snapshot covers " + std::to_string(snapshot.n_services) +
                            " services, embeddings cover " + std::to_string(V));
    GatStructure s = gat_structure(snapshot, mode);

    ad::Var h = temporal;
    for (int k = 0; k < cfg.n_gat_layers; ++k) {
        std::string pre = "g" + std::to_string(k) + ".";
        ad::Var wh = ad::matmul(h, ctx.bind(params, pre + "w"));  // (V, d_spat)
        ad::Var f = ad::matmul(wh, ctx.bind(params, pre + "a_src"));
        ad::Var g = ad::matmul(wh, ctx.bind(params, pre + "a_dst"));
        ad::Var scores = ad::leaky_relu(ad::outer_rowsum(f, g), 0.2);
        ad::Var attn = ad::masked_row_softmax(scores, s.mask);
        attn = ad::dropout(attn, cfg.dropout, ctx.training, ctx.rng);
        ad::Var agg = ad::matmul(ad::mul_const(attn, s.weights), wh);
        h = k + 1 < cfg.n_gat_layers ? ad::elu(agg) : agg;  // identity at the final layer
    }
    return h;
}

ad::Var build_logits(ForwardContext& ctx, ad::Var spatiotemporal, const ModelParams& params) {
    if (spatiotemporal.value().cols() != params.get("s.w1").rows())
        throw ShapeMismatch("build_logits: embedding width differs from scorer input");
    ad::Var h1 = ad::relu(ad::add_rowvec(ad::matmul(spatiotemporal, ctx.bind(params, "s.w1")),
                                         ctx.bind(params, "s.b1")));
    return ad::add_rowvec(ad::matmul(h1, ctx.bind(params, "s.w2")), ctx.bind(params, "s.b2"));
}

namespace {

void check_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) throw NonFinite(std::string(what) + " contains NaN/inf");
}

}  // namespace

Eigen::MatrixXd encode_temporal(const AlignedWindow& window, const ModelParams& params,
                                const ModelConfig& cfg) {
    ForwardContext ctx;
    Eigen::MatrixXd out = build_temporal(ctx, window, params, cfg).value();
    check_finite(out, "temporal embeddings");
    return out;
}

Eigen::MatrixXd hgat_forward(const Eigen::MatrixXd& temporal, const CallGraphSnapshot& snapshot,
                             const ModelParams& params, const ModelConfig& cfg, GatMode mode) {
    ForwardContext ctx;
    ad::Var t = ad::constant(ctx.tape, temporal);
    Eigen::MatrixXd out = build_hgat(ctx, t, snapshot, params, cfg, mode).value();
    check_finite(out, "spatio-temporal embeddings");
    return out;
}

void score(const Eigen::MatrixXd& spatiotemporal, const ModelParams& params,
           Eigen::VectorXd& logits_out, Eigen::VectorXd& scores_out) {
    ForwardContext ctx;
    ad::Var h = ad::constant(ctx.tape, spatiotemporal);
    Eigen::MatrixXd logits = build_logits(ctx, h, params).value();
    logits_out = logits.col(0);
    scores_out = logits_out.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

ServiceEmbeddings forward(const AlignedWindow& window, const CallGraphSnapshot& snapshot,
                          const ModelParams& params, const ModelConfig& cfg, GatMode mode) {
    ForwardContext ctx;
    ad::Var temporal = build_temporal(ctx, window, params, cfg);
    ad::Var spat = build_hgat(ctx, temporal, snapshot, params, cfg, mode);
    ad::Var logits = build_logits(ctx, spat, params);

    ServiceEmbeddings e;
    e.temporal = temporal.value();
    e.spatiotemporal = spat.value();
    e.logits = logits.value().col(0);
    e.scores = e.logits.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    check_finite(e.temporal, "temporal embeddings");
    check_finite(e.spatiotemporal, "spatio-temporal embeddings");
    check_finite(e.logits, "logits");
    return e;
}

}  // namespace rcakit
