#include "rcakit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

namespace rcakit {

namespace fs = std::filesystem;
using nlohmann::json;

const char* ablation_name(Ablation a) {
    switch (a) {
        case Ablation::Full: return "full";
        case Ablation::NoTcd: return "no_tcd";
        case Ablation::NoSco: return "no_sco";
        case Ablation::VanillaGat: return "vanilla_gat";
        case Ablation::StaticGraph: return "static_graph";
    }
    return "?";
}

Ablation parse_ablation(const std::string& s) {
    for (Ablation a : {Ablation::Full, Ablation::NoTcd, Ablation::NoSco, Ablation::VanillaGat,
                       Ablation::StaticGraph})
        if (s == ablation_name(a)) return a;
    throw ConfigError("unknown ablation '" + s + "'");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (patience < 1) throw ConfigError("patience must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (window_len < 1) throw ConfigError("window_len must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must be in [0,1]");
    if (val_fraction < 0.0 || val_fraction >= 1.0)
        throw ConfigError("val_fraction must be in [0,1)");
}

// --- split ------------------------------------------------------------------

void stratified_split(Dataset& dataset, double train_fraction, std::uint64_t seed) {
    if (dataset.cases.empty()) throw EmptyDataset("stratified_split: dataset has no cases");
    std::map<std::pair<std::string, std::string>, std::vector<int>> strata;
    for (size_t i = 0; i < dataset.cases.size(); ++i)
        strata[{dataset.cases[i].fault_type, dataset.cases[i].root_cause}].push_back(
            static_cast<int>(i));
    std::mt19937_64 rng(seed);
    for (auto& [key, members] : strata) {
        std::shuffle(members.begin(), members.end(), rng);
        int s = static_cast<int>(members.size());
        int n_train;
        if (s == 1) {
            n_train = 1;  // singleton strata never become test-only labels
        } else {
            n_train = static_cast<int>(std::lround(train_fraction * s));
            n_train = std::clamp(n_train, 1, s - 1);
        }
        for (int i = 0; i < s; ++i)
            dataset.cases[members[i]].split = i < n_train ? SplitTag::Train : SplitTag::Test;
    }
}

// --- preparation ------------------------------------------------------------

PreparedDataset prepare_dataset(const Dataset& dataset, const TrainConfig& tcfg,
                                const CRDConfig& ccfg, Ablation ablation) {
    if (dataset.cases.empty()) throw EmptyDataset("prepare_dataset: dataset has no cases");
    PreparedDataset out;
    out.schema = scan_feature_schema(dataset);

    struct Staged {
        SegmentedWindows seg;
        std::vector<RawTraceRecord> traces;
    };
    std::vector<Staged> staged(dataset.cases.size());
    for (size_t i = 0; i < dataset.cases.size(); ++i) {
        AlignedCase ac = align_case(dataset, dataset.cases[i], out.schema);
        staged[i].seg = segment_windows(ac, dataset.cases[i], tcfg.window_len);
        staged[i].traces = std::move(ac.telemetry.traces);
    }

    // Fit both normalizers on the train split only.
    std::vector<AlignedWindow> train_windows;
    std::set<std::pair<int, int>> edge_union;
    for (size_t i = 0; i < dataset.cases.size(); ++i) {
        if (dataset.cases[i].split != SplitTag::Train) continue;
        train_windows.push_back(staged[i].seg.fault_window);
        train_windows.push_back(staged[i].seg.normal_window);
        for (const auto* grid : {&staged[i].seg.fault_window.grid, &staged[i].seg.normal_window.grid})
            for (const auto& [edge, cr] : aggregate_edges(staged[i].traces, *grid)) {
                out.edge_norm.observe(edge.first, edge.second, static_cast<double>(cr.first));
                edge_union.insert(edge);
            }
    }
    if (train_windows.empty()) throw EmptyDataset("prepare_dataset: no cases tagged train");
    out.feat_norm = fit_normalizer(train_windows);
    out.static_edges.assign(edge_union.begin(), edge_union.end());

    int V = dataset.n_services();
    for (size_t i = 0; i < dataset.cases.size(); ++i) {
        const FaultCase& fc = dataset.cases[i];
        PreparedCase pc;
        pc.case_id = fc.case_id;
        pc.fault_type = fc.fault_type;
        pc.root = dataset.index_of(fc.root_cause);
        if (pc.root < 0) throw LabelViolation("case " + fc.case_id + ": unknown root cause");
        pc.split = fc.split;
        pc.fault_window = std::move(staged[i].seg.fault_window);
        pc.normal_window = std::move(staged[i].seg.normal_window);
        if (ablation == Ablation::StaticGraph) {
            pc.fault_snapshot = build_static_snapshot(out.static_edges, V);
            pc.normal_snapshot = pc.fault_snapshot;
        } else {
            pc.fault_snapshot = build_snapshot(staged[i].traces, pc.fault_window.grid, V,
                                               out.edge_norm, tcfg.alpha);
            pc.normal_snapshot = build_snapshot(staged[i].traces, pc.normal_window.grid, V,
                                                out.edge_norm, tcfg.alpha);
        }
        apply_normalizer(pc.fault_window, out.feat_norm);
        apply_normalizer(pc.normal_window, out.feat_norm);
        pc.affected = affected_set(pc.root, pc.fault_snapshot, ccfg.affected_hops);
        out.cases.push_back(std::move(pc));
    }
    return out;
}

// --- training ---------------------------------------------------------------

namespace {

struct AdamState {
    std::vector<Eigen::MatrixXd> m, v;
    long step = 0;

    void init(const ModelParams& p) {
        for (const auto& [name, mat] : p.entries) {
            m.push_back(Eigen::MatrixXd::Zero(mat.rows(), mat.cols()));
            v.push_back(Eigen::MatrixXd::Zero(mat.rows(), mat.cols()));
        }
    }
    void update(ModelParams& p, const std::vector<Eigen::MatrixXd>& grads, double lr) {
        const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        ++step;
        double bc1 = 1.0 - std::pow(b1, step);
        double bc2 = 1.0 - std::pow(b2, step);
        for (size_t i = 0; i < p.entries.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * grads[i];
            v[i] = b2 * v[i].array().matrix() + (1.0 - b2) * grads[i].cwiseProduct(grads[i]);
            Eigen::ArrayXXd mhat = m[i].array() / bc1;
            Eigen::ArrayXXd vhat = v[i].array() / bc2;
            p.entries[i].second.array() -= lr * mhat / (vhat.sqrt() + eps);
        }
    }
};

GatMode gat_mode_of(Ablation a) {
    return a == Ablation::VanillaGat ? GatMode::Vanilla : GatMode::Hybrid;
}

struct CaseLoss {
    double ce = 0, tcd = 0, sco = 0, total = 0;
};

// One training forward+backward; gradients are accumulated into `grads`
// (ordered like params.entries).
CaseLoss backprop_case(const PreparedCase& pc, const ModelParams& params, const ModelConfig& mcfg,
                       const CRDConfig& ccfg, double lambda1, double lambda2, GatMode mode,
                       std::uint64_t dropout_seed, std::vector<Eigen::MatrixXd>& grads) {
    ForwardContext ctx;
    ctx.training = true;
    ctx.rng.seed(dropout_seed);

    ad::Var temporal = build_temporal(ctx, pc.fault_window, params, mcfg);
    ad::Var spat = build_hgat(ctx, temporal, pc.fault_snapshot, params, mcfg, mode);
    ad::Var logits = build_logits(ctx, spat, params);
    ad::Var scores = ad::sigmoid(logits);

    ad::Var loss = ce_loss_ad(logits, pc.root);
    CaseLoss cl;
    cl.ce = loss.scalar();

    if (lambda1 > 0.0) {
        ad::Var norm_temporal = build_temporal(ctx, pc.normal_window, params, mcfg);
        ad::Var norm_spat = build_hgat(ctx, norm_temporal, pc.normal_snapshot, params, mcfg, mode);
        ad::Var tcd = tcd_loss_ad(spat, norm_spat, pc.root, ccfg.delta, ccfg.tcd_sign);
        cl.tcd = tcd.scalar();
        loss = ad::add(loss, ad::scale(tcd, lambda1));
    }
    if (lambda2 > 0.0) {
        ad::Var sco = sco_loss_ad(scores, pc.root, pc.affected, ccfg.margin_m);
        cl.sco = sco.scalar();
        loss = ad::add(loss, ad::scale(sco, lambda2));
    }
    cl.total = loss.scalar();
    if (!std::isfinite(cl.total))
        throw NonFiniteLoss("non-finite loss on case " + pc.case_id + " (ce=" +
                            std::to_string(cl.ce) + " tcd=" + std::to_string(cl.tcd) +
                            " sco=" + std::to_string(cl.sco) + ")");

    ctx.tape.backward(loss);
    for (size_t i = 0; i < params.entries.size(); ++i) {
        auto it = ctx.bound.find(params.entries[i].first);
        if (it != ctx.bound.end()) grads[i] += ctx.tape.grad(it->second);
    }
    return cl;
}

double eval_ac1(const std::vector<const PreparedCase*>& cases, const ModelParams& params,
                const ModelConfig& mcfg, GatMode mode) {
    if (cases.empty()) return 0.0;
    int hits = 0;
    for (const auto* pc : cases) {
        ServiceEmbeddings e = forward(pc->fault_window, pc->fault_snapshot, params, mcfg, mode);
        auto ranking = rank_scores(e.scores);
        if (ranking.front() == pc->root) ++hits;
    }
    return static_cast<double>(hits) / cases.size();
}

struct TrainOnPreparedResult {
    ModelParams params;
    double best_val_ac1 = 0.0;
    int epochs_run = 0;
    double first_epoch_loss = 0.0;
    double last_epoch_loss = 0.0;
};

TrainOnPreparedResult train_on_prepared(const PreparedDataset& prep, const ModelConfig& mcfg,
                                        const CRDConfig& ccfg, const TrainConfig& tcfg,
                                        std::ostream* log) {
    double lambda1 = tcfg.ablation == Ablation::NoTcd ? 0.0 : ccfg.lambda1;
    double lambda2 = tcfg.ablation == Ablation::NoSco ? 0.0 : ccfg.lambda2;
    GatMode mode = gat_mode_of(tcfg.ablation);

    // Validation slice: stratified 10% of train, for early stopping.
    std::vector<int> train_ids;
    for (size_t i = 0; i < prep.cases.size(); ++i)
        if (prep.cases[i].split == SplitTag::Train) train_ids.push_back(static_cast<int>(i));
    if (train_ids.empty()) throw EmptyDataset("train: no training cases");

    std::map<std::pair<std::string, int>, std::vector<int>> strata;
    for (int id : train_ids) strata[{prep.cases[id].fault_type, prep.cases[id].root}].push_back(id);
    std::mt19937_64 split_rng(tcfg.seed ^ 0x5eedull);
    std::vector<int> fit_ids, val_ids;
    for (auto& [key, members] : strata) {
        std::shuffle(members.begin(), members.end(), split_rng);
        int n_val = static_cast<int>(std::floor(tcfg.val_fraction * members.size()));
        for (size_t i = 0; i < members.size(); ++i)
            (i < static_cast<size_t>(n_val) ? val_ids : fit_ids).push_back(members[i]);
    }
    if (val_ids.empty() && tcfg.val_fraction > 0.0 && fit_ids.size() >= 5) {
        val_ids.push_back(fit_ids.back());
        fit_ids.pop_back();
    }
    std::vector<const PreparedCase*> val_cases;
    for (int id : val_ids) val_cases.push_back(&prep.cases[id]);

    int n_features = prep.schema.n_features();
    ModelParams params = ModelParams::init(mcfg, n_features, tcfg.seed);
    AdamState adam;
    adam.init(params);

    TrainOnPreparedResult res;
    ModelParams best = params;
    double best_score = -std::numeric_limits<double>::infinity();
    int best_epoch = 0;
    std::mt19937_64 shuffle_rng(tcfg.seed ^ 0xB47C4ull);
    long step = 0;

    for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
        std::shuffle(fit_ids.begin(), fit_ids.end(), shuffle_rng);
        double epoch_loss = 0.0;
        for (size_t b = 0; b < fit_ids.size(); b += tcfg.batch_size) {
            size_t n = std::min(fit_ids.size() - b, static_cast<size_t>(tcfg.batch_size));
            std::vector<Eigen::MatrixXd> grads;
            for (const auto& [name, mat] : params.entries)
                grads.push_back(Eigen::MatrixXd::Zero(mat.rows(), mat.cols()));
            for (size_t k = 0; k < n; ++k) {
                const PreparedCase& pc = prep.cases[fit_ids[b + k]];
                std::uint64_t dropout_seed =
                    tcfg.seed * 1315423911ull + static_cast<std::uint64_t>(step) + 1;
                CaseLoss cl = backprop_case(pc, params, mcfg, ccfg, lambda1, lambda2, mode,
                                            dropout_seed, grads);
                epoch_loss += cl.total;
                ++step;
                if (log)
                    *log << step << "," << pc.case_id << "," << cl.ce << "," << cl.tcd << ","
                         << cl.sco << "," << cl.total << "\n";
            }
            for (auto& g : grads) g /= static_cast<double>(n);
            adam.update(params, grads, tcfg.learning_rate);
        }
        epoch_loss /= std::max<size_t>(1, fit_ids.size());
        if (epoch == 0) res.first_epoch_loss = epoch_loss;
        res.last_epoch_loss = epoch_loss;
        res.epochs_run = epoch + 1;

        // Val AC@1 saturates quickly on small validation slices; break ties
        // with the training loss so patience keeps running while the fit
        // still improves.
        double score = val_cases.empty()
                           ? -epoch_loss
                           : eval_ac1(val_cases, params, mcfg, mode) - 1e-4 * epoch_loss;
        if (score > best_score) {
            best_score = score;
            best = params;
            best_epoch = epoch;
        }
        if (epoch - best_epoch >= tcfg.patience) break;
    }
    res.params = std::move(best);
    res.best_val_ac1 = val_cases.empty() ? 0.0 : best_score;
    return res;
}

Checkpoint make_checkpoint(const Dataset& dataset, const PreparedDataset& prep,
                           const ModelConfig& mcfg, const CRDConfig& ccfg,
                           const TrainConfig& tcfg, ModelParams params) {
    Checkpoint ck;
    ck.model_cfg = mcfg;
    ck.crd_cfg = ccfg;
    ck.train_cfg = tcfg;
    ck.params = std::move(params);
    ck.feat_norm = prep.feat_norm;
    ck.edge_norm = prep.edge_norm;
    ck.schema = prep.schema;
    for (const auto& s : dataset.services) ck.services.push_back(s.name);
    ck.static_edges = prep.static_edges;
    return ck;
}

}  // namespace

TrainResult train(const Dataset& dataset, const ModelConfig& mcfg, const CRDConfig& ccfg,
                  const TrainConfig& tcfg, const std::optional<fs::path>& out_dir) {
    mcfg.validate();
    ccfg.validate();
    tcfg.validate();
    PreparedDataset prep = prepare_dataset(dataset, tcfg, ccfg, tcfg.ablation);

    std::ofstream log_file;
    std::ostream* log = nullptr;
    if (out_dir) {
        fs::create_directories(*out_dir);
        log_file.open(*out_dir / "training_log.csv");
        log_file << "step,case_id,ce,tcd,sco,total\n";
        log = &log_file;
    }
    TrainOnPreparedResult r = train_on_prepared(prep, mcfg, ccfg, tcfg, log);

    TrainResult out;
    out.checkpoint = make_checkpoint(dataset, prep, mcfg, ccfg, tcfg, std::move(r.params));
    out.best_val_ac1 = r.best_val_ac1;
    out.epochs_run = r.epochs_run;
    out.first_epoch_loss = r.first_epoch_loss;
    out.last_epoch_loss = r.last_epoch_loss;
    if (out_dir) {
        out.checkpoint.save(*out_dir / "checkpoint.json");
        out.checkpoint.feat_norm.save(*out_dir / "normalizer.json");
    }
    return out;
}

// --- inference and metrics --------------------------------------------------

std::vector<int> rank_scores(const Eigen::VectorXd& scores) {
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (scores(a) != scores(b)) return scores(a) > scores(b);
        return a < b;  // ties break by ascending service index
    });
    return order;
}

ScoreVector infer_prepared(const Checkpoint& ckpt, const PreparedCase& pc) {
    ServiceEmbeddings e = forward(pc.fault_window, pc.fault_snapshot, ckpt.params, ckpt.model_cfg,
                                  gat_mode_of(ckpt.train_cfg.ablation));
    ScoreVector sv;
    sv.scores = e.scores;
    sv.ranking = rank_scores(e.scores);
    return sv;
}

ScoreVector infer(const Checkpoint& ckpt, const Dataset& dataset, const FaultCase& fc) {
    if (static_cast<int>(ckpt.services.size()) != dataset.n_services())
        throw CheckpointMismatch("checkpoint trained on a different service count");
    for (int i = 0; i < dataset.n_services(); ++i)
        if (dataset.services[i].name != ckpt.services[i])
            throw CheckpointMismatch("checkpoint service set differs at index " +
                                     std::to_string(i));

    AlignedCase ac = align_case(dataset, fc, ckpt.schema);
    SegmentedWindows seg = segment_windows(ac, fc, ckpt.train_cfg.window_len);
    PreparedCase pc;
    pc.case_id = fc.case_id;
    pc.root = dataset.index_of(fc.root_cause);
    pc.fault_window = std::move(seg.fault_window);
    if (ckpt.train_cfg.ablation == Ablation::StaticGraph)
        pc.fault_snapshot = build_static_snapshot(ckpt.static_edges, dataset.n_services());
    else
        pc.fault_snapshot = build_snapshot(ac.telemetry.traces, pc.fault_window.grid,
                                           dataset.n_services(), ckpt.edge_norm,
                                           ckpt.train_cfg.alpha);
    apply_normalizer(pc.fault_window, ckpt.feat_norm);
    return infer_prepared(ckpt, pc);
}

EvalReport evaluate(const std::vector<std::pair<std::vector<int>, int>>& rankings,
                    const std::vector<std::string>& case_ids) {
    if (rankings.empty()) throw EmptyInput("evaluate: no rankings");
    double n = static_cast<double>(rankings.size());
    std::map<int, double> ac_all;  // k -> hits
    double mrr = 0.0;
    EvalReport rep;
    for (size_t i = 0; i < rankings.size(); ++i) {
        const auto& [ranking, root] = rankings[i];
        auto it = std::find(ranking.begin(), ranking.end(), root);
        if (it == ranking.end())
            throw RootNotRanked("evaluate: true root missing from ranking of case " +
                                std::to_string(i));
        int rank = static_cast<int>(it - ranking.begin()) + 1;
        for (int k = 1; k <= 5; ++k)
            if (rank <= k) ac_all[k] += 1.0;
        mrr += 1.0 / rank;
        rep.per_case.emplace_back(i < case_ids.size() ? case_ids[i] : "case#" + std::to_string(i),
                                  rank);
    }
    for (int k = 1; k <= 5; ++k) rep.avg5 += ac_all[k] / n;
    rep.avg5 /= 5.0;
    for (int k : {1, 3, 5}) rep.ac[k] = ac_all[k] / n;
    rep.mrr = mrr / n;
    return rep;
}

std::vector<std::pair<Ablation, EvalReport>> run_ablation_suite(
    const Dataset& dataset, const ModelConfig& mcfg, const CRDConfig& ccfg,
    const TrainConfig& tcfg, const std::optional<fs::path>& out_dir) {
    std::vector<std::pair<Ablation, EvalReport>> out;
    for (Ablation a : {Ablation::Full, Ablation::NoTcd, Ablation::NoSco, Ablation::VanillaGat,
                       Ablation::StaticGraph}) {
        TrainConfig variant = tcfg;
        variant.ablation = a;
        PreparedDataset prep = prepare_dataset(dataset, variant, ccfg, a);
        TrainOnPreparedResult r = train_on_prepared(prep, mcfg, ccfg, variant, nullptr);
        Checkpoint ck = make_checkpoint(dataset, prep, mcfg, ccfg, variant, std::move(r.params));

        std::vector<std::pair<std::vector<int>, int>> rankings;
        std::vector<std::string> ids;
        for (const auto& pc : prep.cases) {
            if (pc.split != SplitTag::Test) continue;
            rankings.emplace_back(infer_prepared(ck, pc).ranking, pc.root);
            ids.push_back(pc.case_id);
        }
        out.emplace_back(a, evaluate(rankings, ids));
    }
    if (out_dir) {
        fs::create_directories(*out_dir);
        std::ofstream f(*out_dir / "ablation_table.md");
        f << render_ablation_table(out);
    }
    return out;
}

// --- reports ----------------------------------------------------------------

std::string render_eval_report_json(const EvalReport& rep) {
    json j;
    j["AC@1"] = rep.ac.at(1);
    j["AC@3"] = rep.ac.at(3);
    j["AC@5"] = rep.ac.at(5);
    j["Avg@5"] = rep.avg5;
    j["MRR"] = rep.mrr;
    json per = json::array();
    for (const auto& [id, rank] : rep.per_case) per.push_back({{"case_id", id}, {"rank", rank}});
    j["per_case"] = per;
    return j.dump(2);
}

std::string render_ablation_table(const std::vector<std::pair<Ablation, EvalReport>>& rows) {
    std::ostringstream os;
    os << "| Variant | AC@1 | AC@3 | AC@5 | Avg@5 | MRR |\n";
    os << "|---|---|---|---|---|---|\n";
    os.setf(std::ios::fixed);
    os.precision(3);
    for (const auto& [a, rep] : rows)
        os << "| " << ablation_name(a) << " | " << rep.ac.at(1) << " | " << rep.ac.at(3) << " | "
           << rep.ac.at(5) << " | " << rep.avg5 << " | " << rep.mrr << " |\n";
    return os.str();
}

// --- checkpoint serialization -----------------------------------------------

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (long i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (long j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    long rows = static_cast<long>(j.size());
    long cols = rows > 0 ? static_cast<long>(j[0].size()) : 0;
    Eigen::MatrixXd m(rows, cols);
    for (long i = 0; i < rows; ++i)
        for (long c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    return m;
}

}  // namespace

void Checkpoint::save(const fs::path& path) const {
    json j;
    j["format_version"] = 1;
    j["model"] = {{"d_temp", model_cfg.d_temp},
                  {"n_heads", model_cfg.n_heads},
                  {"n_transformer_layers", model_cfg.n_transformer_layers},
                  {"ffn_hidden", model_cfg.ffn_hidden},
                  {"n_gat_layers", model_cfg.n_gat_layers},
                  {"d_spat", model_cfg.d_spat},
                  {"mlp_hidden", model_cfg.mlp_hidden},
                  {"dropout", model_cfg.dropout},
                  {"seed", model_cfg.seed}};
    j["crd"] = {{"delta", crd_cfg.delta},
                {"margin_m", crd_cfg.margin_m},
                {"lambda1", crd_cfg.lambda1},
                {"lambda2", crd_cfg.lambda2},
                {"tcd_sign", crd_cfg.tcd_sign == TcdSign::Prose ? "prose" : "literal"},
                {"affected_hops", crd_cfg.affected_hops}};
    j["train"] = {{"learning_rate", train_cfg.learning_rate},
                  {"epochs", train_cfg.epochs},
                  {"batch_size", train_cfg.batch_size},
                  {"patience", train_cfg.patience},
                  {"seed", train_cfg.seed},
                  {"ablation", ablation_name(train_cfg.ablation)},
                  {"window_len", train_cfg.window_len},
                  {"alpha", train_cfg.alpha},
                  {"val_fraction", train_cfg.val_fraction}};
    json params_json = json::array();
    for (const auto& [name, m] : params.entries)
        params_json.push_back({{"name", name}, {"data", matrix_to_json(m)}});
    j["params"] = params_json;
    j["feature_normalizer"] = {{"feature_names", feat_norm.feature_names},
                               {"min", feat_norm.min},
                               {"max", feat_norm.max}};
    json en = json::array();
    for (const auto& [edge, mm] : edge_norm.per_edge)
        en.push_back({edge.first, edge.second, mm.first, mm.second});
    j["edge_normalizer"] = {{"per_edge", en},
                            {"global_min", edge_norm.global_min},
                            {"global_max", edge_norm.global_max},
                            {"fitted", edge_norm.fitted}};
    j["metric_names"] = schema.metric_names;
    j["services"] = services;
    json se = json::array();
    for (const auto& [a, b] : static_edges) se.push_back({a, b});
    j["static_edges"] = se;

    std::ofstream out(path);
    if (!out) throw MissingFile("cannot write checkpoint " + path.string());
    out << j.dump() << "\n";
}

Checkpoint Checkpoint::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile("cannot open checkpoint " + path.string());
    json j;
    in >> j;
    Checkpoint ck;
    const auto& m = j.at("model");
    ck.model_cfg.d_temp = m.at("d_temp");
    ck.model_cfg.n_heads = m.at("n_heads");
    ck.model_cfg.n_transformer_layers = m.at("n_transformer_layers");
    ck.model_cfg.ffn_hidden = m.at("ffn_hidden");
    ck.model_cfg.n_gat_layers = m.at("n_gat_layers");
    ck.model_cfg.d_spat = m.at("d_spat");
    ck.model_cfg.mlp_hidden = m.at("mlp_hidden");
    ck.model_cfg.dropout = m.at("dropout");
    ck.model_cfg.seed = m.at("seed");
    const auto& c = j.at("crd");
    ck.crd_cfg.delta = c.at("delta");
    ck.crd_cfg.margin_m = c.at("margin_m");
    ck.crd_cfg.lambda1 = c.at("lambda1");
    ck.crd_cfg.lambda2 = c.at("lambda2");
    ck.crd_cfg.tcd_sign = c.at("tcd_sign") == "prose" ? TcdSign::Prose : TcdSign::Literal;
    ck.crd_cfg.affected_hops = c.at("affected_hops");
    const auto& t = j.at("train");
    ck.train_cfg.learning_rate = t.at("learning_rate");
    ck.train_cfg.epochs = t.at("epochs");
    ck.train_cfg.batch_size = t.at("batch_size");
    ck.train_cfg.patience = t.at("patience");
    ck.train_cfg.seed = t.at("seed");
    ck.train_cfg.ablation = parse_ablation(t.at("ablation"));
    ck.train_cfg.window_len = t.at("window_len");
    ck.train_cfg.alpha = t.at("alpha");
    ck.train_cfg.val_fraction = t.at("val_fraction");
    for (const auto& p : j.at("params"))
        ck.params.entries.emplace_back(p.at("name").get<std::string>(),
                                       matrix_from_json(p.at("data")));
    const auto& fn = j.at("feature_normalizer");
    ck.feat_norm.feature_names = fn.at("feature_names").get<std::vector<std::string>>();
    ck.feat_norm.min = fn.at("min").get<std::vector<double>>();
    ck.feat_norm.max = fn.at("max").get<std::vector<double>>();
    const auto& en = j.at("edge_normalizer");
    for (const auto& e : en.at("per_edge"))
        ck.edge_norm.per_edge[{e[0].get<int>(), e[1].get<int>()}] = {e[2].get<double>(),
                                                                     e[3].get<double>()};
    ck.edge_norm.global_min = en.at("global_min");
    ck.edge_norm.global_max = en.at("global_max");
    ck.edge_norm.fitted = en.at("fitted");
    ck.schema.metric_names = j.at("metric_names").get<std::vector<std::string>>();
    ck.services = j.at("services").get<std::vector<std::string>>();
    for (const auto& e : j.at("static_edges"))
        ck.static_edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    return ck;
}

}  // namespace rcakit
