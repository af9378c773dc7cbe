#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rcakit/core_types.hpp"
#include "rcakit/crd.hpp"
#include "rcakit/dyngraph.hpp"
#include "rcakit/ingestion.hpp"
#include "rcakit/model.hpp"

namespace rcakit {

enum class Ablation { Full, NoTcd, NoSco, VanillaGat, StaticGraph };

const char* ablation_name(Ablation a);
Ablation parse_ablation(const std::string& s);

struct TrainConfig {
    double learning_rate = 1e-3;
    int epochs = 80;
    int batch_size = 8;
    int patience = 12;
    std::uint64_t seed = 7;
    Ablation ablation = Ablation::Full;
    int window_len = 12;       // T, grid steps per window
    double alpha = 0.5;        // Eq.-style edge weight balance
    double val_fraction = 0.1; // held-out slice of train for early stopping

    void validate() const;
};

struct EvalReport {
    std::map<int, double> ac;  // k in {1,3,5}
    double avg5 = 0.0;
    double mrr = 0.0;
    std::vector<std::pair<std::string, int>> per_case;  // (case_id, rank of true root)
};

// Assigns SplitTag per case: per-(fault_type, root) stratum, train proportion
// within one case of the global fraction; singleton strata go to train.
void stratified_split(Dataset& dataset, double train_fraction, std::uint64_t seed);

// Everything needed to run inference later, serialized as one JSON file.
struct Checkpoint {
    ModelConfig model_cfg;
    CRDConfig crd_cfg;
    TrainConfig train_cfg;
    ModelParams params;
    FeatureNormalizer feat_norm;
    EdgeNormalizer edge_norm;
    FeatureSchema schema;
    std::vector<std::string> services;
    std::vector<std::pair<int, int>> static_edges;  // train-edge union (static ablation)

    void save(const std::filesystem::path& path) const;
    static Checkpoint load(const std::filesystem::path& path);
};

// One case, fully aligned, windowed, normalized and graph-built.
struct PreparedCase {
    std::string case_id;
    std::string fault_type;
    int root = -1;
    SplitTag split = SplitTag::Unassigned;
    AlignedWindow fault_window;
    AlignedWindow normal_window;
    CallGraphSnapshot fault_snapshot;
    CallGraphSnapshot normal_snapshot;
    std::set<int> affected;  // P(r) from the fault snapshot
};

// Fits normalizers on the train split only, then materializes every case.
// Exposed for tests; train() and evaluation go through it.
struct PreparedDataset {
    std::vector<PreparedCase> cases;
    FeatureNormalizer feat_norm;
    EdgeNormalizer edge_norm;
    FeatureSchema schema;
    std::vector<std::pair<int, int>> static_edges;
};
PreparedDataset prepare_dataset(const Dataset& dataset, const TrainConfig& tcfg,
                                const CRDConfig& crd_cfg, Ablation ablation);

struct TrainResult {
    Checkpoint checkpoint;
    double best_val_ac1 = 0.0;
    int epochs_run = 0;
    double first_epoch_loss = 0.0;
    double last_epoch_loss = 0.0;
};

// Minimizes L_CE + lambda1*L_TCD + lambda2*L_rank over the fault windows of
// the train split with Adam; early-stops on validation AC@1.  Writes
// `training_log.csv` (step,case_id,ce,tcd,sco,total) into out_dir when given.
TrainResult train(const Dataset& dataset, const ModelConfig& mcfg, const CRDConfig& ccfg,
                  const TrainConfig& tcfg,
                  const std::optional<std::filesystem::path>& out_dir = std::nullopt);

struct ScoreVector {
    Eigen::VectorXd scores;
    std::vector<int> ranking;  // service indices, best first; ties by ascending index
};

ScoreVector infer(const Checkpoint& ckpt, const Dataset& dataset, const FaultCase& fc);
ScoreVector infer_prepared(const Checkpoint& ckpt, const PreparedCase& pc);

std::vector<int> rank_scores(const Eigen::VectorXd& scores);

EvalReport evaluate(const std::vector<std::pair<std::vector<int>, int>>& rankings,
                    const std::vector<std::string>& case_ids = {});

// Trains + evaluates every variant on a shared split and seed.
std::vector<std::pair<Ablation, EvalReport>> run_ablation_suite(
    const Dataset& dataset, const ModelConfig& mcfg, const CRDConfig& ccfg,
    const TrainConfig& tcfg, const std::optional<std::filesystem::path>& out_dir = std::nullopt);

// Report helpers used by the CLI.
std::string render_eval_report_json(const EvalReport& report);
std::string render_ablation_table(const std::vector<std::pair<Ablation, EvalReport>>& rows);

}  // namespace rcakit
