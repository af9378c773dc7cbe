// rcakit command line: simulate | validate | train | evaluate | ablate |
// sweep | dump-graph.  Exit codes: 0 success, 1 data/config error, 2 usage.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "rcakit/pipeline.hpp"
#include "rcakit/simgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rcakit;

namespace {

struct RunOptions {
    ModelConfig model;
    CRDConfig crd;
    TrainConfig train;
    double train_fraction = 0.8;
    std::uint64_t split_seed = 7;
};

// Applies a JSON config file; every key must be known.
void apply_config_file(RunOptions& o, const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("bad JSON in " + path.string() + ": " + e.what());
    }
    for (const auto& [key, val] : j.items()) {
        if (key == "learning_rate") o.train.learning_rate = val;
        else if (key == "epochs") o.train.epochs = val;
        else if (key == "batch_size") o.train.batch_size = val;
        else if (key == "patience") o.train.patience = val;
        else if (key == "seed") o.train.seed = val;
        else if (key == "ablation") o.train.ablation = parse_ablation(val.get<std::string>());
        else if (key == "window_len") o.train.window_len = val;
        else if (key == "alpha") o.train.alpha = val;
        else if (key == "val_fraction") o.train.val_fraction = val;
        else if (key == "train_fraction") o.train_fraction = val;
        else if (key == "split_seed") o.split_seed = val;
        else if (key == "d_temp") o.model.d_temp = val;
        else if (key == "n_heads") o.model.n_heads = val;
        else if (key == "n_transformer_layers") o.model.n_transformer_layers = val;
        else if (key == "ffn_hidden") o.model.ffn_hidden = val;
        else if (key == "n_gat_layers") o.model.n_gat_layers = val;
        else if (key == "d_spat") o.model.d_spat = val;
        else if (key == "mlp_hidden") o.model.mlp_hidden = val;
        else if (key == "dropout") o.model.dropout = val;
        else if (key == "delta") o.crd.delta = val;
        else if (key == "margin_m") o.crd.margin_m = val;
        else if (key == "lambda1") o.crd.lambda1 = val;
        else if (key == "lambda2") o.crd.lambda2 = val;
        else if (key == "affected_hops") o.crd.affected_hops = val;
        else if (key == "tcd_sign") {
            std::string s = val.get<std::string>();
            if (s == "prose") o.crd.tcd_sign = TcdSign::Prose;
            else if (s == "literal") o.crd.tcd_sign = TcdSign::Literal;
            else throw ConfigError("tcd_sign must be 'prose' or 'literal'");
        } else {
            throw ConfigError("unknown config key '" + key + "' in " + path.string());
        }
    }
}

json resolved_config(const RunOptions& o) {
    return json{{"learning_rate", o.train.learning_rate},
                {"epochs", o.train.epochs},
                {"batch_size", o.train.batch_size},
                {"patience", o.train.patience},
                {"seed", o.train.seed},
                {"ablation", ablation_name(o.train.ablation)},
                {"window_len", o.train.window_len},
                {"alpha", o.train.alpha},
                {"val_fraction", o.train.val_fraction},
                {"train_fraction", o.train_fraction},
                {"split_seed", o.split_seed},
                {"d_temp", o.model.d_temp},
                {"n_heads", o.model.n_heads},
                {"n_transformer_layers", o.model.n_transformer_layers},
                {"ffn_hidden", o.model.ffn_hidden},
                {"n_gat_layers", o.model.n_gat_layers},
                {"d_spat", o.model.d_spat},
                {"mlp_hidden", o.model.mlp_hidden},
                {"dropout", o.model.dropout},
                {"delta", o.crd.delta},
                {"margin_m", o.crd.margin_m},
                {"lambda1", o.crd.lambda1},
                {"lambda2", o.crd.lambda2},
                {"affected_hops", o.crd.affected_hops},
                {"tcd_sign", o.crd.tcd_sign == TcdSign::Prose ? "prose" : "literal"}};
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw MissingFile("cannot write " + path.string());
    out << text;
}

Dataset load_split_dataset(const fs::path& data, const RunOptions& o) {
    Dataset ds = validate_dataset(data);
    stratified_split(ds, o.train_fraction, o.split_seed);
    return ds;
}

EvalReport evaluate_test_split(const Checkpoint& ck, const Dataset& ds) {
    std::vector<std::pair<std::vector<int>, int>> rankings;
    std::vector<std::string> ids;
    for (const auto& fc : ds.cases) {
        if (fc.split != SplitTag::Test) continue;
        rankings.emplace_back(infer(ck, ds, fc).ranking, ds.index_of(fc.root_cause));
        ids.push_back(fc.case_id);
    }
    return evaluate(rankings, ids);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"root cause analysis toolkit"};
    app.require_subcommand(1);

    // shared training/eval options
    RunOptions opt;
    std::string data_dir, out_dir, config_path, checkpoint_path, case_id;
    std::string ablation_str, param_name = "alpha", values_str;
    bool seed_given = false;

    auto add_run_options = [&](CLI::App* cmd) {
        cmd->add_option("--data", data_dir, "dataset directory")->required();
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--seed", opt.train.seed, "training seed");
        cmd->add_option("--epochs", opt.train.epochs, "max epochs");
        cmd->add_option("--batch-size", opt.train.batch_size, "cases per optimizer step");
        cmd->add_option("--lr", opt.train.learning_rate, "learning rate");
        cmd->add_option("--patience", opt.train.patience, "early-stop patience");
        cmd->add_option("--window", opt.train.window_len, "window length T");
        cmd->add_option("--alpha", opt.train.alpha, "edge weight balance");
        cmd->add_option("--train-fraction", opt.train_fraction, "train split fraction");
        cmd->add_option("--split-seed", opt.split_seed, "split shuffle seed");
        cmd->add_option("--lambda1", opt.crd.lambda1, "TCD loss weight");
        cmd->add_option("--lambda2", opt.crd.lambda2, "ranking loss weight");
    };

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
    std::string scenario_path;
    simgen::ScenarioConfig scen;
    int sim_cases = -1, sim_services = -1;
    std::uint64_t sim_seed = 0;
    sim->add_option("--scenario", scenario_path, "scenario JSON file");
    sim->add_option("--out", out_dir, "output dataset directory")->required();
    sim->add_option("--cases", sim_cases, "number of cases (auto plan)");
    sim->add_option("--services", sim_services, "number of services");
    auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "scenario seed");

    // validate
    auto* val = app.add_subcommand("validate", "check a dataset directory");
    val->add_option("data", data_dir, "dataset directory")->required();

    // train
    auto* tr = app.add_subcommand("train", "train a model");
    add_run_options(tr);
    tr->add_option("--out", out_dir, "output directory")->required();
    tr->add_option("--ablation", ablation_str, "full|no_tcd|no_sco|vanilla_gat|static_graph");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "evaluate a checkpoint on the test split");
    add_run_options(ev);
    ev->add_option("--checkpoint", checkpoint_path, "checkpoint JSON")->required();
    ev->add_option("--out", out_dir, "output directory")->required();

    // ablate
    auto* ab = app.add_subcommand("ablate", "train and evaluate every variant");
    add_run_options(ab);
    ab->add_option("--out", out_dir, "output directory")->required();

    // sweep
    auto* sw = app.add_subcommand("sweep", "sweep one config value");
    add_run_options(sw);
    sw->add_option("--out", out_dir, "output directory")->required();
    sw->add_option("--param", param_name, "alpha|lambda1|lambda2|lr");
    sw->add_option("--values", values_str, "comma-separated values")->required();

    // dump-graph
    auto* dg = app.add_subcommand("dump-graph", "print the fault-window call graph of a case");
    dg->add_option("--data", data_dir, "dataset directory")->required();
    dg->add_option("--case", case_id, "case id")->required();
    dg->add_option("--window", opt.train.window_len, "window length T");
    dg->add_option("--alpha", opt.train.alpha, "edge weight balance");
    dg->add_option("--out", out_dir, "output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 2;
    }

    try {
        if (!config_path.empty()) apply_config_file(opt, config_path);
        if (!ablation_str.empty()) opt.train.ablation = parse_ablation(ablation_str);
        (void)seed_given;

        if (sim->parsed()) {
            if (!scenario_path.empty()) scen = simgen::ScenarioConfig::from_json_file(scenario_path);
            if (sim_cases >= 0) scen.auto_cases = sim_cases;
            if (sim_services >= 0) scen.n_services = sim_services;
            if (sim_seed_opt->count() > 0) scen.seed = sim_seed;
            simgen::emit_dataset(scen, out_dir);
            write_text(fs::path(out_dir) / "scenario_resolved.json", scen.to_json());
            std::cout << "wrote " << scen.auto_cases + static_cast<int>(scen.fault_plan.size())
                      << " case plan entries to " << out_dir << "\n";
        } else if (val->parsed()) {
            Dataset ds;
            auto issues = validate_dataset_report(data_dir, ds);
            for (const auto& i : issues) std::cout << i.format() << "\n";
            std::cout << (issues.empty() ? "OK" : "INVALID") << ": " << ds.cases.size()
                      << " case(s), " << ds.n_services() << " service(s)\n";
            return issues.empty() ? 0 : 1;
        } else if (tr->parsed()) {
            Dataset ds = load_split_dataset(data_dir, opt);
            fs::create_directories(out_dir);
            write_text(fs::path(out_dir) / "config_resolved.json", resolved_config(opt).dump(2));
            TrainResult res = train(ds, opt.model, opt.crd, opt.train, fs::path(out_dir));
            EvalReport rep = evaluate_test_split(res.checkpoint, ds);
            write_text(fs::path(out_dir) / "report.json", render_eval_report_json(rep));
            std::cout << "epochs=" << res.epochs_run << " best_val_ac1=" << res.best_val_ac1
                      << " test_ac1=" << rep.ac[1] << " mrr=" << rep.mrr << "\n";
        } else if (ev->parsed()) {
            Dataset ds = load_split_dataset(data_dir, opt);
            Checkpoint ck = Checkpoint::load(checkpoint_path);
            EvalReport rep = evaluate_test_split(ck, ds);
            fs::create_directories(out_dir);
            write_text(fs::path(out_dir) / "report.json", render_eval_report_json(rep));
            write_text(fs::path(out_dir) / "config_resolved.json", resolved_config(opt).dump(2));
            std::cout << render_eval_report_json(rep) << "\n";
        } else if (ab->parsed()) {
            Dataset ds = load_split_dataset(data_dir, opt);
            fs::create_directories(out_dir);
            write_text(fs::path(out_dir) / "config_resolved.json", resolved_config(opt).dump(2));
            auto rows = run_ablation_suite(ds, opt.model, opt.crd, opt.train, fs::path(out_dir));
            std::cout << render_ablation_table(rows);
        } else if (sw->parsed()) {
            Dataset ds = load_split_dataset(data_dir, opt);
            fs::create_directories(out_dir);
            std::ofstream csv(fs::path(out_dir) / "sweep.csv");
            csv << "param,value,ac1,ac3,ac5,avg5,mrr\n";
            std::stringstream ss(values_str);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                double v = std::stod(tok);
                RunOptions run = opt;
                if (param_name == "alpha") run.train.alpha = v;
                else if (param_name == "lambda1") run.crd.lambda1 = v;
                else if (param_name == "lambda2") run.crd.lambda2 = v;
                else if (param_name == "lr") run.train.learning_rate = v;
                else throw ConfigError("unknown sweep param '" + param_name + "'");
                TrainResult res = train(ds, run.model, run.crd, run.train);
                EvalReport rep = evaluate_test_split(res.checkpoint, ds);
                csv << param_name << "," << v << "," << rep.ac[1] << "," << rep.ac[3] << ","
                    << rep.ac[5] << "," << rep.avg5 << "," << rep.mrr << "\n";
                std::cout << param_name << "=" << v << " ac1=" << rep.ac[1] << " mrr=" << rep.mrr
                          << "\n";
            }
            write_text(fs::path(out_dir) / "config_resolved.json", resolved_config(opt).dump(2));
        } else if (dg->parsed()) {
            Dataset ds = validate_dataset(data_dir);
            const FaultCase* fc = nullptr;
            for (const auto& c : ds.cases)
                if (c.case_id == case_id) fc = &c;
            if (!fc) throw ConfigError("no case '" + case_id + "' in " + data_dir);
            FeatureSchema schema = scan_feature_schema(ds);
            AlignedCase ac = align_case(ds, *fc, schema);
            SegmentedWindows seg = segment_windows(ac, *fc, opt.train.window_len);
            EdgeNormalizer en;
            for (const auto* g : {&seg.normal_window.grid, &seg.fault_window.grid})
                for (const auto& [edge, cr] : aggregate_edges(ac.telemetry.traces, *g))
                    en.observe(edge.first, edge.second, static_cast<double>(cr.first));
            CallGraphSnapshot snap = build_snapshot(ac.telemetry.traces, seg.fault_window.grid,
                                                    ds.n_services(), en, opt.train.alpha);
            json j;
            j["case_id"] = fc->case_id;
            j["window_start"] = seg.fault_window.grid.start;
            j["window_end"] = seg.fault_window.grid.end();
            json edges = json::array();
            for (const auto& [edge, st] : snap.edges)
                edges.push_back({{"caller", ds.services[edge.first].name},
                                 {"callee", ds.services[edge.second].name},
                                 {"count", st.count},
                                 {"error_rate", st.error_rate},
                                 {"weight", st.weight}});
            j["edges"] = edges;
            std::string text = j.dump(2);
            if (out_dir.empty()) std::cout << text << "\n";
            else write_text(out_dir, text);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
