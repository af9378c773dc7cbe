#include "rcakit/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rcakit/csv.hpp"
#include "rcakit/ingestion.hpp"

namespace rcakit {

namespace fs = std::filesystem;
using nlohmann::json;

std::string ValidationIssue::format() const {
    static const char* kinds[] = {"MissingFile", "SchemaViolation", "LabelViolation",
                                  "ClockViolation"};
    std::ostringstream os;
    os << kinds[static_cast<int>(kind)];
    if (!case_id.empty()) os << " [case " << case_id << "]";
    if (!file.empty()) {
        os << " " << file;
        if (line > 0) os << ":" << line;
    }
    os << ": " << message;
    return os.str();
}

namespace {

using Kind = ValidationIssue::Kind;

void push(std::vector<ValidationIssue>& issues, Kind kind, std::string case_id, std::string file,
          long line, std::string message) {
    issues.push_back({kind, std::move(case_id), std::move(file), line, std::move(message)});
}

bool parse_ts(const std::string& s, Timestamp& out) {
    try {
        // Sub-second data floors to whole seconds.
        out = static_cast<Timestamp>(std::floor(std::stod(s)));
        return true;
    } catch (...) {
        return false;
    }
}

// Checks one telemetry CSV: schema, known services, monotone clock.
void check_csv(const Dataset& ds, const std::string& case_id, const fs::path& path,
               const std::string& header, std::vector<ValidationIssue>& issues) {
    Timestamp prev = std::numeric_limits<Timestamp>::min();
    size_t ncols = csv::split_line(header).size();
    bool is_traces = path.filename() == "traces.csv";
    bool is_logs = path.filename() == "logs.csv";
    bool is_metrics = path.filename() == "metrics.csv";
    try {
        csv::for_each_row(path, header, [&](long line, const std::vector<std::string>& f) {
            if (f.size() != ncols) {
                push(issues, Kind::SchemaViolation, case_id, path.string(), line,
                     "expected " + std::to_string(ncols) + " columns, got " +
                         std::to_string(f.size()));
                return true;
            }
            Timestamp ts;
            if (!parse_ts(f[0], ts)) {
                push(issues, Kind::SchemaViolation, case_id, path.string(), line,
                     "bad timestamp '" + f[0] + "'");
                return true;
            }
            if (ts < prev)
                push(issues, Kind::ClockViolation, case_id, path.string(), line,
                     "timestamp " + std::to_string(ts) + " goes backwards (previous " +
                         std::to_string(prev) + ")");
            prev = ts;
            if (is_metrics || is_logs) {
                if (ds.index_of(f[1]) < 0)
                    push(issues, Kind::SchemaViolation, case_id, path.string(), line,
                         "unknown service '" + f[1] + "'");
            }
            if (is_metrics) {
                try {
                    if (!std::isfinite(std::stod(f[3]))) throw std::runtime_error("inf");
                } catch (...) {
                    push(issues, Kind::SchemaViolation, case_id, path.string(), line,
                         "non-finite metric value '" + f[3] + "'");
                }
            }
            if (is_logs) {
                try {
                    parse_log_level(f[2]);
                } catch (...) {
                    push(issues, Kind::SchemaViolation, case_id, path.string(), line,
                         "bad log level '" + f[2] + "'");
                }
            }
            if (is_traces) {
                if (ds.index_of(f[3]) < 0 || ds.index_of(f[4]) < 0)
                    push(issues, Kind::SchemaViolation, case_id, path.string(), line,
                         "unknown caller/callee '" + f[3] + "'/'" + f[4] + "'");
                else if (f[3] == f[4])
                    push(issues, Kind::SchemaViolation, case_id, path.string(), line,
                         "self-edge " + f[3] + "->" + f[4]);
                double lat;
                try {
                    lat = std::stod(f[5]);
                } catch (...) {
                    lat = -1;
                }
                if (!(lat >= 0.0) || !std::isfinite(lat))
                    push(issues, Kind::SchemaViolation, case_id, path.string(), line,
                         "bad latency '" + f[5] + "'");
            }
            return true;
        });
    } catch (const MissingFile& e) {
        push(issues, Kind::MissingFile, case_id, path.string(), 0, e.what());
    } catch (const SchemaViolation& e) {
        push(issues, Kind::SchemaViolation, case_id, path.string(), 0, e.what());
    }
}

}  // namespace

std::vector<ValidationIssue> validate_dataset_report(const fs::path& root_dir, Dataset& ds) {
    std::vector<ValidationIssue> issues;
    ds = Dataset{};
    ds.root_dir = root_dir;

    fs::path meta_path = root_dir / "meta.json";
    if (!fs::exists(meta_path)) {
        push(issues, Kind::MissingFile, "", meta_path.string(), 0, "meta.json not found");
        return issues;
    }
    json meta;
    try {
        std::ifstream in(meta_path);
        in >> meta;
        int idx = 0;
        for (const auto& s : meta.at("services")) {
            std::string name = s.get<std::string>();
            if (name.empty()) throw std::runtime_error("empty service name");
            if (ds.index_of(name) >= 0) throw std::runtime_error("duplicate service " + name);
            ds.services.push_back({name, idx++});
        }
        ds.interval_s = meta.at("interval_s").get<std::int64_t>();
        if (ds.interval_s <= 0) throw std::runtime_error("interval_s must be > 0");
        for (const auto& t : meta.at("fault_types")) ds.fault_types.push_back(t.get<std::string>());
    } catch (const std::exception& e) {
        push(issues, Kind::SchemaViolation, "", meta_path.string(), 0, e.what());
        return issues;
    }

    fs::path cases_dir = root_dir / "cases";
    if (!fs::exists(cases_dir)) {
        push(issues, Kind::MissingFile, "", cases_dir.string(), 0, "cases/ not found");
        return issues;
    }
    std::vector<fs::path> case_dirs;
    for (const auto& e : fs::directory_iterator(cases_dir))
        if (e.is_directory()) case_dirs.push_back(e.path());
    std::sort(case_dirs.begin(), case_dirs.end());

    for (const auto& dir : case_dirs) {
        std::string case_id = dir.filename().string();
        FaultCase fc;
        fc.case_id = case_id;
        fc.dir = dir;

        fs::path gt_path = dir / "ground_truth.json";
        if (!fs::exists(gt_path)) {
            push(issues, Kind::MissingFile, case_id, gt_path.string(), 0, "missing ground truth");
            continue;
        }
        try {
            json gt;
            std::ifstream in(gt_path);
            in >> gt;
            fc.root_cause = gt.at("root_cause").get<std::string>();
            fc.fault_type = gt.at("fault_type").get<std::string>();
            fc.inject_start = gt.at("inject_start").get<Timestamp>();
            fc.inject_end = gt.at("inject_end").get<Timestamp>();
        } catch (const std::exception& e) {
            push(issues, Kind::SchemaViolation, case_id, gt_path.string(), 0, e.what());
            continue;
        }
        if (ds.index_of(fc.root_cause) < 0)
            push(issues, Kind::LabelViolation, case_id, gt_path.string(), 0,
                 "unknown root_cause '" + fc.root_cause + "'");
        if (std::find(ds.fault_types.begin(), ds.fault_types.end(), fc.fault_type) ==
            ds.fault_types.end())
            push(issues, Kind::LabelViolation, case_id, gt_path.string(), 0,
                 "unknown fault_type '" + fc.fault_type + "'");
        if (!(fc.inject_start < fc.inject_end))
            push(issues, Kind::SchemaViolation, case_id, gt_path.string(), 0,
                 "inject_start must precede inject_end");

        check_csv(ds, case_id, dir / "metrics.csv", "timestamp,service,metric_name,value", issues);
        check_csv(ds, case_id, dir / "logs.csv", "timestamp,service,level,template_id", issues);
        check_csv(ds, case_id, dir / "traces.csv",
                  "timestamp,trace_id,span_id,caller,callee,latency_ms,status_code", issues);

        ds.cases.push_back(std::move(fc));
    }
    return issues;
}

Dataset validate_dataset(const fs::path& root_dir) {
    Dataset ds;
    auto issues = validate_dataset_report(root_dir, ds);
    if (issues.empty()) return ds;

    std::ostringstream os;
    os << issues.size() << " validation issue(s):";
    for (const auto& i : issues) os << "\n  " << i.format();
    switch (issues.front().kind) {
        case ValidationIssue::Kind::MissingFile: throw MissingFile(os.str());
        case ValidationIssue::Kind::LabelViolation: throw LabelViolation(os.str());
        case ValidationIssue::Kind::ClockViolation: throw ClockViolation(os.str());
        default: throw SchemaViolation(os.str());
    }
}

}  // namespace rcakit
