#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "rcakit/core_types.hpp"

using namespace rcakit;
namespace fs = std::filesystem;

namespace {

struct Fixture {
    fs::path root;

    Fixture() {
        root = fs::temp_directory_path() / ("rcakit_ct_" + std::to_string(::getpid()) + "_" +
                                            std::to_string(counter()++));
        fs::create_directories(root);
    }
    ~Fixture() { fs::remove_all(root); }

    static int& counter() {
        static int c = 0;
        return c;
    }

    void file(const fs::path& rel, const std::string& content) {
        fs::path p = root / rel;
        fs::create_directories(p.parent_path());
        std::ofstream(p) << content;
    }

    void write_valid() {
        file("meta.json",
             R"({"services":["api","db","cache"],"interval_s":10,"fault_types":["cpu_hog"]})");
        file("cases/case-0001/ground_truth.json",
             R"({"root_cause":"db","fault_type":"cpu_hog","inject_start":1000,"inject_end":1100})");
        file("cases/case-0001/metrics.csv",
             "timestamp,service,metric_name,value\n"
             "900,api,cpu,0.5\n950,db,cpu,0.9\n1000,db,cpu,0.95\n");
        file("cases/case-0001/logs.csv",
             "timestamp,service,level,template_id\n"
             "905,api,INFO,tmpl-1\n1005,db,ERROR,tmpl-2\n");
        file("cases/case-0001/traces.csv",
             "timestamp,trace_id,span_id,caller,callee,latency_ms,status_code\n"
             "910,tr-1,sp-1,api,db,12.5,200\n1010,tr-2,sp-2,api,cache,3.0,200\n");
    }
};

}  // namespace

TEST_CASE("sampling grid bucket arithmetic") {
    SamplingGrid g{100, 10, 5};
    CHECK(g.at(0) == 100);
    CHECK(g.at(4) == 140);
    CHECK(g.end() == 150);
    CHECK(g.bucket_of(100) == 0);
    CHECK(g.bucket_of(109) == 0);
    CHECK(g.bucket_of(149) == 4);
    CHECK(g.bucket_of(150) == -1);
    CHECK(g.bucket_of(99) == -1);
    CHECK_THROWS_AS((SamplingGrid{0, 0, 5}.validate()), EmptyGrid);
    CHECK_THROWS_AS((SamplingGrid{0, 10, 0}.validate()), EmptyGrid);
}

TEST_CASE("aligned window indexing and service matrix") {
    AlignedWindow w;
    w.allocate(2, 3, 2);
    w.at(1, 2, 1) = 42.0;
    w.at(1, 0, 0) = 7.0;
    Eigen::MatrixXd m = w.service_matrix(1);
    CHECK(m.rows() == 3);
    CHECK(m.cols() == 2);
    CHECK(m(2, 1) == 42.0);
    CHECK(m(0, 0) == 7.0);
    CHECK(w.service_matrix(0).cwiseAbs().sum() == 0.0);
}

TEST_CASE("valid dataset loads cleanly") {
    Fixture fx;
    fx.write_valid();
    Dataset ds = validate_dataset(fx.root);
    REQUIRE(ds.n_services() == 3);
    CHECK(ds.index_of("db") == 1);
    CHECK(ds.interval_s == 10);
    REQUIRE(ds.cases.size() == 1);
    CHECK(ds.cases[0].case_id == "case-0001");
    CHECK(ds.cases[0].root_cause == "db");
    CHECK(ds.cases[0].inject_start == 1000);
    CHECK(ds.cases[0].split == SplitTag::Unassigned);
}

TEST_CASE("missing meta.json") {
    Fixture fx;
    CHECK_THROWS_AS(validate_dataset(fx.root), MissingFile);
}

TEST_CASE("ground truth naming a ghost service is a label violation") {
    Fixture fx;
    fx.write_valid();
    fx.file("cases/case-0001/ground_truth.json",
            R"({"root_cause":"ghost-svc","fault_type":"cpu_hog","inject_start":1000,"inject_end":1100})");
    CHECK_THROWS_AS(validate_dataset(fx.root), LabelViolation);
}

TEST_CASE("unknown fault type is a label violation") {
    Fixture fx;
    fx.write_valid();
    fx.file("cases/case-0001/ground_truth.json",
            R"({"root_cause":"db","fault_type":"disk_melt","inject_start":1000,"inject_end":1100})");
    CHECK_THROWS_AS(validate_dataset(fx.root), LabelViolation);
}

TEST_CASE("backwards timestamps are a clock violation") {
    Fixture fx;
    fx.write_valid();
    fx.file("cases/case-0001/metrics.csv",
            "timestamp,service,metric_name,value\n"
            "1000,db,cpu,0.9\n900,api,cpu,0.5\n");
    CHECK_THROWS_AS(validate_dataset(fx.root), ClockViolation);
}

TEST_CASE("schema violations: bad header, unknown service, self edge") {
    Fixture fx;
    fx.write_valid();
    fx.file("cases/case-0001/metrics.csv", "time,svc,name,val\n900,api,cpu,0.5\n");
    CHECK_THROWS_AS(validate_dataset(fx.root), SchemaViolation);

    fx.write_valid();
    fx.file("cases/case-0001/logs.csv",
            "timestamp,service,level,template_id\n905,nobody,INFO,t\n");
    CHECK_THROWS_AS(validate_dataset(fx.root), SchemaViolation);

    fx.write_valid();
    fx.file("cases/case-0001/traces.csv",
            "timestamp,trace_id,span_id,caller,callee,latency_ms,status_code\n"
            "910,tr,sp,api,api,1.0,200\n");
    CHECK_THROWS_AS(validate_dataset(fx.root), SchemaViolation);
}

TEST_CASE("report variant collects every issue with case and line info") {
    Fixture fx;
    fx.write_valid();
    fx.file("cases/case-0001/metrics.csv",
            "timestamp,service,metric_name,value\n"
            "900,ghost,cpu,0.5\n800,api,cpu,nan\n");
    Dataset ds;
    auto issues = validate_dataset_report(fx.root, ds);
    REQUIRE(issues.size() == 3);  // unknown service, clock, non-finite value
    for (const auto& i : issues) {
        CHECK(i.case_id == "case-0001");
        CHECK(i.line > 0);
        CHECK(i.format().find("case-0001") != std::string::npos);
    }
}

TEST_CASE("inverted injection interval is rejected") {
    Fixture fx;
    fx.write_valid();
    fx.file("cases/case-0001/ground_truth.json",
            R"({"root_cause":"db","fault_type":"cpu_hog","inject_start":1100,"inject_end":1000})");
    CHECK_THROWS_AS(validate_dataset(fx.root), SchemaViolation);
}
