#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "rcakit/ingestion.hpp"

using namespace rcakit;
namespace fs = std::filesystem;

TEST_CASE("log level round trip") {
    for (const char* name : {"DEBUG", "INFO", "WARN", "ERROR", "FATAL"})
        CHECK(log_level_name(parse_log_level(name)) == std::string(name));
    CHECK_THROWS_AS(parse_log_level("TRACE"), SchemaViolation);
}

TEST_CASE("metric resampling: per-bucket mean, carry-forward, zero before first") {
    SamplingGrid grid{100, 10, 5};  // [100, 150)
    std::vector<RawMetricRecord> recs = {
        {112, 0, "cpu", 2.0}, {115, 0, "cpu", 4.0},  // bucket 1 -> mean 3
        {131, 0, "cpu", 7.0},                        // bucket 3
        {104, 1, "mem", 1.0},
    };
    auto series = resample_metrics(recs, grid, 2);
    const auto& cpu = series[{0, "cpu"}];
    REQUIRE(cpu.size() == 5);
    CHECK(cpu[0] == 0.0);                            // before first observation
    CHECK(cpu[1] == doctest::Approx(3.0));           // in-bucket mean
    CHECK(cpu[2] == doctest::Approx(3.0));           // carried forward
    CHECK(cpu[3] == doctest::Approx(7.0));
    CHECK(cpu[4] == doctest::Approx(7.0));
    const auto& mem = series[{1, "mem"}];
    CHECK(mem[0] == doctest::Approx(1.0));
    CHECK(mem[4] == doctest::Approx(1.0));
}

TEST_CASE("log features: total plus per-level counts") {
    SamplingGrid grid{0, 10, 2};
    std::vector<RawLogRecord> recs = {
        {1, 0, LogLevel::Info, "a"},  {2, 0, LogLevel::Error, "b"},
        {3, 0, LogLevel::Error, "c"}, {11, 0, LogLevel::Debug, "d"},
        {5, 1, LogLevel::Fatal, "e"},
    };
    auto feats = extract_log_features(recs, grid, 2);
    // layout: [total, DEBUG, INFO, WARN, ERROR, FATAL]
    CHECK(feats[0][0][0] == 3.0);  // svc0 total, bucket0
    CHECK(feats[0][2][0] == 1.0);  // INFO
    CHECK(feats[0][4][0] == 2.0);  // ERROR
    CHECK(feats[0][0][1] == 1.0);
    CHECK(feats[0][1][1] == 1.0);  // DEBUG
    CHECK(feats[1][5][0] == 1.0);  // FATAL of svc1
    CHECK(feats[1][0][1] == 0.0);
}

TEST_CASE("trace features attribute inbound stats to the callee") {
    SamplingGrid grid{0, 10, 2};
    std::vector<RawTraceRecord> recs = {
        {1, "t", 0, 1, 10.0, 200},
        {2, "t", 0, 1, 30.0, 503},
        {3, "t", 1, 0, 50.0, 404},
        {12, "t", 0, 1, 40.0, 200},
    };
    auto feats = extract_trace_features(recs, grid, 2);
    // layout: [latency_mean, count, error_rate]
    CHECK(feats[1][0][0] == doctest::Approx(20.0));
    CHECK(feats[1][1][0] == 2.0);
    CHECK(feats[1][2][0] == doctest::Approx(0.5));
    CHECK(feats[0][1][0] == 1.0);
    CHECK(feats[0][2][0] == 0.0);  // 404 is not an error by default
    CHECK(feats[1][0][1] == doctest::Approx(40.0));
    // opt-in extra error codes
    auto feats2 = extract_trace_features(recs, grid, 2, {404});
    CHECK(feats2[0][2][0] == doctest::Approx(1.0));
}

TEST_CASE("normalizer: min-max to [0,1], clamped, degenerate to 0") {
    AlignedWindow w;
    w.allocate(1, 3, 2);
    w.feature_names = {"metric.cpu", "metric.flat"};
    w.at(0, 0, 0) = 10.0;
    w.at(0, 1, 0) = 20.0;
    w.at(0, 2, 0) = 30.0;
    for (int t = 0; t < 3; ++t) w.at(0, t, 1) = 7.0;

    FeatureNormalizer norm = fit_normalizer({w});
    CHECK(norm.degenerate(1));

    AlignedWindow v = w;
    v.at(0, 0, 0) = 40.0;  // above the fitted max
    apply_normalizer(v, norm);
    CHECK(v.at(0, 0, 0) == 1.0);
    CHECK(v.at(0, 1, 0) == doctest::Approx(0.5));
    CHECK(v.at(0, 2, 0) == doctest::Approx(1.0));
    for (int t = 0; t < 3; ++t) CHECK(v.at(0, t, 1) == 0.0);

    auto tmp = fs::temp_directory_path() / "rcakit_norm_test.json";
    norm.save(tmp);
    FeatureNormalizer back = FeatureNormalizer::load(tmp);
    CHECK(back.feature_names == norm.feature_names);
    CHECK(back.min == norm.min);
    CHECK(back.max == norm.max);
    fs::remove(tmp);
}

TEST_CASE("fit_normalizer rejects empty input") {
    CHECK_THROWS_AS(fit_normalizer({}), EmptyInput);
}

TEST_CASE("feature schema layout is metrics then logs then traces") {
    FeatureSchema s;
    s.metric_names = {"cpu", "mem"};
    auto names = s.feature_names();
    REQUIRE(static_cast<int>(names.size()) == s.n_features());
    CHECK(names[0] == "metric.cpu");
    CHECK(names[1] == "metric.mem");
    CHECK(names[2] == "log.total");
    CHECK(names[3] == "log.DEBUG");
    CHECK(names[7] == "log.FATAL");
    CHECK(names[8] == "trace.inbound_latency_mean");
    CHECK(names[10] == "trace.inbound_error_rate");
}

TEST_CASE("window segmentation around the injection point") {
    // Grid [0, 200) at 5s; inject at t=100 with T=10:
    // fault window = [100, 150), normal window = [50, 100).
    AlignedCase ac;
    ac.grid = {0, 5, 40};
    ac.features.grid = ac.grid;
    ac.features.allocate(1, 40, 1);
    ac.features.grid = ac.grid;
    for (int t = 0; t < 40; ++t) ac.features.at(0, t, 0) = t;  // bucket index as value

    FaultCase fc;
    fc.inject_start = 100;
    fc.inject_end = 160;
    auto seg = segment_windows(ac, fc, 10);
    CHECK(seg.fault_start_bucket == 20);
    CHECK(seg.normal_start_bucket == 10);
    CHECK(seg.fault_window.grid.start == 100);
    CHECK(seg.fault_window.grid.points == 10);
    CHECK(seg.normal_window.grid.start == 50);
    CHECK(seg.fault_window.at(0, 0, 0) == 20.0);
    CHECK(seg.fault_window.at(0, 9, 0) == 29.0);
    CHECK(seg.normal_window.at(0, 0, 0) == 10.0);
    CHECK(seg.normal_window.at(0, 9, 0) == 19.0);

    // an injection too close to the start leaves no complete normal window
    FaultCase early;
    early.inject_start = 30;
    early.inject_end = 60;
    CHECK_THROWS_AS(segment_windows(ac, early, 10), InsufficientHistory);
}

TEST_CASE("mid-bucket injection snaps to the containing bucket") {
    AlignedCase ac;
    ac.grid = {0, 5, 40};
    ac.features.allocate(1, 40, 1);
    ac.features.grid = ac.grid;
    FaultCase fc;
    fc.inject_start = 103;  // inside bucket 20
    fc.inject_end = 160;
    auto seg = segment_windows(ac, fc, 10);
    CHECK(seg.fault_start_bucket == 20);
    CHECK(seg.fault_window.grid.start == 100);
}
