#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "ssdtune/trace.hpp"

#include "helpers.hpp"

using namespace ssdtune;
using namespace testutil;

TEST_CASE("parse: single well-formed line") {
    std::istringstream in("0 0 1024 4096 R\n");
    auto records = parse_trace(in);
    REQUIRE(records.size() == 1);
    CHECK(records[0].timestamp_ns == 0);
    CHECK(records[0].device_id == 0);
    CHECK(records[0].lba == 1024);
    CHECK(records[0].size == 4096);
    CHECK(records[0].op == IoOp::Read);
}

TEST_CASE("parse: comments and blank lines are skipped") {
    std::istringstream in("# header\n\n  \t\n100 1 8 512 W\n# trailing comment\n");
    auto records = parse_trace(in);
    REQUIRE(records.size() == 1);
    CHECK(records[0].device_id == 1);
    CHECK(records[0].op == IoOp::Write);
}

TEST_CASE("parse: timestamps are rebased to zero") {
    std::istringstream in("5000 0 0 512 R\n7000 0 8 512 R\n");
    auto records = parse_trace(in);
    REQUIRE(records.size() == 2);
    CHECK(records[0].timestamp_ns == 0);
    CHECK(records[1].timestamp_ns == 2000);
}

TEST_CASE("parse: non-monotone timestamps name the offending line") {
    std::istringstream in("500 0 0 512 R\n100 0 8 512 R\n");
    try {
        parse_trace(in);
        FAIL("expected a parse error");
    } catch (const TraceParseError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()) == "timestamps not monotone at line 2");
        CHECK(e.code() == "parse_error");
    }
}

TEST_CASE("parse: empty input is an error") {
    std::istringstream in("# only a comment\n");
    try {
        parse_trace(in);
        FAIL("expected an error");
    } catch (const CodedError& e) {
        CHECK(e.code() == "parse_error");
        CHECK(std::string(e.what()) == "empty trace");
    }
}

TEST_CASE("parse: malformed lines are rejected with the line number") {
    auto expect_line = [](const std::string& text, size_t line) {
        std::istringstream in(text);
        try {
            parse_trace(in);
            FAIL("expected a parse error for: ", text);
        } catch (const TraceParseError& e) {
            CHECK(e.line() == line);
        }
    };
    expect_line("0 0 0 512\n", 1);              // missing op
    expect_line("0 0 0 512 R extra\n", 1);      // trailing field
    expect_line("0 0 0 512 X\n", 1);            // bad op
    expect_line("0 0 0 100 R\n", 1);            // size not a multiple of 512
    expect_line("0 0 0 0 R\n", 1);              // zero size
    expect_line("-5 0 0 512 R\n", 1);           // negative timestamp
    expect_line("0 0 0 512 R\nnot a line\n", 2);
}

TEST_CASE("write/parse round-trip is the identity on rebased traces") {
    auto trace = generate_synthetic_trace(TraceProfile::mixed(0.5), 500, 7);
    std::ostringstream out;
    write_trace(out, trace);
    std::istringstream in(out.str());
    auto back = parse_trace(in);
    CHECK(back == trace);
}

TEST_CASE("windows: counts follow floor division and remainders are dropped") {
    auto trace = seq_trace(6000, IoOp::Read);
    CHECK(make_windows(trace).size() == 2);

    trace = seq_trace(6500, IoOp::Read);
    auto windows = make_windows(trace);
    REQUIRE(windows.size() == 2);
    CHECK(windows[0].window_index == 0);
    CHECK(windows[1].window_index == 1);
    CHECK(windows[0].records.size() == kDefaultWindowSize);
    CHECK(windows[1].records.front() == trace[kDefaultWindowSize]);

    trace = seq_trace(3000, IoOp::Read);
    CHECK(make_windows(trace).size() == 1);
}

TEST_CASE("windows: short traces are rejected") {
    auto trace = seq_trace(2999, IoOp::Read);
    try {
        make_windows(trace);
        FAIL("expected an error");
    } catch (const CodedError& e) {
        CHECK(e.code() == "trace_too_short");
        CHECK(std::string(e.what()) == "trace too short for one window");
    }
}

TEST_CASE("features: contiguous read window at 1 ms spacing") {
    auto trace = seq_trace(3000, IoOp::Read); // 4 KiB strides, contiguous LBAs
    auto windows = make_windows(trace);
    auto f = extract_features(windows[0]);
    const double w = 3000;
    CHECK(f.read_ratio == doctest::Approx(1.0));
    CHECK(f.sequential_ratio == doctest::Approx((w - 1) / w));
    CHECK(f.std_io_size == doctest::Approx(0.0));
    CHECK(f.mean_io_size == doctest::Approx(4096.0));
    CHECK(f.iops == doctest::Approx(1000.0));
    CHECK(f.mean_interarrival_ns == doctest::Approx(1e6));
    CHECK(f.std_interarrival_ns == doctest::Approx(0.0));
    CHECK(f.write_working_set == doctest::Approx(0.0));
}

TEST_CASE("features: all-write window has zero read ratio") {
    auto trace = seq_trace(3000, IoOp::Write);
    auto f = extract_features(make_windows(trace)[0]);
    CHECK(f.read_ratio == doctest::Approx(0.0));
    CHECK(f.write_working_set > 0);
}

TEST_CASE("features: uniform start LBAs give near-maximal 64-bin entropy") {
    std::vector<IoRecord> trace;
    for (size_t i = 0; i < 3200; ++i)
        trace.push_back(rec(i * 1000, i * 8, 4096, IoOp::Read));
    auto f = extract_features(make_windows(trace, 3200)[0]);
    CHECK(f.lba_entropy == doctest::Approx(6.0).epsilon(0.2 / 6.0));
    CHECK(std::abs(f.lba_entropy - 6.0) <= 0.2);
}

TEST_CASE("features: single-LBA window has zero entropy and span") {
    std::vector<IoRecord> trace;
    for (size_t i = 0; i < 3000; ++i)
        trace.push_back(rec(i * 1000, 64, 4096, IoOp::Read));
    auto f = extract_features(make_windows(trace)[0]);
    CHECK(f.lba_entropy == doctest::Approx(0.0));
    CHECK(f.lba_span == doctest::Approx(0.0));
}

TEST_CASE("features: bounded ranges on every profile") {
    const TraceProfile profiles[] = {TraceProfile::seq_read(), TraceProfile::rand_read(),
                                     TraceProfile::seq_write(), TraceProfile::rand_write(),
                                     TraceProfile::mixed(0.3)};
    for (const auto& profile : profiles) {
        auto trace = generate_synthetic_trace(profile, 6000, 11);
        for (const auto& window : make_windows(trace)) {
            auto f = extract_features(window);
            CHECK(f.read_ratio >= 0.0);
            CHECK(f.read_ratio <= 1.0);
            CHECK(f.sequential_ratio >= 0.0);
            CHECK(f.sequential_ratio <= 1.0);
            CHECK(f.lba_entropy >= 0.0);
            CHECK(f.lba_entropy <= 6.0 + 1e-9);
            CHECK(f.mean_io_size > 0.0);
            CHECK(f.std_io_size >= 0.0);
            CHECK(f.std_interarrival_ns >= 0.0);
            CHECK(f.lba_span >= 0.0);
            CHECK(f.write_working_set >= 0.0);
            CHECK(f.iops > 0.0);
            for (double v : f.as_array())
                CHECK(std::isfinite(v));
        }
    }
}

TEST_CASE("generator: sequential reads are strictly timed and contiguous") {
    auto trace = generate_synthetic_trace(TraceProfile::seq_read(), 3000, 42);
    REQUIRE(trace.size() == 3000);
    for (size_t i = 1; i < trace.size(); ++i) {
        CHECK(trace[i].timestamp_ns > trace[i - 1].timestamp_ns);
        CHECK(trace[i].lba == trace[i - 1].lba + trace[i - 1].size / 512);
        CHECK(trace[i].op == IoOp::Read);
    }
}

TEST_CASE("generator: mixed read fraction lands near the request") {
    auto trace = generate_synthetic_trace(TraceProfile::mixed(0.7), 10000, 3);
    size_t reads = 0;
    for (const auto& r : trace)
        reads += (r.op == IoOp::Read) ? 1 : 0;
    double ratio = double(reads) / double(trace.size());
    CHECK(ratio >= 0.69);
    CHECK(ratio <= 0.71);
}

TEST_CASE("generator: identical arguments give byte-identical traces") {
    const TraceProfile profiles[] = {TraceProfile::seq_read(), TraceProfile::rand_write(),
                                     TraceProfile::mixed(0.4)};
    for (const auto& profile : profiles) {
        auto a = generate_synthetic_trace(profile, 2000, 99);
        auto b = generate_synthetic_trace(profile, 2000, 99);
        REQUIRE(a == b);
        std::ostringstream sa, sb;
        write_trace(sa, a);
        write_trace(sb, b);
        CHECK(sa.str() == sb.str());
    }
}

TEST_CASE("generator: different seeds decorrelate random profiles") {
    auto a = generate_synthetic_trace(TraceProfile::rand_read(), 2000, 1);
    auto b = generate_synthetic_trace(TraceProfile::rand_read(), 2000, 2);
    CHECK(a != b);
}

TEST_CASE("profile names round-trip") {
    CHECK(TraceProfile::from_name("seqread").kind == TraceProfile::Kind::SeqRead);
    CHECK(TraceProfile::from_name("randread").kind == TraceProfile::Kind::RandRead);
    CHECK(TraceProfile::from_name("seqwrite").kind == TraceProfile::Kind::SeqWrite);
    CHECK(TraceProfile::from_name("randwrite").kind == TraceProfile::Kind::RandWrite);
    auto mixed = TraceProfile::from_name("mixed:0.7");
    CHECK(mixed.kind == TraceProfile::Kind::Mixed);
    CHECK(mixed.read_fraction == doctest::Approx(0.7));
    for (const char* name : {"seqread", "randread", "seqwrite", "randwrite"})
        CHECK(TraceProfile::from_name(name).name() == name);
    CHECK_THROWS_AS(TraceProfile::from_name("bogus"), CodedError);
    CHECK_THROWS_AS(TraceProfile::from_name("mixed:1.5"), CodedError);
}
