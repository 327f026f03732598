/**
 * @file test_eval.cpp
 * @brief Ground-truth protocols, the normalised error metric and the benchmark harness
 */
#include "test_support.hpp"

#include <rulerkit/eval.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>

using namespace rulerkit;

namespace {

EvalRecord rec(double p, double q, double s) {
    EvalRecord r;
    r.predicted = p;
    r.ground_truth = q;
    r.size = s;
    return r;
}

std::vector<Point2> on_line(std::initializer_list<double> ts, Point2 origin = {5, 7}, double angle = 0.3) {
    std::vector<Point2> out;
    for (double t : ts) out.push_back({origin.x + t * std::cos(angle), origin.y + t * std::sin(angle)});
    return out;
}

std::vector<BenchmarkEntry> entries(std::size_t n) {
    std::vector<BenchmarkEntry> d;
    for (std::size_t i = 0; i < n; ++i) {
        d.push_back({"e" + std::to_string(i), 10.0 + static_cast<double>(i), 500.0 + 10.0 * static_cast<double>(i)});
    }
    return d;
}

}  // namespace

TEST(Mape, WorkedExamples) {
    const std::vector<EvalRecord> a{rec(10, 12, 768)};
    EXPECT_NEAR(mape_per_cm_at_n(a, 768), 2.0, 1e-12);
    const std::vector<EvalRecord> b{rec(7, 7, 100), rec(3.5, 3.5, 900)};
    EXPECT_EQ(mape_per_cm_at_n(b, 768), 0.0);
    const std::vector<EvalRecord> c{rec(10, 14, 1536)};
    EXPECT_NEAR(mape_per_cm_at_n(c, 768), 2.0, 1e-12);
}

TEST(Mape, DefaultBaseResolution) {
    const std::vector<EvalRecord> a{rec(10, 12, 768)};
    EXPECT_NEAR(mape_per_cm_at_n(a), 2.0, 1e-12);
}

TEST(Mape, AllFailuresFormula) {
    const std::vector<EvalRecord> r{rec(0, 12, 768), rec(0, 30, 1024), rec(0, 5.5, 640)};
    const double expect = (768.0 * 12 / 768 + 768.0 * 30 / 1024 + 768.0 * 5.5 / 640) / 3.0;
    EXPECT_NEAR(mape_per_cm_at_n(r, 768), expect, 1e-12);
}

TEST(Mape, HomogeneousInN) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(1, 50);
    std::vector<EvalRecord> r;
    for (int i = 0; i < 37; ++i) r.push_back(rec(u(rng), u(rng), 10 * u(rng)));
    const double m = mape_per_cm_at_n(r, 768);
    EXPECT_EQ(mape_per_cm_at_n(r, 1536), 2.0 * m);
    EXPECT_EQ(mape_per_cm_at_n(r, 384), 0.5 * m);
}

TEST(Mape, PermutationInvariant) {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(1, 50);
    std::vector<EvalRecord> r;
    for (int i = 0; i < 25; ++i) r.push_back(rec(u(rng), u(rng), 10 * u(rng)));
    const double m = mape_per_cm_at_n(r, 768);
    for (int k = 0; k < 5; ++k) {
        std::shuffle(r.begin(), r.end(), rng);
        EXPECT_NEAR(mape_per_cm_at_n(r, 768), m, 1e-12 * m);
    }
}

TEST(Mape, Errors) {
    EXPECT_RK_ERROR(mape_per_cm_at_n({}, 768), ErrorCode::EmptyDataset);
    const std::vector<EvalRecord> r{rec(1, 2, 0)};
    EXPECT_RK_ERROR(mape_per_cm_at_n(r, 768), ErrorCode::InvalidValue);
}

TEST(ImageSize, LongerSide) {
    EXPECT_EQ(image_size_scalar(768, 512), 768.0);
    EXPECT_EQ(image_size_scalar(300, 1200), 1200.0);
}

TEST(GtPoints, EvenSpacing) {
    PointAnnotation a{{{"r0", on_line({0, 10, 20, 30, 40})}}};
    EXPECT_NEAR(gt_scale_from_points(a), 10.0, 1e-12);
}

TEST(GtPoints, MissingMarkMedian) {
    PointAnnotation a{{{"r0", on_line({0, 10, 30, 40})}}};
    EXPECT_NEAR(gt_scale_from_points(a), 10.0, 1e-12);
}

TEST(GtPoints, LargestSetWins) {
    PointAnnotation a{{{"small", on_line({0, 25, 50}, {0, 300})}, {"big", on_line({0, 8, 16, 24, 32})}}};
    EXPECT_NEAR(gt_scale_from_points(a), 8.0, 1e-12);
}

TEST(GtPoints, TieGoesToFirst) {
    PointAnnotation a{{{"first", on_line({0, 6, 12})}, {"second", on_line({0, 9, 18}, {0, 200})}}};
    EXPECT_NEAR(gt_scale_from_points(a), 6.0, 1e-12);
}

TEST(GtPoints, OrderInvariant) {
    auto marks = on_line({0, 11, 22, 33, 44, 66, 77}, {40, 10}, 1.2);
    const double ref = gt_scale_from_points(PointAnnotation{{{"r", marks}}});
    EXPECT_NEAR(ref, 11.0, 1e-12);
    std::mt19937_64 rng(2);
    for (int k = 0; k < 10; ++k) {
        std::shuffle(marks.begin(), marks.end(), rng);
        EXPECT_NEAR(gt_scale_from_points(PointAnnotation{{{"r", marks}}}), ref, 1e-12 * ref);
    }
}

TEST(GtPoints, Errors) {
    EXPECT_RK_ERROR(gt_scale_from_points(PointAnnotation{}), ErrorCode::NoRulers);
    PointAnnotation one{{{"r", {{1, 1}}}}};
    EXPECT_RK_ERROR(validate(one), ErrorCode::InvalidValue);
}

TEST(GtLines, Examples) {
    LineAnnotation a{{{"r", {0, 0}, {60, 80}, 10}}};
    EXPECT_NEAR(gt_scale_from_lines(a), 10.0, 1e-12);
    LineAnnotation b{{{"short", {0, 0}, {100, 0}, 10}, {"long", {0, 50}, {0, 350}, 20}}};
    EXPECT_NEAR(gt_scale_from_lines(b), 15.0, 1e-12);
    EXPECT_NEAR(gt_scale(Annotation{b}), 15.0, 1e-12);
}

TEST(GtLines, Errors) {
    EXPECT_RK_ERROR(gt_scale_from_lines(LineAnnotation{}), ErrorCode::NoRulers);
    LineAnnotation zero{{{"r", {3, 3}, {3, 3}, 5}}};
    EXPECT_RK_ERROR(validate(zero), ErrorCode::InvalidValue);
    LineAnnotation len{{{"r", {0, 0}, {3, 3}, 0}}};
    EXPECT_RK_ERROR(validate(len), ErrorCode::InvalidValue);
}

TEST(Timing, WarmupDiscard) {
    EXPECT_EQ(timing_warmup_count(10), 1u);
    EXPECT_EQ(timing_warmup_count(11), 2u);
    EXPECT_EQ(timing_warmup_count(100), 10u);
    std::vector<EvalRecord> r(10);
    for (std::size_t i = 0; i < r.size(); ++i) r[i].elapsed_ms = static_cast<double>(i + 1);
    // records 2..10 hold 2..10
    EXPECT_NEAR(*mean_timing(r), 6.0, 1e-12);
    std::vector<EvalRecord> single(1);
    single[0].elapsed_ms = 4.5;
    EXPECT_EQ(*mean_timing(single), 4.5);
    EXPECT_FALSE(mean_timing(std::vector<EvalRecord>(3)).has_value());
}

TEST(Benchmark, OracleGivesZero) {
    const auto d = entries(12);
    const auto report = run_benchmark(d, [&](std::size_t i, ComputeTimer&) {
        ScaleEstimate e;
        e.status = EstimateStatus::ok;
        e.pixels_per_cm = d[i].ground_truth;
        return e;
    });
    EXPECT_EQ(report.mape, 0.0);
    EXPECT_EQ(report.records.size(), d.size());
    EXPECT_TRUE(report.ms_per_sample.has_value());
}

TEST(Benchmark, FailuresCountAsZero) {
    const auto d = entries(9);
    const auto report = run_benchmark(d, [](std::size_t i, ComputeTimer&) -> ScaleEstimate {
        if (i % 3 == 0) throw Error(ErrorCode::TooFewMarks, "nope");
        if (i % 3 == 1) throw std::runtime_error("boom");
        return ScaleEstimate::failed();
    });
    ASSERT_EQ(report.records.size(), d.size());
    double expect = 0.0;
    for (const auto& e : d) expect += 768.0 * e.ground_truth / e.size;
    expect /= static_cast<double>(d.size());
    EXPECT_NEAR(report.mape, expect, 1e-12);
    for (const auto& r : report.records) {
        EXPECT_EQ(r.predicted, 0.0);
        EXPECT_TRUE(r.error.has_value());
    }
}

TEST(Benchmark, NoTimingAndJobsIndependent) {
    const auto d = entries(40);
    auto est = [&](std::size_t i, ComputeTimer&) {
        ScaleEstimate e;
        e.status = EstimateStatus::ok;
        e.pixels_per_cm = d[i].ground_truth * (1.0 + 0.01 * static_cast<double>(i % 7));
        return e;
    };
    BenchmarkOptions one;
    one.timing = false;
    BenchmarkOptions four = one;
    four.jobs = 4;
    const auto a = run_benchmark(d, est, one);
    const auto b = run_benchmark(d, est, four);
    EXPECT_EQ(a.mape, b.mape);
    EXPECT_FALSE(a.ms_per_sample.has_value());
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_EQ(a.records[i].predicted, b.records[i].predicted);
        EXPECT_FALSE(a.records[i].elapsed_ms.has_value());
    }
}

TEST(Benchmark, TimedPassIsSerial) {
    const auto d = entries(8);
    std::atomic<int> active{0};
    std::atomic<int> peak{0};
    BenchmarkOptions opt;
    opt.jobs = 4;
    std::atomic<int> calls{0};
    run_benchmark(d, [&](std::size_t, ComputeTimer&) {
        const int c = calls.fetch_add(1);
        const int now = active.fetch_add(1) + 1;
        if (c >= 8) peak = std::max(peak.load(), now);
        active.fetch_sub(1);
        return ScaleEstimate::failed();
    }, opt);
    EXPECT_EQ(calls.load(), 16);
    EXPECT_EQ(peak.load(), 1);
}

TEST(Benchmark, EmptyDataset) {
    EXPECT_RK_ERROR(run_benchmark({}, [](std::size_t, ComputeTimer&) { return ScaleEstimate::failed(); }),
                    ErrorCode::EmptyDataset);
}
