/**
 * @file eval.cpp
 */
#include <rulerkit/eval.hpp>
#include <rulerkit/error.hpp>
#include <rulerkit/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <exception>

namespace rulerkit {

void validate(const PointAnnotation& a) {
    for (std::size_t i = 0; i < a.rulers.size(); ++i) {
        if (a.rulers[i].marks.size() < 2) {
            fail(ErrorCode::InvalidValue, "ruler " + std::to_string(i) + " has fewer than 2 marks");
        }
    }
}

void validate(const LineAnnotation& a) {
    for (std::size_t i = 0; i < a.rulers.size(); ++i) {
        const auto& r = a.rulers[i];
        if (!(r.length_cm > 0.0)) fail(ErrorCode::InvalidValue, "ruler " + std::to_string(i) + ": length_cm must be > 0");
        if (r.a.x == r.b.x && r.a.y == r.b.y) {
            fail(ErrorCode::InvalidValue, "ruler " + std::to_string(i) + ": endpoints coincide");
        }
    }
}

double ruler_median_spacing(std::span<const Point2> marks) {
    if (marks.size() < 2) fail(ErrorCode::TooFewMarks, "ruler needs at least 2 marks");
    const HoughLine line = fit_line(marks);
    auto t = project_to_line(marks, line);
    std::sort(t.begin(), t.end());
    std::vector<double> gaps;
    gaps.reserve(t.size() - 1);
    for (std::size_t i = 1; i < t.size(); ++i) gaps.push_back(t[i].t - t[i - 1].t);
    return median(std::move(gaps));
}

double gt_scale_from_points(const PointAnnotation& a) {
    if (a.rulers.empty()) fail(ErrorCode::NoRulers, "annotation has no rulers");
    validate(a);
    const RulerPoints* best = &a.rulers.front();
    for (const auto& r : a.rulers) {
        if (r.marks.size() > best->marks.size()) best = &r;
    }
    return ruler_median_spacing(best->marks);
}

double gt_scale_from_lines(const LineAnnotation& a) {
    if (a.rulers.empty()) fail(ErrorCode::NoRulers, "annotation has no rulers");
    validate(a);
    double best_len = -1.0;
    double scale = 0.0;
    for (const auto& r : a.rulers) {
        const double len = std::hypot(r.b.x - r.a.x, r.b.y - r.a.y);
        if (len > best_len) {
            best_len = len;
            scale = len / r.length_cm;
        }
    }
    return scale;
}

double gt_scale(const Annotation& a) {
    return std::visit(
        [](const auto& v) -> double {
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>, PointAnnotation>) {
                return gt_scale_from_points(v);
            } else {
                return gt_scale_from_lines(v);
            }
        },
        a);
}

double mape_per_cm_at_n(std::span<const EvalRecord> records, double n) {
    if (records.empty()) fail(ErrorCode::EmptyDataset, "no records");
    double sum = 0.0;
    for (const auto& r : records) {
        if (!(r.size > 0.0)) fail(ErrorCode::InvalidValue, "record '" + r.id + "' has non-positive image size");
        sum += n * std::abs(r.predicted - r.ground_truth) / r.size;
    }
    return sum / static_cast<double>(records.size());
}

std::size_t timing_warmup_count(std::size_t n_records) {
    return (n_records + 9) / 10;
}

std::optional<double> mean_timing(std::span<const EvalRecord> records) {
    std::size_t skip = timing_warmup_count(records.size());
    // A single record would otherwise leave nothing to average.
    if (skip >= records.size()) skip = 0;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = skip; i < records.size(); ++i) {
        if (!records[i].elapsed_ms) continue;
        sum += *records[i].elapsed_ms;
        ++count;
    }
    if (count == 0) return std::nullopt;
    return sum / static_cast<double>(count);
}

namespace {

void run_one(const BenchmarkEstimator& estimator, std::size_t i, EvalRecord& rec) {
    ComputeTimer timer;
    try {
        const ScaleEstimate est = estimator(i, timer);
        rec.predicted = est.ok() ? est.pixels_per_cm : 0.0;
        if (!est.ok()) rec.error = "failed";
    } catch (const Error& e) {
        rec.predicted = 0.0;
        rec.error = std::string(error_code_name(e.code())) + ": " + e.what();
    } catch (const std::exception& e) {
        rec.predicted = 0.0;
        rec.error = e.what();
    }
    rec.elapsed_ms = timer.elapsed_ms();
}

}  // namespace

BenchmarkReport run_benchmark(std::span<const BenchmarkEntry> dataset, const BenchmarkEstimator& estimator,
                              const BenchmarkOptions& options) {
    if (dataset.empty()) fail(ErrorCode::EmptyDataset, "benchmark dataset is empty");
    BenchmarkReport report;
    report.n = options.n;
    report.records.resize(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        report.records[i].id = dataset[i].id;
        report.records[i].ground_truth = dataset[i].ground_truth;
        report.records[i].size = dataset[i].size;
    }

    parallel_for(dataset.size(), options.jobs, [&](std::size_t i) { run_one(estimator, i, report.records[i]); });

    if (options.timing) {
        for (std::size_t i = 0; i < dataset.size(); ++i) {
            EvalRecord timed = report.records[i];
            run_one(estimator, i, timed);
            report.records[i].elapsed_ms = timed.elapsed_ms;
        }
        report.ms_per_sample = mean_timing(report.records);
    } else {
        for (auto& r : report.records) r.elapsed_ms.reset();
    }
    report.mape = mape_per_cm_at_n(report.records, options.n);
    return report;
}

}  // namespace rulerkit
