/**
 * @file eval.hpp
 * @brief Ground-truth scale protocols, the resolution-normalised error metric and the benchmark harness
 */
#pragma once

#include <rulerkit/geometry.hpp>
#include <rulerkit/gpfit.hpp>

#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace rulerkit {

struct RulerPoints {
    std::string id;
    std::vector<Point2> marks;
};

struct PointAnnotation {
    std::vector<RulerPoints> rulers;
};

struct RulerLine {
    std::string id;
    Point2 a;
    Point2 b;
    double length_cm = 0.0;
};

struct LineAnnotation {
    std::vector<RulerLine> rulers;
};

using Annotation = std::variant<PointAnnotation, LineAnnotation>;

/// InvalidValue unless every ruler has at least two marks.
void validate(const PointAnnotation& a);
/// InvalidValue unless length_cm > 0 and the endpoints differ.
void validate(const LineAnnotation& a);

/// Median adjacent distance of the marks ordered along their best-fit line.
double ruler_median_spacing(std::span<const Point2> marks);

/// Median spacing of the ruler with the most marks (first one on ties).
double gt_scale_from_points(const PointAnnotation& a);

/// Endpoint distance over length_cm for the ruler that is longest in pixels.
double gt_scale_from_lines(const LineAnnotation& a);

double gt_scale(const Annotation& a);

/// Scalar image size used to normalise errors: the longer side.
inline double image_size_scalar(int width, int height) {
    return static_cast<double>(width > height ? width : height);
}

struct EvalRecord {
    std::string id;
    double predicted = 0.0;      ///< 0 encodes a failed estimate
    double ground_truth = 0.0;
    double size = 0.0;
    std::optional<double> elapsed_ms;
    std::optional<std::string> error;
};

/// (1/|Q|) * sum n * |p - q| / s.
double mape_per_cm_at_n(std::span<const EvalRecord> records, double n = 768.0);

/// Restarts the measured interval; an estimator calls it once its inputs are loaded.
class ComputeTimer {
public:
    using Clock = std::chrono::steady_clock;

    void start() { begin_ = Clock::now(); }
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(Clock::now() - begin_).count();
    }

private:
    Clock::time_point begin_ = Clock::now();
};

struct BenchmarkEntry {
    std::string id;
    double ground_truth = 0.0;
    double size = 0.0;
};

using BenchmarkEstimator = std::function<ScaleEstimate(std::size_t index, ComputeTimer& timer)>;

struct BenchmarkOptions {
    double n = 768.0;
    int jobs = 1;
    /// Adds a serial pass whose per-record times give ms_per_sample.
    bool timing = true;
};

struct BenchmarkReport {
    double n = 768.0;
    double mape = 0.0;
    std::optional<double> ms_per_sample;
    std::vector<EvalRecord> records;
};

/// Number of leading records excluded from the timing mean.
std::size_t timing_warmup_count(std::size_t n_records);

/// Mean elapsed time after the warm-up records; records without a time are skipped.
std::optional<double> mean_timing(std::span<const EvalRecord> records);

/// Runs the estimator on every entry. Errors and failed estimates count as a
/// prediction of 0. Predictions come from a pass over `jobs` threads; when
/// timing is requested a second, serial pass measures each call.
BenchmarkReport run_benchmark(std::span<const BenchmarkEntry> dataset, const BenchmarkEstimator& estimator,
                              const BenchmarkOptions& options = {});

}  // namespace rulerkit
