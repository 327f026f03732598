/**
 * @file pipeline.hpp
 * @brief Heatmap or points in, pixels/cm out: peaks, line grouping, projection and a scale estimator
 */
#pragma once

#include <rulerkit/deepgp.hpp>
#include <rulerkit/eval.hpp>
#include <rulerkit/gpfit.hpp>
#include <rulerkit/heatmap.hpp>
#include <rulerkit/hough.hpp>
#include <rulerkit/io.hpp>
#include <rulerkit/synth.hpp>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rulerkit {

enum class Method { direct, median, gp_de, deepgp };

std::string_view method_name(Method m);
/// "direct", "median", "gp-de" or "deepgp"; InvalidParams otherwise.
Method parse_method(std::string_view name);

struct PipelineConfig {
    HoughConfig hough;
    PeakConfig peaks;
    FitConfig fit;                        ///< bounds are replaced per input
    const DeepGPModel* model = nullptr;   ///< required by Method::deepgp; shared read-only
    bool multi_line = false;
    std::size_t max_lines = 8;
    double render_sigma = 2.0;            ///< Gaussian sigma for ground-truth rendered heatmaps
};

/// Runs one estimator on projected marks (ascending). Never throws.
ScaleEstimate estimate_from_marks(std::span<const Mark1D> sorted_marks, Method method, const PipelineConfig& cfg);

struct PointsEstimate {
    ScaleEstimate estimate;
    std::optional<LineDetection> line;
    std::vector<Mark1D> marks;            ///< inliers projected onto the line, ascending
    std::optional<std::string> error;
};

/// Dominant line, projection, estimator. Never throws; problems give status failed.
PointsEstimate estimate_from_points(std::span<const Point2> points, Method method, const PipelineConfig& cfg);

/// Projection and estimator for an already detected line.
PointsEstimate estimate_from_line(const LineDetection& line, Method method, const PipelineConfig& cfg);

struct HeatmapEstimate {
    std::vector<Point2> points;
    std::vector<PointsEstimate> rulers;   ///< one entry, or one per line in multi-line mode
    ScaleEstimate estimate;               ///< the best supported ruler
};

HeatmapEstimate estimate_from_heatmap(const Heatmap& h, Method method, const PipelineConfig& cfg);

/// Gaussian target rendered from every annotated mark.
Heatmap render_gt_heatmap(const PointAnnotation& a, int width, int height, double sigma);

enum class BatchSource { detections, heatmap, gt_render };

std::string_view batch_source_name(BatchSource s);
BatchSource parse_batch_source(std::string_view name);

struct BatchOptions {
    BatchSource source = BatchSource::detections;
    double n = 768.0;
    int jobs = 1;
    bool timing = false;
};

/// One benchmark record per manifest entry; entry-level problems become failed records.
BenchmarkReport estimate_batch(const DatasetManifest& manifest, Method method, const PipelineConfig& cfg,
                               const BatchOptions& options);

struct SynthOptions {
    int width = 768;
    int height = 768;
    std::uint64_t seed = 0;
    SpecConstraints constraints;
    std::vector<std::filesystem::path> backgrounds; ///< empty: random solid colours
};

/// Sample `index` of the stream defined by `options`; independent of other indices.
RulerSample make_synth_sample(const SynthOptions& options, std::size_t index);

/// Manifest entry describing a sample whose image lives at `image` (relative path).
ManifestEntry synth_manifest_entry(const RulerSample& sample, const std::string& id, const std::string& image);

/// Writes images/<id>.png for `count` samples plus manifest.json into `dir`.
DatasetManifest write_synth_dataset(const std::filesystem::path& dir, std::size_t count, const SynthOptions& options,
                                    int jobs);

/// Image files with a .png or .ppm extension directly inside `dir`, sorted by name.
std::vector<std::filesystem::path> list_backgrounds(const std::filesystem::path& dir);

}  // namespace rulerkit
