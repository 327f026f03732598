/**
 * @file io.hpp
 * @brief File formats: PFM heatmaps, PNG/PPM images, JSON annotations, manifests,
 *        detections, estimates, benchmark reports and DGP1 model files
 */
#pragma once

#include <rulerkit/deepgp.hpp>
#include <rulerkit/eval.hpp>
#include <rulerkit/gpfit.hpp>
#include <rulerkit/heatmap.hpp>
#include <rulerkit/image.hpp>
#include <rulerkit/synth.hpp>

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rulerkit {

using Json = nlohmann::json;

// ---- raw files ----------------------------------------------------------

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and rename so readers never see a partial file.
void write_file(const std::filesystem::path& path, std::string_view bytes);

// ---- PFM ----------------------------------------------------------------

/// "Pf" header, little-endian (scale -1.0), rows stored bottom first.
std::string encode_pfm(const Heatmap& h);
Heatmap decode_pfm(std::string_view bytes);
void write_pfm(const std::filesystem::path& path, const Heatmap& h);
Heatmap read_pfm(const std::filesystem::path& path);

// ---- images -------------------------------------------------------------

std::string encode_png(const ImageRGB& img);
ImageRGB decode_png(std::string_view bytes);
std::string encode_ppm(const ImageRGB& img);
ImageRGB decode_ppm(std::string_view bytes);
/// PNG or binary PPM, chosen by the file signature.
ImageRGB read_image(const std::filesystem::path& path);
/// Format chosen by extension: .ppm writes P6, anything else PNG.
void write_image(const std::filesystem::path& path, const ImageRGB& img);

// ---- JSON helpers -------------------------------------------------------

/// Compact serialisation; doubles are written in a form that parses back to the same value.
std::string dump_json(const Json& j);
/// Parses text, raising SchemaViolation at "$" on syntax errors.
Json parse_json(std::string_view text);

// ---- annotations ----------------------------------------------------------

/// An annotation plus the fields this version does not interpret.
struct AnnotationDocument {
    Annotation annotation;
    Json extras = Json::object();               ///< unknown top-level fields
    std::vector<Json> ruler_extras;             ///< unknown fields per ruler
};

Json annotation_to_json(const AnnotationDocument& doc);
/// `path` prefixes field paths in SchemaViolation messages.
AnnotationDocument annotation_from_json(const Json& j, const std::string& path = "");
void write_annotation(const std::filesystem::path& path, const AnnotationDocument& doc);
AnnotationDocument read_annotation(const std::filesystem::path& path);

// ---- detections ---------------------------------------------------------

enum class DetectionSource { heatmap, external, ground_truth };

struct DetectionFile {
    std::string image_id;
    std::vector<Point2> points;
    std::optional<DetectionSource> source;
    Json extras = Json::object();
};

Json detections_to_json(const DetectionFile& d);
DetectionFile detections_from_json(const Json& j, const std::string& path = "");
void write_detections(const std::filesystem::path& path, const DetectionFile& d);
DetectionFile read_detections(const std::filesystem::path& path);

// ---- manifest -----------------------------------------------------------

struct ManifestEntry {
    std::string id;
    std::string image;                       ///< relative to the manifest directory
    int width = 0;
    int height = 0;
    AnnotationDocument annotation;
    std::optional<std::string> heatmap;      ///< PFM, relative path
    std::optional<std::vector<Point2>> detections;
    Json extras = Json::object();            ///< spec, homography, ... and unknown fields
};

struct DatasetManifest {
    int version = 1;
    std::vector<ManifestEntry> entries;
    Json extras = Json::object();
    std::filesystem::path base_dir;          ///< set by read_manifest

    std::filesystem::path resolve(const std::string& relative) const { return base_dir / relative; }
};

Json manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const Json& j);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);
/// Validates unique ids and, when `check_files`, that referenced files exist.
DatasetManifest read_manifest(const std::filesystem::path& path, bool check_files = true);

Json spec_to_json(const RulerSpec& s);
RulerSpec spec_from_json(const Json& j, const std::string& path = "spec");

// ---- estimates and reports ------------------------------------------------

Json estimate_to_json(const ScaleEstimate& e);
ScaleEstimate estimate_from_json(const Json& j, const std::string& path = "");

/// {n, mape, ms_per_sample?, records: [...]}; elapsed times only when present.
Json report_to_json(const BenchmarkReport& r);
BenchmarkReport report_from_json(const Json& j);
std::string report_to_csv(const BenchmarkReport& r);

// ---- DGP1 model files -----------------------------------------------------

/// "DGP1", u32 layer count, per layer u32 (in, out), then per layer
/// weights (out x in, row-major) and bias, all little-endian float32.
std::string encode_model(const DeepGPModel& model);
DeepGPModel decode_model(std::string_view bytes);
void write_model(const std::filesystem::path& path, const DeepGPModel& model);
DeepGPModel read_model(const std::filesystem::path& path);

/// One JSON object per line: {"step", "loss", "lr"}.
std::string training_log_jsonl(const TrainConfig& cfg, const std::vector<double>& losses);

}  // namespace rulerkit
