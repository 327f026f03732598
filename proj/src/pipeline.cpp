/**
 * @file pipeline.cpp
 */
#include <rulerkit/pipeline.hpp>
#include <rulerkit/error.hpp>
#include <rulerkit/parallel.hpp>

#include <algorithm>
#include <cstdio>
#include <random>

namespace rulerkit {

namespace fs = std::filesystem;

std::string_view method_name(Method m) {
    switch (m) {
        case Method::direct: return "direct";
        case Method::median: return "median";
        case Method::gp_de: return "gp-de";
        case Method::deepgp: return "deepgp";
    }
    return "direct";
}

Method parse_method(std::string_view name) {
    if (name == "direct") return Method::direct;
    if (name == "median") return Method::median;
    if (name == "gp-de") return Method::gp_de;
    if (name == "deepgp") return Method::deepgp;
    fail(ErrorCode::InvalidParams, "unknown method '" + std::string(name) + "'");
}

std::string_view batch_source_name(BatchSource s) {
    switch (s) {
        case BatchSource::detections: return "detections";
        case BatchSource::heatmap: return "heatmap";
        case BatchSource::gt_render: return "gt-render";
    }
    return "detections";
}

BatchSource parse_batch_source(std::string_view name) {
    if (name == "detections") return BatchSource::detections;
    if (name == "heatmap") return BatchSource::heatmap;
    if (name == "gt-render") return BatchSource::gt_render;
    fail(ErrorCode::InvalidParams, "unknown source '" + std::string(name) + "'");
}

namespace {

ScaleEstimate run_estimator(std::span<const Mark1D> marks, Method method, const PipelineConfig& cfg) {
    switch (method) {
        case Method::direct: return estimate_direct(marks);
        case Method::median: return estimate_median_filtered(marks);
        case Method::gp_de: {
            if (marks.size() < 3) return ScaleEstimate::failed();
            const FitConfig fit = cfg.fit.with_bounds(default_bounds(marks));
            const GPParams params = fit_gp_de(marks, fit);
            ScaleEstimate est = scale_from_gp(params, marks.front(), marks.back());
            est.marks_used = marks.size();
            return est;
        }
        case Method::deepgp: {
            if (marks.size() < 3 || cfg.model == nullptr) return ScaleEstimate::failed();
            const GPParams params = deepgp_infer(*cfg.model, marks);
            ScaleEstimate est = scale_from_gp(params, marks.front(), marks.back());
            est.marks_used = marks.size();
            return est;
        }
    }
    return ScaleEstimate::failed();
}

}  // namespace

ScaleEstimate estimate_from_marks(std::span<const Mark1D> sorted_marks, Method method, const PipelineConfig& cfg) {
    try {
        return run_estimator(sorted_marks, method, cfg);
    } catch (const std::exception&) {
        return ScaleEstimate::failed();
    }
}

PointsEstimate estimate_from_line(const LineDetection& line, Method method, const PipelineConfig& cfg) {
    PointsEstimate out;
    try {
        out.marks = project_to_line(line.inliers, line.line);
        std::sort(out.marks.begin(), out.marks.end());
        out.line = line;
        out.estimate = run_estimator(out.marks, method, cfg);
        if (!out.estimate.ok()) out.error = "estimator failed";
    } catch (const Error& e) {
        out.estimate = ScaleEstimate::failed();
        out.error = std::string(error_code_name(e.code())) + ": " + e.what();
    } catch (const std::exception& e) {
        out.estimate = ScaleEstimate::failed();
        out.error = e.what();
    }
    return out;
}

PointsEstimate estimate_from_points(std::span<const Point2> points, Method method, const PipelineConfig& cfg) {
    if (points.size() < 2) {
        PointsEstimate out;
        out.error = "TooFewPoints: at least 2 points are needed";
        return out;
    }
    try {
        return estimate_from_line(hough_dominant_line(points, cfg.hough), method, cfg);
    } catch (const Error& e) {
        PointsEstimate out;
        out.error = std::string(error_code_name(e.code())) + ": " + e.what();
        return out;
    } catch (const std::exception& e) {
        PointsEstimate out;
        out.error = e.what();
        return out;
    }
}

HeatmapEstimate estimate_from_heatmap(const Heatmap& h, Method method, const PipelineConfig& cfg) {
    HeatmapEstimate out;
    try {
        out.points = extract_peaks(h, cfg.peaks);
    } catch (const Error& e) {
        PointsEstimate failed;
        failed.error = std::string(error_code_name(e.code())) + ": " + e.what();
        out.rulers.push_back(std::move(failed));
        return out;
    }
    if (!cfg.multi_line || out.points.size() < 2) {
        out.rulers.push_back(estimate_from_points(out.points, method, cfg));
    } else {
        try {
            for (const auto& line : hough_all_lines(out.points, cfg.hough, cfg.max_lines)) {
                out.rulers.push_back(estimate_from_line(line, method, cfg));
            }
        } catch (const Error& e) {
            PointsEstimate failed;
            failed.error = std::string(error_code_name(e.code())) + ": " + e.what();
            out.rulers.push_back(std::move(failed));
        }
    }
    if (!out.rulers.empty()) out.estimate = out.rulers.front().estimate;
    return out;
}

Heatmap render_gt_heatmap(const PointAnnotation& a, int width, int height, double sigma) {
    std::vector<Point2> pts;
    for (const auto& r : a.rulers) pts.insert(pts.end(), r.marks.begin(), r.marks.end());
    return render_gaussians(pts, sigma, width, height);
}

BenchmarkReport estimate_batch(const DatasetManifest& manifest, Method method, const PipelineConfig& cfg,
                               const BatchOptions& options) {
    if (manifest.entries.empty()) fail(ErrorCode::EmptyDataset, "manifest has no entries");
    std::vector<BenchmarkEntry> dataset;
    dataset.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) {
        dataset.push_back({e.id, gt_scale(e.annotation.annotation), image_size_scalar(e.width, e.height)});
    }

    auto estimator = [&](std::size_t i, ComputeTimer& timer) -> ScaleEstimate {
        const ManifestEntry& e = manifest.entries[i];
        switch (options.source) {
            case BatchSource::detections: {
                if (!e.detections) fail(ErrorCode::InvalidValue, "entry has no detections");
                timer.start();
                return estimate_from_points(*e.detections, method, cfg).estimate;
            }
            case BatchSource::heatmap: {
                if (!e.heatmap) fail(ErrorCode::InvalidValue, "entry has no heatmap");
                const Heatmap h = read_pfm(manifest.resolve(*e.heatmap));
                timer.start();
                return estimate_from_heatmap(h, method, cfg).estimate;
            }
            case BatchSource::gt_render: {
                const auto* pa = std::get_if<PointAnnotation>(&e.annotation.annotation);
                if (pa == nullptr) fail(ErrorCode::InvalidValue, "gt-render needs a point annotation");
                const Heatmap h = render_gt_heatmap(*pa, e.width, e.height, cfg.render_sigma);
                timer.start();
                return estimate_from_heatmap(h, method, cfg).estimate;
            }
        }
        return ScaleEstimate::failed();
    };

    BenchmarkOptions bench;
    bench.n = options.n;
    bench.jobs = options.jobs;
    bench.timing = options.timing;
    return run_benchmark(dataset, estimator, bench);
}

RulerSample make_synth_sample(const SynthOptions& options, std::size_t index) {
    std::mt19937_64 rng(derive_seed(options.seed, index));
    ImageRGB background;
    if (!options.backgrounds.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, options.backgrounds.size() - 1);
        const ImageRGB src = read_image(options.backgrounds[pick(rng)]);
        background = resize_bilinear(src, options.width, options.height);
    } else {
        std::uniform_int_distribution<int> channel(0, 255);
        const Rgb fill{static_cast<std::uint8_t>(channel(rng)), static_cast<std::uint8_t>(channel(rng)),
                       static_cast<std::uint8_t>(channel(rng))};
        background = ImageRGB(options.width, options.height, fill);
    }
    const RulerSpec spec = random_spec(rng, options.width, options.height, options.constraints);
    const std::uint64_t draw_seed = rng();
    return draw_ruler(background, spec, draw_seed);
}

ManifestEntry synth_manifest_entry(const RulerSample& sample, const std::string& id, const std::string& image) {
    ManifestEntry e;
    e.id = id;
    e.image = image;
    e.width = sample.image.width();
    e.height = sample.image.height();
    PointAnnotation pa;
    pa.rulers.push_back({"0", sample.cm_marks});
    e.annotation.annotation = std::move(pa);
    e.annotation.ruler_extras.push_back(Json{{"length_cm", sample.spec.length_cm}});
    Json h = Json::array();
    for (int r = 0; r < 3; ++r) h.push_back(Json::array({sample.homography(r, 0), sample.homography(r, 1), sample.homography(r, 2)}));
    e.extras["homography"] = std::move(h);
    e.extras["spec"] = spec_to_json(sample.spec);
    return e;
}

DatasetManifest write_synth_dataset(const fs::path& dir, std::size_t count, const SynthOptions& options, int jobs) {
    fs::create_directories(dir / "images");
    DatasetManifest manifest;
    manifest.base_dir = dir;
    manifest.entries.resize(count);
    parallel_for(count, jobs, [&](std::size_t i) {
        char id[16];
        std::snprintf(id, sizeof id, "%06zu", i);
        const std::string image = std::string("images/") + id + ".png";
        const RulerSample sample = make_synth_sample(options, i);
        write_image(dir / image, sample.image);
        manifest.entries[i] = synth_manifest_entry(sample, id, image);
    });
    manifest.extras["generator"] = Json{{"seed", options.seed},
                                        {"width", options.width},
                                        {"height", options.height},
                                        {"count", count}};
    write_manifest(dir / "manifest.json", manifest);
    return manifest;
}

std::vector<fs::path> list_backgrounds(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension();
        if (ext == ".png" || ext == ".ppm") out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace rulerkit
