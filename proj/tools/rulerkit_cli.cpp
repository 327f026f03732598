/**
 * @file rulerkit_cli.cpp
 * @brief rulerkit command-line front end
 *
 * Subcommands: synth, peaks, fit, deepgp-train, eval, bench. `--config FILE`
 * takes a JSON object whose keys mirror the flag names, nested per subcommand,
 * e.g. {"eval": {"method": "gp-de", "n": 768}}. Flags override the file.
 */
#include <rulerkit/error.hpp>
#include <rulerkit/io.hpp>
#include <rulerkit/pipeline.hpp>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace rulerkit;

namespace {

/// JSON config reader for CLI11: objects nest into subcommands, arrays become
/// multiple inputs, scalars a single input.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

    std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
        std::stringstream ss;
        ss << in.rdbuf();
        Json j;
        try {
            j = Json::parse(ss.str());
        } catch (const Json::parse_error& e) {
            throw CLI::ConversionError(std::string("config: ") + e.what());
        }
        if (!j.is_object()) throw CLI::ConversionError("config: top level must be an object");
        std::vector<CLI::ConfigItem> items;
        flatten(j, {}, items);
        return items;
    }

private:
    static std::string scalar(const Json& v) {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
        return v.dump();
    }

    static void flatten(const Json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (it->is_object()) {
                auto p = parents;
                p.push_back(it.key());
                flatten(*it, p, out);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = it.key();
            if (it->is_array()) {
                for (const auto& v : *it) item.inputs.push_back(scalar(v));
            } else {
                item.inputs.push_back(scalar(*it));
            }
            out.push_back(std::move(item));
        }
    }
};

void print_error(const std::string& code, const std::string& message) {
    std::cerr << dump_json(Json{{"error", {{"code", code}, {"message", message}}}}) << std::endl;
}

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("rulerkit");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("RULERKIT_LOG")) {
        spdlog::set_level(spdlog::level::from_str(env));
    }
}

struct SynthArgs {
    std::size_t count = 10;
    std::string out;
    std::uint64_t seed = 0;
    std::string backgrounds;
    int width = 768;
    int height = 768;
    double max_tilt = 0.15;
    int jobs = 1;
};

struct PeaksArgs {
    std::string heatmap;
    double tau = 0.5;
    int kernel = 5;
    double sigma = 1.0;
    std::string image_id;
    std::string out;
};

struct FitArgs {
    std::string points;
    std::string method = "gp-de";
    std::string model;
    std::uint64_t seed = 0;
    std::string out;
};

struct TrainArgs {
    long steps = 4000;
    int batch = 256;
    std::uint64_t seed = 0;
    double lr = 1e-3;
    int jobs = 1;
    std::string out;
    std::string log;
};

struct EvalArgs {
    std::string manifest;
    std::string method = "gp-de";
    std::string source = "gt-render";
    std::string model;
    double n = 768.0;
    std::uint64_t seed = 0;
    int jobs = 1;
    bool no_timing = false;
    bool multi_line = false;
    std::string out;
    std::string csv;
};

struct BenchArgs {
    std::string manifest;
    std::vector<std::string> methods{"gp-de", "deepgp"};
    std::string source = "gt-render";
    std::string model;
    double n = 768.0;
    std::uint64_t seed = 0;
    std::string out;
};

void write_or_print(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
    } else {
        write_file(path, text);
    }
}

int run_synth(const SynthArgs& a) {
    SynthOptions opt;
    opt.width = a.width;
    opt.height = a.height;
    opt.seed = a.seed;
    opt.constraints.max_tilt = a.max_tilt;
    if (!a.backgrounds.empty()) opt.backgrounds = list_backgrounds(a.backgrounds);
    spdlog::info("synth: {} samples into {}", a.count, a.out);
    const auto m = write_synth_dataset(a.out, a.count, opt, a.jobs);
    spdlog::info("synth: wrote {} entries", m.entries.size());
    return 0;
}

int run_peaks(const PeaksArgs& a) {
    const Heatmap h = read_pfm(a.heatmap);
    DetectionFile d;
    d.image_id = a.image_id.empty() ? fs::path(a.heatmap).stem().string() : a.image_id;
    d.points = extract_peaks(h, a.tau, a.kernel, a.sigma);
    d.source = DetectionSource::heatmap;
    spdlog::info("peaks: {} points", d.points.size());
    write_or_print(a.out, dump_json(detections_to_json(d)) + "\n");
    return 0;
}

int run_fit(const FitArgs& a) {
    const DetectionFile d = read_detections(a.points);
    const Method method = parse_method(a.method);
    PipelineConfig cfg;
    cfg.fit.seed = a.seed;
    std::optional<DeepGPModel> model;
    if (method == Method::deepgp) {
        if (a.model.empty()) fail(ErrorCode::InvalidParams, "--model is required for method deepgp");
        model = read_model(a.model);
        cfg.model = &*model;
    }
    const PointsEstimate est = estimate_from_points(d.points, method, cfg);
    Json j = estimate_to_json(est.estimate);
    j["image_id"] = d.image_id;
    j["method"] = method_name(method);
    if (est.line) {
        j["line"] = {{"rho", est.line->line.rho}, {"theta", est.line->line.theta}};
        j["inliers"] = est.line->inlier_indices;
    }
    if (est.error) j["error"] = *est.error;
    write_or_print(a.out, dump_json(j) + "\n");
    return 0;
}

int run_train(const TrainArgs& a) {
    TrainConfig cfg;
    cfg.steps = a.steps;
    cfg.batch = a.batch;
    cfg.seed = a.seed;
    cfg.learning_rate = a.lr;
    cfg.jobs = a.jobs;
    SampleStreamConfig stream;
    const long every = std::max(1L, a.steps / 20);
    const auto report = deepgp_train(stream, cfg, [&](long step, double loss) {
        if (step % every == 0 || step + 1 == a.steps) spdlog::info("step {} loss {:.6g}", step, loss);
    });
    write_model(a.out, report.model);
    const std::string log = a.log.empty() ? a.out + ".log.jsonl" : a.log;
    write_file(log, training_log_jsonl(cfg, report.losses));
    return 0;
}

PipelineConfig pipeline_config(const std::string& method, const std::string& model_path, std::uint64_t seed,
                                std::optional<DeepGPModel>& model) {
    PipelineConfig cfg;
    cfg.fit.seed = seed;
    if (parse_method(method) == Method::deepgp) {
        if (model_path.empty()) fail(ErrorCode::InvalidParams, "--model is required for method deepgp");
        model = read_model(model_path);
        cfg.model = &*model;
    }
    return cfg;
}

int run_eval(const EvalArgs& a) {
    const DatasetManifest m = read_manifest(a.manifest);
    std::optional<DeepGPModel> model;
    PipelineConfig cfg = pipeline_config(a.method, a.model, a.seed, model);
    cfg.multi_line = a.multi_line;
    BatchOptions opt;
    opt.source = parse_batch_source(a.source);
    opt.n = a.n;
    opt.jobs = a.jobs;
    opt.timing = !a.no_timing;
    const BenchmarkReport r = estimate_batch(m, parse_method(a.method), cfg, opt);
    spdlog::info("eval: mape {:.6g} over {} records", r.mape, r.records.size());
    write_or_print(a.out, dump_json(report_to_json(r)) + "\n");
    if (!a.csv.empty()) write_file(a.csv, report_to_csv(r));
    return 0;
}

int run_bench(const BenchArgs& a) {
    const DatasetManifest m = read_manifest(a.manifest);
    Json rows = Json::array();
    std::printf("%-8s %14s %14s\n", "method", "mape", "ms_per_sample");
    for (const auto& name : a.methods) {
        std::optional<DeepGPModel> model;
        const PipelineConfig cfg = pipeline_config(name, a.model, a.seed, model);
        BatchOptions opt;
        opt.source = parse_batch_source(a.source);
        opt.n = a.n;
        opt.timing = true;
        const BenchmarkReport r = estimate_batch(m, parse_method(name), cfg, opt);
        const double ms = r.ms_per_sample.value_or(0.0);
        std::printf("%-8s %14.6f %14.4f\n", name.c_str(), r.mape, ms);
        rows.push_back(Json{{"method", name}, {"mape", r.mape}, {"ms_per_sample", ms}});
    }
    if (!a.out.empty()) write_file(a.out, dump_json(rows) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rulerkit: ruler scale estimation and synthetic ruler generation"};
    app.require_subcommand(1);
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON file with option values, nested by subcommand");

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Render synthetic rulers and a manifest");
    s->add_option("--count", synth.count, "Number of samples")->capture_default_str();
    s->add_option("--out", synth.out, "Output directory")->required();
    s->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
    s->add_option("--backgrounds", synth.backgrounds, "Directory of PNG/PPM backgrounds");
    s->add_option("--width", synth.width, "Canvas width")->capture_default_str();
    s->add_option("--height", synth.height, "Canvas height")->capture_default_str();
    s->add_option("--max-tilt", synth.max_tilt, "Largest |tilt factor|")->capture_default_str();
    s->add_option("--jobs", synth.jobs, "Worker threads")->capture_default_str();

    PeaksArgs peaks;
    auto* p = app.add_subcommand("peaks", "Extract mark peaks from a PFM heatmap");
    p->add_option("--heatmap", peaks.heatmap, "Input PFM")->required();
    p->add_option("--tau", peaks.tau, "Peak threshold")->capture_default_str();
    p->add_option("--kernel", peaks.kernel, "Smoothing kernel size")->capture_default_str();
    p->add_option("--sigma", peaks.sigma, "Smoothing sigma")->capture_default_str();
    p->add_option("--image-id", peaks.image_id, "Image id (default: file stem)");
    p->add_option("--out", peaks.out, "Detection JSON (default: stdout)");

    FitArgs fit;
    auto* f = app.add_subcommand("fit", "Estimate pixels/cm from a detection file");
    f->add_option("--points", fit.points, "Detection JSON")->required();
    f->add_option("--method", fit.method, "direct | median | gp-de | deepgp")->capture_default_str();
    f->add_option("--model", fit.model, "DGP1 model for deepgp");
    f->add_option("--seed", fit.seed, "Optimizer seed")->capture_default_str();
    f->add_option("--out", fit.out, "Result JSON (default: stdout)");

    TrainArgs train;
    auto* t = app.add_subcommand("deepgp-train", "Train the DeepGP regressor on generated progressions");
    t->add_option("--steps", train.steps, "Optimizer steps")->capture_default_str();
    t->add_option("--batch", train.batch, "Samples per step")->capture_default_str();
    t->add_option("--seed", train.seed, "Random seed")->capture_default_str();
    t->add_option("--lr", train.lr, "Peak learning rate")->capture_default_str();
    t->add_option("--jobs", train.jobs, "Sample generation threads")->capture_default_str();
    t->add_option("--out", train.out, "Model file")->required();
    t->add_option("--log", train.log, "Loss log (default: <out>.log.jsonl)");

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Benchmark a method on a manifest");
    e->add_option("--manifest", ev.manifest, "Dataset manifest")->required();
    e->add_option("--method", ev.method, "direct | median | gp-de | deepgp")->capture_default_str();
    e->add_option("--source", ev.source, "detections | heatmap | gt-render")->capture_default_str();
    e->add_option("--model", ev.model, "DGP1 model for deepgp");
    e->add_option("--n", ev.n, "Base resolution of the metric")->capture_default_str();
    e->add_option("--seed", ev.seed, "Optimizer seed")->capture_default_str();
    e->add_option("--jobs", ev.jobs, "Worker threads")->capture_default_str();
    e->add_flag("--no-timing", ev.no_timing, "Skip the timed pass; report has no times");
    e->add_flag("--multi-line", ev.multi_line, "Estimate every detected ruler line");
    e->add_option("--out", ev.out, "Report JSON (default: stdout)");
    e->add_option("--csv", ev.csv, "Per-record CSV");

    BenchArgs bench;
    auto* b = app.add_subcommand("bench", "Compare per-sample time of several methods");
    b->add_option("--manifest", bench.manifest, "Dataset manifest")->required();
    b->add_option("--methods", bench.methods, "Comma separated methods")->delimiter(',')->capture_default_str();
    b->add_option("--source", bench.source, "detections | heatmap | gt-render")->capture_default_str();
    b->add_option("--model", bench.model, "DGP1 model for deepgp");
    b->add_option("--n", bench.n, "Base resolution of the metric")->capture_default_str();
    b->add_option("--seed", bench.seed, "Optimizer seed")->capture_default_str();
    b->add_option("--out", bench.out, "Summary JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& err) {
        return app.exit(err);
    } catch (const CLI::CallForAllHelp& err) {
        return app.exit(err);
    } catch (const CLI::ParseError& err) {
        print_error("UsageError", err.what());
        return 2;
    }

    setup_logging();
    try {
        if (s->parsed()) return run_synth(synth);
        if (p->parsed()) return run_peaks(peaks);
        if (f->parsed()) return run_fit(fit);
        if (t->parsed()) return run_train(train);
        if (e->parsed()) return run_eval(ev);
        if (b->parsed()) return run_bench(bench);
    } catch (const SchemaError& err) {
        std::cerr << dump_json(Json{{"error",
                                     {{"code", "SchemaViolation"}, {"path", err.path()}, {"message", err.what()}}}})
                  << std::endl;
        return 1;
    } catch (const Error& err) {
        print_error(std::string(error_code_name(err.code())), err.what());
        return 1;
    } catch (const std::exception& err) {
        print_error("Internal", err.what());
        return 1;
    }
    return 0;
}
