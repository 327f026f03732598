/**
 * @file test_cli.cpp
 * @brief Runs the command-line binary and compares against library calls
 */
#include "test_support.hpp"

#include <rulerkit/pipeline.hpp>

#include <cstdlib>
#include <string>
#include <sys/wait.h>

using namespace rulerkit;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

RunResult run_cli(const std::string& args, const fs::path& dir) {
    const fs::path out = dir / "stdout.txt";
    const fs::path err = dir / "stderr.txt";
    const std::string cmd =
        std::string("\"") + RULERKIT_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(out);
    r.err = read_file(err);
    return r;
}

std::string tree_bytes(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) files.push_back(fs::relative(e.path(), dir));
    }
    std::sort(files.begin(), files.end());
    std::string all;
    for (const auto& f : files) all += f.string() + "\n" + read_file(dir / f);
    return all;
}

}  // namespace

TEST(Cli, SynthIsDeterministic) {
    const auto dir = scratch_dir("cli_synth");
    const std::string common = " --count 3 --seed 7 --width 320 --height 320";
    ASSERT_EQ(run_cli("synth --out \"" + (dir / "a").string() + "\"" + common, dir).exit_code, 0);
    ASSERT_EQ(run_cli("synth --out \"" + (dir / "b").string() + "\"" + common, dir).exit_code, 0);
    const std::string a = tree_bytes(dir / "a");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, tree_bytes(dir / "b"));
    EXPECT_EQ(read_manifest(dir / "a" / "manifest.json").entries.size(), 3u);
}

TEST(Cli, FitTwoMarksGpDeFailsCleanly) {
    const auto dir = scratch_dir("cli_fit");
    DetectionFile d;
    d.image_id = "two";
    d.points = {{10, 10}, {22, 10}};
    write_detections(dir / "det.json", d);
    const auto r = run_cli("fit --points \"" + (dir / "det.json").string() + "\" --method gp-de", dir);
    EXPECT_EQ(r.exit_code, 0) << r.err;
    const Json j = parse_json(r.out);
    EXPECT_EQ(j.at("status"), "failed");
    EXPECT_EQ(j.at("pixels_per_cm").get<double>(), 0.0);
}

TEST(Cli, FitMatchesLibrary) {
    const auto dir = scratch_dir("cli_fit_lib");
    DetectionFile d;
    d.image_id = "ruler";
    for (int i = 0; i < 9; ++i) d.points.push_back({20.0 + 13.0 * i * 0.98, 40.0 + 2.0 * i});
    d.points.push_back({90, 120});
    write_detections(dir / "det.json", d);
    const auto r = run_cli("fit --points \"" + (dir / "det.json").string() + "\" --method gp-de --seed 3 --out \"" +
                               (dir / "res.json").string() + "\"",
                           dir);
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto got = estimate_from_json(parse_json(read_file(dir / "res.json")));
    PipelineConfig cfg;
    cfg.fit.seed = 3;
    const auto want = estimate_from_points(d.points, Method::gp_de, cfg).estimate;
    EXPECT_EQ(got.pixels_per_cm, want.pixels_per_cm);
    EXPECT_EQ(got.params, want.params);
}

TEST(Cli, EvalMatchesLibrary) {
    const auto dir = scratch_dir("cli_eval");
    SynthOptions opt;
    opt.seed = 11;
    opt.width = 384;
    opt.height = 384;
    opt.constraints.max_length_cm = 8;
    write_synth_dataset(dir / "data", 6, opt, 1);
    const fs::path manifest = dir / "data" / "manifest.json";
    const auto r = run_cli("eval --manifest \"" + manifest.string() +
                               "\" --method gp-de --source gt-render --n 768 --seed 2 --no-timing --out \"" +
                               (dir / "report.json").string() + "\" --csv \"" + (dir / "report.csv").string() + "\"",
                           dir);
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto got = report_from_json(parse_json(read_file(dir / "report.json")));
    PipelineConfig cfg;
    cfg.fit.seed = 2;
    BatchOptions b;
    b.source = BatchSource::gt_render;
    const auto want = estimate_batch(read_manifest(manifest), Method::gp_de, cfg, b);
    EXPECT_NEAR(got.mape, want.mape, 1e-12);
    EXPECT_EQ(report_to_json(got), report_to_json(want));
    EXPECT_EQ(read_file(dir / "report.csv"), report_to_csv(want));
}

TEST(Cli, ConfigFileAndFlagPrecedence) {
    const auto dir = scratch_dir("cli_config");
    DetectionFile d;
    d.image_id = "x";
    for (int i = 0; i < 6; ++i) d.points.push_back({10.0 + 10.0 * i, 5.0});
    write_detections(dir / "det.json", d);
    write_file(dir / "cfg.json", Json{{"fit", {{"method", "bogus"}, {"points", (dir / "det.json").string()}}}}.dump());
    const auto bad = run_cli("--config \"" + (dir / "cfg.json").string() + "\" fit", dir);
    EXPECT_NE(bad.exit_code, 0);
    const auto good = run_cli("--config \"" + (dir / "cfg.json").string() + "\" fit --method direct", dir);
    ASSERT_EQ(good.exit_code, 0) << good.err;
    EXPECT_NEAR(parse_json(good.out).at("pixels_per_cm").get<double>(), 10.0, 1e-9);
}

TEST(Cli, ErrorsAreJsonOnStderr) {
    const auto dir = scratch_dir("cli_err");
    const auto missing = run_cli("fit --points \"" + (dir / "nope.json").string() + "\"", dir);
    EXPECT_NE(missing.exit_code, 0);
    const Json e = parse_json(missing.err.substr(missing.err.find('{')));
    EXPECT_EQ(e.at("error").at("code"), "IoError");

    write_file(dir / "bad.json", R"({"version":1,"points":[[0,0]]})");
    const auto schema = run_cli("fit --points \"" + (dir / "bad.json").string() + "\"", dir);
    EXPECT_NE(schema.exit_code, 0);
    const Json s = parse_json(schema.err.substr(schema.err.find('{')));
    EXPECT_EQ(s.at("error").at("code"), "SchemaViolation");
    EXPECT_EQ(s.at("error").at("path"), "image_id");

    const auto usage = run_cli("fit", dir);
    EXPECT_NE(usage.exit_code, 0);
    EXPECT_EQ(parse_json(usage.err.substr(usage.err.find('{'))).at("error").at("code"), "UsageError");
}

TEST(Cli, PeaksWritesDetections) {
    const auto dir = scratch_dir("cli_peaks");
    const std::vector<Point2> pts{{10, 10}, {30, 10}, {50, 10}};
    write_pfm(dir / "h.pfm", render_gaussians(pts, 2.0, 64, 24));
    const auto r = run_cli("peaks --heatmap \"" + (dir / "h.pfm").string() + "\" --tau 0.5 --kernel 5 --sigma 1", dir);
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const auto d = detections_from_json(parse_json(r.out));
    EXPECT_EQ(d.image_id, "h");
    EXPECT_EQ(d.points, pts);
    EXPECT_EQ(d.source, DetectionSource::heatmap);
}
