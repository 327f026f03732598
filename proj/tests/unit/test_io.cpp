/**
 * @file test_io.cpp
 * @brief Round trips and typed failures for every file format
 */
#include "test_support.hpp"

#include <rulerkit/io.hpp>

#include <cmath>
#include <cstring>
#include <limits>
#include <random>

using namespace rulerkit;

namespace {

Heatmap random_heatmap(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::vector<float> v(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (auto& x : v) x = u(rng);
    v[0] = 0.0f;
    v[1] = 1.0f;
    v[2] = std::numeric_limits<float>::denorm_min();
    return Heatmap(w, h, std::move(v));
}

ImageRGB random_image(int w, int h, std::uint64_t seed) {
    ImageRGB img(w, h);
    std::mt19937_64 rng(seed);
    for (auto& b : img.data()) b = static_cast<std::uint8_t>(rng());
    return img;
}

double awkward(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    return u(rng) / 3.0;
}

template <class F>
void expect_schema_path(F&& f, const std::string& path) {
    try {
        f();
        ADD_FAILURE() << "no SchemaError";
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.path(), path) << e.what();
        EXPECT_EQ(e.code(), ErrorCode::SchemaViolation);
    }
}

}  // namespace

TEST(Pfm, RoundTripBitIdentical) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto h = random_heatmap(7 + static_cast<int>(seed), 3 + static_cast<int>(seed) * 2, seed);
        const auto back = decode_pfm(encode_pfm(h));
        ASSERT_EQ(back.width(), h.width());
        ASSERT_EQ(back.height(), h.height());
        EXPECT_EQ(std::memcmp(back.values().data(), h.values().data(), h.size() * sizeof(float)), 0);
    }
}

TEST(Pfm, HeaderAndRowOrder) {
    Heatmap h(2, 2);
    h.set(0, 0, 0.25f);  // top-left
    h.set(1, 1, 1.0f);   // bottom-right
    const std::string bytes = encode_pfm(h);
    const std::string header = "Pf\n2 2\n-1.0\n";
    ASSERT_EQ(bytes.substr(0, header.size()), header);
    ASSERT_EQ(bytes.size(), header.size() + 16);
    float first_row[2];
    std::memcpy(first_row, bytes.data() + header.size(), 8);
    // bottom row is stored first
    EXPECT_EQ(first_row[0], 0.0f);
    EXPECT_EQ(first_row[1], 1.0f);
    float second_row[2];
    std::memcpy(second_row, bytes.data() + header.size() + 8, 8);
    EXPECT_EQ(second_row[0], 0.25f);
}

TEST(Pfm, FileRoundTrip) {
    const auto dir = scratch_dir("pfm");
    const auto h = random_heatmap(16, 9, 42);
    write_pfm(dir / "h.pfm", h);
    EXPECT_EQ(read_pfm(dir / "h.pfm"), h);
}

TEST(Pfm, BigEndianRejected) {
    std::string bytes = "Pf\n1 1\n1.0\n";
    bytes.append(4, '\0');
    EXPECT_RK_ERROR(decode_pfm(bytes), ErrorCode::MalformedHeader);
}

TEST(Pfm, Truncated) {
    std::string bytes = encode_pfm(random_heatmap(4, 4, 1));
    bytes.resize(bytes.size() - 3);
    EXPECT_RK_ERROR(decode_pfm(bytes), ErrorCode::TruncatedPayload);
}

TEST(Pfm, MalformedInputsAreTyped) {
    EXPECT_RK_ERROR(decode_pfm(""), ErrorCode::MalformedHeader);
    EXPECT_RK_ERROR(decode_pfm("PF\n1 1\n-1.0\n"), ErrorCode::MalformedHeader);
    EXPECT_RK_ERROR(decode_pfm("Pf\n0 3\n-1.0\n"), ErrorCode::MalformedHeader);
    EXPECT_RK_ERROR(decode_pfm("Pf\nx 3\n-1.0\n"), ErrorCode::MalformedHeader);
    // random garbage never escapes as anything but a typed error
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        std::string junk = "Pf\n";
        const int len = static_cast<int>(rng() % 40);
        for (int k = 0; k < len; ++k) junk.push_back(static_cast<char>(rng()));
        try {
            decode_pfm(junk);
        } catch (const Error&) {
        }
    }
}

TEST(Images, PngRoundTrip) {
    const auto img = random_image(31, 17, 3);
    EXPECT_EQ(decode_png(encode_png(img)), img);
}

TEST(Images, PpmRoundTripAndHeader) {
    const auto img = random_image(5, 4, 8);
    const std::string bytes = encode_ppm(img);
    EXPECT_EQ(bytes.substr(0, 11), "P6\n5 4\n255\n");
    EXPECT_EQ(decode_ppm(bytes), img);
    EXPECT_RK_ERROR(decode_ppm(bytes.substr(0, bytes.size() - 1)), ErrorCode::TruncatedPayload);
    EXPECT_RK_ERROR(decode_ppm("P3\n1 1\n255\n0 0 0"), ErrorCode::MalformedHeader);
}

TEST(Images, FileDispatchBySignature) {
    const auto dir = scratch_dir("img");
    const auto img = random_image(12, 10, 4);
    write_image(dir / "a.png", img);
    write_image(dir / "b.ppm", img);
    EXPECT_EQ(read_image(dir / "a.png"), img);
    EXPECT_EQ(read_image(dir / "b.ppm"), img);
    EXPECT_EQ(read_file(dir / "b.ppm").substr(0, 2), "P6");
    EXPECT_RK_ERROR(decode_png("not a png"), ErrorCode::MalformedHeader);
    EXPECT_RK_ERROR(read_image(dir / "missing.png"), ErrorCode::IoError);
}

TEST(Json, DoublesRoundTripExactly) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 500; ++i) {
        const double v = awkward(rng) * std::pow(10.0, static_cast<int>(rng() % 40) - 20);
        const Json j = parse_json(dump_json(Json(v)));
        EXPECT_EQ(j.get<double>(), v);
    }
    EXPECT_RK_ERROR(parse_json("{"), ErrorCode::SchemaViolation);
}

TEST(Annotation, PointRoundTrip) {
    std::mt19937_64 rng(12);
    AnnotationDocument doc;
    PointAnnotation pa;
    pa.rulers.push_back({"r0", {{awkward(rng), awkward(rng)}, {awkward(rng), awkward(rng)}}});
    doc.annotation = pa;
    const auto back = annotation_from_json(parse_json(dump_json(annotation_to_json(doc))));
    const auto& got = std::get<PointAnnotation>(back.annotation);
    ASSERT_EQ(got.rulers.size(), 1u);
    EXPECT_EQ(got.rulers[0].id, "r0");
    EXPECT_EQ(got.rulers[0].marks, pa.rulers[0].marks);
}

TEST(Annotation, LineRoundTripViaFile) {
    const auto dir = scratch_dir("ann");
    AnnotationDocument doc;
    doc.annotation = LineAnnotation{{{"a", {0.1, 0.2}, {100.3, 5.0 / 3.0}, 7.25}, {"b", {1, 1}, {2, 9}, 1.0 / 7.0}}};
    write_annotation(dir / "a.json", doc);
    const auto back = read_annotation(dir / "a.json");
    const auto& got = std::get<LineAnnotation>(back.annotation).rulers;
    const auto& want = std::get<LineAnnotation>(doc.annotation).rulers;
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].id, want[i].id);
        EXPECT_EQ(got[i].a, want[i].a);
        EXPECT_EQ(got[i].b, want[i].b);
        EXPECT_EQ(got[i].length_cm, want[i].length_cm);
    }
}

TEST(Annotation, MissingLengthPath) {
    const Json j = parse_json(R"({"version":1,"type":"lines","rulers":[{"id":"x","endpoints":[[0,0],[1,1]]}]})");
    expect_schema_path([&] { annotation_from_json(j); }, "rulers[0].length_cm");
}

TEST(Annotation, OtherSchemaPaths) {
    expect_schema_path([] { annotation_from_json(parse_json(R"({"version":2,"type":"points","rulers":[]})")); },
                       "version");
    expect_schema_path([] { annotation_from_json(parse_json(R"({"version":1,"type":"blobs","rulers":[]})")); },
                       "type");
    expect_schema_path(
        [] { annotation_from_json(parse_json(R"({"version":1,"type":"points","rulers":[{"marks":[[0,0],[1,"a"]]}]})")); },
        "rulers[0].marks[1][1]");
}

TEST(Annotation, ExtrasPreserved) {
    const std::string text =
        R"({"version":1,"type":"points","note":{"k":[1,2]},"rulers":[{"id":"r","marks":[[0,0],[3,4]],"colour":"red"}]})";
    const auto doc = annotation_from_json(parse_json(text));
    EXPECT_EQ(doc.extras.at("note"), parse_json(R"({"k":[1,2]})"));
    ASSERT_EQ(doc.ruler_extras.size(), 1u);
    EXPECT_EQ(doc.ruler_extras[0].at("colour"), "red");
    EXPECT_EQ(annotation_to_json(doc), parse_json(text));
}

TEST(Detections, RoundTrip) {
    DetectionFile d;
    d.image_id = "img7";
    d.points = {{1.0 / 3.0, 2.5}, {-0.0, 1e-300}};
    d.source = DetectionSource::ground_truth;
    d.extras["detector"] = "v2";
    const auto back = detections_from_json(parse_json(dump_json(detections_to_json(d))));
    EXPECT_EQ(back.image_id, d.image_id);
    EXPECT_EQ(back.points, d.points);
    EXPECT_EQ(back.source, d.source);
    EXPECT_EQ(back.extras, d.extras);
    EXPECT_EQ(detections_to_json(d).at("source"), "ground-truth");
    Json bad = detections_to_json(d);
    bad["source"] = "camera";
    expect_schema_path([&] { detections_from_json(bad); }, "source");
}

TEST(Manifest, RoundTripAndFileChecks) {
    const auto dir = scratch_dir("manifest");
    write_image(dir / "a.png", random_image(8, 6, 1));
    write_pfm(dir / "a.pfm", random_heatmap(8, 6, 2));
    DatasetManifest m;
    ManifestEntry e;
    e.id = "a";
    e.image = "a.png";
    e.width = 8;
    e.height = 6;
    e.heatmap = "a.pfm";
    e.detections = std::vector<Point2>{{1.5, 2.25}};
    e.annotation.annotation = PointAnnotation{{{"r", {{0, 0}, {1.0 / 3.0, 0}}}}};
    e.extras["homography"] = Json::array({1, 0, 0, 0, 1, 0, 0, 0, 1});
    m.entries.push_back(e);
    m.extras["generator"] = "unit";
    write_manifest(dir / "m.json", m);
    const auto back = read_manifest(dir / "m.json");
    EXPECT_EQ(manifest_to_json(back), manifest_to_json(m));
    EXPECT_EQ(back.resolve("a.png"), dir / "a.png");

    m.entries[0].image = "gone.png";
    write_manifest(dir / "m2.json", m);
    expect_schema_path([&] { read_manifest(dir / "m2.json"); }, "entries[0].image");
    EXPECT_NO_THROW(read_manifest(dir / "m2.json", false));

    m.entries[0].image = "a.png";
    m.entries.push_back(m.entries[0]);
    write_manifest(dir / "m3.json", m);
    expect_schema_path([&] { read_manifest(dir / "m3.json"); }, "entries[1].id");
}

TEST(Spec, RoundTrip) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        const auto s = random_spec(rng, 768, 768);
        const Json j = spec_to_json(s);
        const Json again = spec_to_json(spec_from_json(parse_json(dump_json(j))));
        EXPECT_EQ(again, j);
    }
}

TEST(Estimate, RoundTrip) {
    ScaleEstimate e;
    e.status = EstimateStatus::ok;
    e.pixels_per_cm = 37.795275590551178;
    e.params = GPParams{1.0 / 3.0, 12.5, 0.97};
    e.marks_used = 11;
    const auto back = estimate_from_json(parse_json(dump_json(estimate_to_json(e))));
    EXPECT_EQ(back.pixels_per_cm, e.pixels_per_cm);
    EXPECT_EQ(back.status, e.status);
    EXPECT_EQ(back.params, e.params);
    EXPECT_EQ(back.marks_used, e.marks_used);
    const auto f = estimate_from_json(estimate_to_json(ScaleEstimate::failed()));
    EXPECT_FALSE(f.ok());
    EXPECT_FALSE(f.params.has_value());
}

TEST(Report, RoundTripAndCsv) {
    BenchmarkReport r;
    r.n = 768;
    r.mape = 1.0 / 3.0;
    r.ms_per_sample = 0.125;
    EvalRecord a;
    a.id = "x";
    a.predicted = 10.1;
    a.ground_truth = 10.0;
    a.size = 768;
    a.elapsed_ms = 0.5;
    EvalRecord b = a;
    b.id = "y";
    b.predicted = 0.0;
    b.elapsed_ms.reset();
    b.error = "failed";
    r.records = {a, b};
    const auto back = report_from_json(parse_json(dump_json(report_to_json(r))));
    EXPECT_EQ(report_to_json(back), report_to_json(r));
    EXPECT_FALSE(report_to_json(r).at("records").at(1).contains("elapsed_ms"));
    const std::string csv = report_to_csv(r);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Model, Dgp1RoundTrip) {
    const std::vector<int> sizes{128, 16, 8, 3};
    const auto m = DeepGPModel::create(sizes, 9);
    const std::string bytes = encode_model(m);
    EXPECT_EQ(bytes.substr(0, 4), "DGP1");
    std::size_t params = 0;
    for (std::size_t i = 1; i < sizes.size(); ++i)
        params += static_cast<std::size_t>(sizes[i - 1] * sizes[i] + sizes[i]);
    EXPECT_EQ(bytes.size(), 8 + 8 * (sizes.size() - 1) + 4 * params);
    EXPECT_EQ(decode_model(bytes), m);
    const auto dir = scratch_dir("model");
    write_model(dir / "m.dgp", m);
    EXPECT_EQ(read_model(dir / "m.dgp"), m);
}

TEST(Model, Dgp1Errors) {
    const std::vector<int> sizes{4, 3};
    const std::string bytes = encode_model(DeepGPModel::create(sizes, 1));
    EXPECT_RK_ERROR(decode_model("DGP2" + bytes.substr(4)), ErrorCode::MalformedHeader);
    EXPECT_RK_ERROR(decode_model(bytes.substr(0, bytes.size() - 1)), ErrorCode::TruncatedPayload);
    EXPECT_RK_ERROR(decode_model(bytes.substr(0, 10)), ErrorCode::TruncatedPayload);
}

TEST(TrainingLog, OneObjectPerLine) {
    TrainConfig cfg;
    const std::vector<double> losses{0.5, 0.25, 0.125};
    const std::string log = training_log_jsonl(cfg, losses);
    std::size_t lines = 0, pos = 0;
    while ((pos = log.find('\n', pos)) != std::string::npos) {
        ++lines;
        ++pos;
    }
    EXPECT_EQ(lines, losses.size());
    const Json first = parse_json(log.substr(0, log.find('\n')));
    EXPECT_EQ(first.at("loss").get<double>(), 0.5);
    EXPECT_TRUE(first.contains("lr"));
    EXPECT_TRUE(first.contains("step"));
}
