/**
 * @file io.cpp
 */
#include <rulerkit/io.hpp>
#include <rulerkit/error.hpp>

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace rulerkit {

namespace fs = std::filesystem;

// ---- raw files ----------------------------------------------------------

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) fail(ErrorCode::IoError, "error reading '" + path.string() + "'");
    return std::move(ss).str();
}

void write_file(const fs::path& path, std::string_view bytes) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    fs::path tmp = path;
    tmp += ".part";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::IoError, "cannot open '" + tmp.string() + "' for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) fail(ErrorCode::IoError, "error writing '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) fail(ErrorCode::IoError, "cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

std::uint32_t get_u32(std::string_view bytes, std::size_t pos) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + static_cast<std::size_t>(i)])) << (8 * i);
    }
    return v;
}

float get_f32(std::string_view bytes, std::size_t pos) { return std::bit_cast<float>(get_u32(bytes, pos)); }

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

/// Whitespace-separated header tokens shared by the PFM and PPM parsers.
class HeaderReader {
public:
    HeaderReader(std::string_view bytes, std::string_view format) : bytes_(bytes), format_(format) {}

    std::string token(bool comments) {
        while (pos_ < bytes_.size()) {
            if (is_space(bytes_[pos_])) {
                ++pos_;
            } else if (comments && bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
        const std::size_t start = pos_;
        while (pos_ < bytes_.size() && !is_space(bytes_[pos_])) ++pos_;
        if (start == pos_) fail(ErrorCode::MalformedHeader, std::string(format_) + ": header ends early");
        return std::string(bytes_.substr(start, pos_ - start));
    }

    long integer(bool comments, const char* what) {
        const std::string tok = token(comments);
        char* end = nullptr;
        const long v = std::strtol(tok.c_str(), &end, 10);
        if (end != tok.c_str() + tok.size() || v <= 0 || v > (1L << 20)) {
            fail(ErrorCode::MalformedHeader, std::string(format_) + ": bad " + what + " '" + tok + "'");
        }
        return v;
    }

    /// Consumes the single whitespace byte that ends the header.
    std::size_t payload_start() {
        if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
            fail(ErrorCode::MalformedHeader, std::string(format_) + ": header not terminated");
        }
        return pos_ + 1;
    }

private:
    std::string_view bytes_;
    std::string_view format_;
    std::size_t pos_ = 0;
};

}  // namespace

// ---- PFM ----------------------------------------------------------------

std::string encode_pfm(const Heatmap& h) {
    std::string out = "Pf\n" + std::to_string(h.width()) + " " + std::to_string(h.height()) + "\n-1.0\n";
    out.reserve(out.size() + h.size() * 4);
    for (int y = h.height() - 1; y >= 0; --y) {
        for (int x = 0; x < h.width(); ++x) put_f32(out, h.at(x, y));
    }
    return out;
}

Heatmap decode_pfm(std::string_view bytes) {
    HeaderReader header(bytes, "PFM");
    const std::string magic = header.token(false);
    if (magic == "PF") fail(ErrorCode::MalformedHeader, "PFM: colour maps are not supported");
    if (magic != "Pf") fail(ErrorCode::MalformedHeader, "PFM: bad magic '" + magic + "'");
    const long w = header.integer(false, "width");
    const long h = header.integer(false, "height");
    const std::string scale_tok = header.token(false);
    char* end = nullptr;
    const double scale = std::strtod(scale_tok.c_str(), &end);
    if (end != scale_tok.c_str() + scale_tok.size() || !std::isfinite(scale) || scale == 0.0) {
        fail(ErrorCode::MalformedHeader, "PFM: bad scale '" + scale_tok + "'");
    }
    if (scale > 0.0) fail(ErrorCode::MalformedHeader, "PFM: big-endian data is not supported");
    const std::size_t start = header.payload_start();
    const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (bytes.size() - start < count * 4) {
        fail(ErrorCode::TruncatedPayload, "PFM: expected " + std::to_string(count * 4) + " payload bytes, got " +
                                              std::to_string(bytes.size() - start));
    }
    std::vector<float> values(count);
    std::size_t pos = start;
    for (long y = h - 1; y >= 0; --y) {
        for (long x = 0; x < w; ++x) {
            values[static_cast<std::size_t>(y * w + x)] = get_f32(bytes, pos);
            pos += 4;
        }
    }
    return Heatmap(static_cast<int>(w), static_cast<int>(h), std::move(values));
}

void write_pfm(const fs::path& path, const Heatmap& h) { write_file(path, encode_pfm(h)); }

Heatmap read_pfm(const fs::path& path) { return decode_pfm(read_file(path)); }

// ---- images -------------------------------------------------------------

namespace {

struct PngReadState {
    std::string_view bytes;
    std::size_t pos = 0;
};

void png_error_fn(png_structp png, png_const_charp msg) {
    auto* text = static_cast<std::string*>(png_get_error_ptr(png));
    *text = msg;
    png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

void png_write_fn(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<std::string*>(png_get_io_ptr(png));
    out->append(reinterpret_cast<const char*>(data), len);
}

void png_flush_fn(png_structp) {}

void png_read_fn(png_structp png, png_bytep data, png_size_t len) {
    auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
    if (st->bytes.size() - st->pos < len) png_error(png, "truncated PNG data");
    std::memcpy(data, st->bytes.data() + st->pos, len);
    st->pos += len;
}

}  // namespace

std::string encode_png(const ImageRGB& img) {
    if (img.empty()) fail(ErrorCode::InvalidValue, "encode_png: empty image");
    std::string out;
    std::string message;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_error_fn, png_warning_fn);
    if (!png) fail(ErrorCode::IoError, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        fail(ErrorCode::IoError, "png_create_info_struct failed");
    }
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.height()));
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCode::IoError, "PNG encode: " + message);
    }
    png_set_write_fn(png, &out, png_write_fn, png_flush_fn);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    auto* base = const_cast<std::uint8_t*>(img.data().data());
    for (int y = 0; y < img.height(); ++y) {
        rows[static_cast<std::size_t>(y)] = base + static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width()) * 3;
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

ImageRGB decode_png(std::string_view bytes) {
    if (bytes.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) != 0) {
        fail(ErrorCode::MalformedHeader, "PNG: bad signature");
    }
    std::string message;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_error_fn, png_warning_fn);
    if (!png) fail(ErrorCode::IoError, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail(ErrorCode::IoError, "png_create_info_struct failed");
    }
    PngReadState state{bytes, 0};
    ImageRGB img;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        const bool truncated = message.find("truncated") != std::string::npos;
        fail(truncated ? ErrorCode::TruncatedPayload : ErrorCode::MalformedHeader, "PNG decode: " + message);
    }
    png_set_read_fn(png, &state, png_read_fn);
    png_read_info(png, info);
    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
        png_set_expand_gray_1_2_4_to_8(png);
        png_set_gray_to_rgb(png);
    }
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);
    if (w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16)) png_error(png, "unsupported dimensions");
    img = ImageRGB(static_cast<int>(w), static_cast<int>(h));
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = img.data().data() + static_cast<std::size_t>(y) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

std::string encode_ppm(const ImageRGB& img) {
    std::string out = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.data().data()), img.data().size());
    return out;
}

ImageRGB decode_ppm(std::string_view bytes) {
    HeaderReader header(bytes, "PPM");
    if (header.token(true) != "P6") fail(ErrorCode::MalformedHeader, "PPM: only binary P6 is supported");
    const long w = header.integer(true, "width");
    const long h = header.integer(true, "height");
    const long maxval = header.integer(true, "maxval");
    if (maxval != 255) fail(ErrorCode::MalformedHeader, "PPM: only maxval 255 is supported");
    const std::size_t start = header.payload_start();
    const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3;
    if (bytes.size() - start < need) fail(ErrorCode::TruncatedPayload, "PPM: payload too short");
    std::vector<std::uint8_t> data(need);
    std::memcpy(data.data(), bytes.data() + start, need);
    return ImageRGB(static_cast<int>(w), static_cast<int>(h), std::move(data));
}

ImageRGB read_image(const fs::path& path) {
    const std::string bytes = read_file(path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes);
    return decode_png(bytes);
}

void write_image(const fs::path& path, const ImageRGB& img) {
    write_file(path, path.extension() == ".ppm" ? encode_ppm(img) : encode_png(img));
}

// ---- JSON helpers -------------------------------------------------------

std::string dump_json(const Json& j) { return j.dump(); }

Json parse_json(std::string_view text) {
    try {
        return Json::parse(text.begin(), text.end());
    } catch (const Json::parse_error& e) {
        throw SchemaError("$", e.what());
    }
}

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

const Json& require(const Json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path.empty() ? "$" : path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError(join(path, key), "missing required field");
    return *it;
}

double number(const Json& j, const std::string& path) {
    if (!j.is_number()) throw SchemaError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw SchemaError(path, "expected a finite number");
    return v;
}

long long integer(const Json& j, const std::string& path) {
    if (!j.is_number_integer()) throw SchemaError(path, "expected an integer");
    return j.get<long long>();
}

std::string string(const Json& j, const std::string& path) {
    if (!j.is_string()) throw SchemaError(path, "expected a string");
    return j.get<std::string>();
}

bool boolean(const Json& j, const std::string& path) {
    if (!j.is_boolean()) throw SchemaError(path, "expected a boolean");
    return j.get<bool>();
}

const Json& array(const Json& j, const std::string& path) {
    if (!j.is_array()) throw SchemaError(path, "expected an array");
    return j;
}

Json point_json(const Point2& p) { return Json::array({p.x, p.y}); }

Point2 point_from(const Json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2) throw SchemaError(path, "expected [x, y]");
    return {number(j[0], index(path, 0)), number(j[1], index(path, 1))};
}

Json points_json(const std::vector<Point2>& pts) {
    Json a = Json::array();
    for (const auto& p : pts) a.push_back(point_json(p));
    return a;
}

std::vector<Point2> points_from(const Json& j, const std::string& path) {
    array(j, path);
    std::vector<Point2> pts;
    pts.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) pts.push_back(point_from(j[i], index(path, i)));
    return pts;
}

Json extras_of(const Json& j, std::initializer_list<const char*> known) {
    Json extras = Json::object();
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::none_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; })) {
            extras[it.key()] = it.value();
        }
    }
    return extras;
}

void merge_extras(Json& j, const Json& extras) {
    if (!extras.is_object()) return;
    for (auto it = extras.begin(); it != extras.end(); ++it) {
        if (!j.contains(it.key())) j[it.key()] = it.value();
    }
}

void check_version(const Json& j, const std::string& path) {
    const std::string p = join(path, "version");
    if (integer(require(j, "version", path), p) != 1) throw SchemaError(p, "unsupported version");
}

Json rgb_json(Rgb c) { return Json::array({c.r, c.g, c.b}); }

Rgb rgb_from(const Json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 3) throw SchemaError(path, "expected [r, g, b]");
    Rgb c;
    std::uint8_t* slots[3] = {&c.r, &c.g, &c.b};
    for (std::size_t i = 0; i < 3; ++i) {
        const long long v = integer(j[i], index(path, i));
        if (v < 0 || v > 255) throw SchemaError(index(path, i), "channel out of range");
        *slots[i] = static_cast<std::uint8_t>(v);
    }
    return c;
}

}  // namespace

// ---- annotations ----------------------------------------------------------

Json annotation_to_json(const AnnotationDocument& doc) {
    Json j = Json::object();
    j["version"] = 1;
    Json rulers = Json::array();
    if (const auto* pa = std::get_if<PointAnnotation>(&doc.annotation)) {
        j["type"] = "points";
        for (std::size_t i = 0; i < pa->rulers.size(); ++i) {
            Json r = {{"id", pa->rulers[i].id}, {"marks", points_json(pa->rulers[i].marks)}};
            if (i < doc.ruler_extras.size()) merge_extras(r, doc.ruler_extras[i]);
            rulers.push_back(std::move(r));
        }
    } else {
        const auto& la = std::get<LineAnnotation>(doc.annotation);
        j["type"] = "lines";
        for (std::size_t i = 0; i < la.rulers.size(); ++i) {
            const auto& l = la.rulers[i];
            Json r = {{"id", l.id},
                      {"endpoints", Json::array({point_json(l.a), point_json(l.b)})},
                      {"length_cm", l.length_cm}};
            if (i < doc.ruler_extras.size()) merge_extras(r, doc.ruler_extras[i]);
            rulers.push_back(std::move(r));
        }
    }
    j["rulers"] = std::move(rulers);
    merge_extras(j, doc.extras);
    return j;
}

AnnotationDocument annotation_from_json(const Json& j, const std::string& path) {
    check_version(j, path);
    const std::string type = string(require(j, "type", path), join(path, "type"));
    const std::string rpath = join(path, "rulers");
    const Json& rulers = array(require(j, "rulers", path), rpath);
    AnnotationDocument doc;
    doc.extras = extras_of(j, {"version", "type", "rulers"});
    auto ruler_id = [&](const Json& r, const std::string& p, std::size_t i) {
        auto it = r.find("id");
        return it == r.end() ? std::to_string(i) : string(*it, join(p, "id"));
    };
    if (type == "points") {
        PointAnnotation pa;
        for (std::size_t i = 0; i < rulers.size(); ++i) {
            const std::string p = index(rpath, i);
            const Json& r = rulers[i];
            RulerPoints rp;
            rp.id = ruler_id(r, p, i);
            rp.marks = points_from(require(r, "marks", p), join(p, "marks"));
            if (rp.marks.size() < 2) throw SchemaError(join(p, "marks"), "a ruler needs at least 2 marks");
            pa.rulers.push_back(std::move(rp));
            doc.ruler_extras.push_back(extras_of(r, {"id", "marks"}));
        }
        doc.annotation = std::move(pa);
    } else if (type == "lines") {
        LineAnnotation la;
        for (std::size_t i = 0; i < rulers.size(); ++i) {
            const std::string p = index(rpath, i);
            const Json& r = rulers[i];
            RulerLine rl;
            rl.id = ruler_id(r, p, i);
            const std::string ep = join(p, "endpoints");
            const auto ends = points_from(require(r, "endpoints", p), ep);
            if (ends.size() != 2) throw SchemaError(ep, "expected exactly two endpoints");
            if (ends[0] == ends[1]) throw SchemaError(ep, "endpoints coincide");
            rl.a = ends[0];
            rl.b = ends[1];
            const std::string lp = join(p, "length_cm");
            rl.length_cm = number(require(r, "length_cm", p), lp);
            if (!(rl.length_cm > 0.0)) throw SchemaError(lp, "must be > 0");
            la.rulers.push_back(std::move(rl));
            doc.ruler_extras.push_back(extras_of(r, {"id", "endpoints", "length_cm"}));
        }
        doc.annotation = std::move(la);
    } else {
        throw SchemaError(join(path, "type"), "expected \"points\" or \"lines\"");
    }
    return doc;
}

void write_annotation(const fs::path& path, const AnnotationDocument& doc) {
    write_file(path, dump_json(annotation_to_json(doc)) + "\n");
}

AnnotationDocument read_annotation(const fs::path& path) { return annotation_from_json(parse_json(read_file(path))); }

// ---- detections ---------------------------------------------------------

namespace {

const char* source_name(DetectionSource s) {
    switch (s) {
        case DetectionSource::heatmap: return "heatmap";
        case DetectionSource::external: return "external";
        case DetectionSource::ground_truth: return "ground-truth";
    }
    return "external";
}

}  // namespace

Json detections_to_json(const DetectionFile& d) {
    Json j = {{"version", 1}, {"image_id", d.image_id}, {"points", points_json(d.points)}};
    if (d.source) j["source"] = source_name(*d.source);
    merge_extras(j, d.extras);
    return j;
}

DetectionFile detections_from_json(const Json& j, const std::string& path) {
    check_version(j, path);
    DetectionFile d;
    d.image_id = string(require(j, "image_id", path), join(path, "image_id"));
    d.points = points_from(require(j, "points", path), join(path, "points"));
    if (auto it = j.find("source"); it != j.end()) {
        const std::string s = string(*it, join(path, "source"));
        if (s == "heatmap") d.source = DetectionSource::heatmap;
        else if (s == "external") d.source = DetectionSource::external;
        else if (s == "ground-truth") d.source = DetectionSource::ground_truth;
        else throw SchemaError(join(path, "source"), "expected heatmap, external or ground-truth");
    }
    d.extras = extras_of(j, {"version", "image_id", "points", "source"});
    return d;
}

void write_detections(const fs::path& path, const DetectionFile& d) {
    write_file(path, dump_json(detections_to_json(d)) + "\n");
}

DetectionFile read_detections(const fs::path& path) { return detections_from_json(parse_json(read_file(path))); }

// ---- manifest -----------------------------------------------------------

Json manifest_to_json(const DatasetManifest& m) {
    Json entries = Json::array();
    for (const auto& e : m.entries) {
        Json j = {{"id", e.id},
                  {"image", e.image},
                  {"width", e.width},
                  {"height", e.height},
                  {"annotation", annotation_to_json(e.annotation)}};
        if (e.heatmap) j["heatmap"] = *e.heatmap;
        if (e.detections) j["detections"] = points_json(*e.detections);
        merge_extras(j, e.extras);
        entries.push_back(std::move(j));
    }
    Json j = {{"version", m.version}, {"entries", std::move(entries)}};
    merge_extras(j, m.extras);
    return j;
}

DatasetManifest manifest_from_json(const Json& j) {
    check_version(j, "");
    DatasetManifest m;
    const Json& entries = array(require(j, "entries", ""), "entries");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const std::string p = index("entries", i);
        const Json& ej = entries[i];
        ManifestEntry e;
        e.id = string(require(ej, "id", p), join(p, "id"));
        if (!ids.insert(e.id).second) throw SchemaError(join(p, "id"), "duplicate id '" + e.id + "'");
        e.image = string(require(ej, "image", p), join(p, "image"));
        const long long w = integer(require(ej, "width", p), join(p, "width"));
        const long long h = integer(require(ej, "height", p), join(p, "height"));
        if (w <= 0) throw SchemaError(join(p, "width"), "must be > 0");
        if (h <= 0) throw SchemaError(join(p, "height"), "must be > 0");
        e.width = static_cast<int>(w);
        e.height = static_cast<int>(h);
        e.annotation = annotation_from_json(require(ej, "annotation", p), join(p, "annotation"));
        if (auto it = ej.find("heatmap"); it != ej.end()) e.heatmap = string(*it, join(p, "heatmap"));
        if (auto it = ej.find("detections"); it != ej.end()) e.detections = points_from(*it, join(p, "detections"));
        e.extras = extras_of(ej, {"id", "image", "width", "height", "annotation", "heatmap", "detections"});
        m.entries.push_back(std::move(e));
    }
    m.extras = extras_of(j, {"version", "entries"});
    return m;
}

void write_manifest(const fs::path& path, const DatasetManifest& m) {
    write_file(path, dump_json(manifest_to_json(m)) + "\n");
}

DatasetManifest read_manifest(const fs::path& path, bool check_files) {
    DatasetManifest m = manifest_from_json(parse_json(read_file(path)));
    m.base_dir = path.parent_path();
    if (check_files) {
        for (std::size_t i = 0; i < m.entries.size(); ++i) {
            const auto& e = m.entries[i];
            const std::string p = index("entries", i);
            if (!fs::exists(m.resolve(e.image))) throw SchemaError(join(p, "image"), "file not found: " + e.image);
            if (e.heatmap && !fs::exists(m.resolve(*e.heatmap))) {
                throw SchemaError(join(p, "heatmap"), "file not found: " + *e.heatmap);
            }
        }
    }
    return m;
}

Json spec_to_json(const RulerSpec& s) {
    return Json{
        {"position", point_json(s.position)},
        {"length_cm", s.length_cm},
        {"cm_to_px", s.cm_to_px},
        {"ruler_height_cm", s.ruler_height_cm},
        {"ruler_extension_fraction", s.ruler_extension_fraction},
        {"orientation", s.orientation == Orientation::horizontal ? "horizontal" : "vertical"},
        {"fill_color", rgb_json(s.fill_color)},
        {"edge_color", rgb_json(s.edge_color)},
        {"thickness", s.thickness},
        {"alpha", s.alpha},
        {"mm_mark_interval", s.mm_mark_interval},
        {"inch_mark_interval", s.inch_mark_interval},
        {"cm_font_scale", s.cm_font_scale},
        {"inch_font_scale", s.inch_font_scale},
        {"cm_font_color", rgb_json(s.cm_font_color)},
        {"inch_font_color", rgb_json(s.inch_font_color)},
        {"cm_font_offset_x", s.cm_font_offset_x},
        {"cm_font_offset_y", s.cm_font_offset_y},
        {"inch_font_offset_x", s.inch_font_offset_x},
        {"inch_font_offset_y", s.inch_font_offset_y},
        {"cm_mark_length", s.cm_mark_length},
        {"mm_mark_length", s.mm_mark_length},
        {"half_cm_mark_length", s.half_cm_mark_length},
        {"inch_mark_length", s.inch_mark_length},
        {"sub_inch_mark_length", s.sub_inch_mark_length},
        {"half_inch_mark_length", s.half_inch_mark_length},
        {"cm_mark_color", rgb_json(s.cm_mark_color)},
        {"mm_mark_color", rgb_json(s.mm_mark_color)},
        {"inch_mark_color", rgb_json(s.inch_mark_color)},
        {"sub_inch_mark_color", rgb_json(s.sub_inch_mark_color)},
        {"show_cm_numbers", s.show_cm_numbers},
        {"show_inch_numbers", s.show_inch_numbers},
        {"tilt_factor_horizontal", s.tilt_factor_horizontal},
        {"tilt_factor_vertical", s.tilt_factor_vertical},
        {"num_random_lines", s.num_random_lines},
        {"num_random_shapes", s.num_random_shapes},
        {"other_marks", s.other_marks == OtherMarks::none ? "none" : s.other_marks == OtherMarks::cm ? "cm" : "inch"},
        {"mark_offset", s.mark_offset},
    };
}

RulerSpec spec_from_json(const Json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    RulerSpec s;
    auto opt = [&](const char* key, auto&& assign) {
        if (auto it = j.find(key); it != j.end()) assign(*it, join(path, key));
    };
    auto num = [&](const char* key, double& out) { opt(key, [&](const Json& v, const std::string& p) { out = number(v, p); }); };
    auto int_ = [&](const char* key, int& out) {
        opt(key, [&](const Json& v, const std::string& p) { out = static_cast<int>(integer(v, p)); });
    };
    auto col = [&](const char* key, Rgb& out) { opt(key, [&](const Json& v, const std::string& p) { out = rgb_from(v, p); }); };
    auto flag = [&](const char* key, bool& out) { opt(key, [&](const Json& v, const std::string& p) { out = boolean(v, p); }); };

    opt("position", [&](const Json& v, const std::string& p) { s.position = point_from(v, p); });
    int_("length_cm", s.length_cm);
    num("cm_to_px", s.cm_to_px);
    num("ruler_height_cm", s.ruler_height_cm);
    num("ruler_extension_fraction", s.ruler_extension_fraction);
    opt("orientation", [&](const Json& v, const std::string& p) {
        const std::string o = string(v, p);
        if (o == "horizontal") s.orientation = Orientation::horizontal;
        else if (o == "vertical") s.orientation = Orientation::vertical;
        else throw SchemaError(p, "expected horizontal or vertical");
    });
    col("fill_color", s.fill_color);
    col("edge_color", s.edge_color);
    int_("thickness", s.thickness);
    num("alpha", s.alpha);
    num("mm_mark_interval", s.mm_mark_interval);
    opt("inch_mark_interval", [&](const Json& v, const std::string& p) { s.inch_mark_interval = string(v, p); });
    int_("cm_font_scale", s.cm_font_scale);
    int_("inch_font_scale", s.inch_font_scale);
    col("cm_font_color", s.cm_font_color);
    col("inch_font_color", s.inch_font_color);
    int_("cm_font_offset_x", s.cm_font_offset_x);
    int_("cm_font_offset_y", s.cm_font_offset_y);
    int_("inch_font_offset_x", s.inch_font_offset_x);
    int_("inch_font_offset_y", s.inch_font_offset_y);
    num("cm_mark_length", s.cm_mark_length);
    num("mm_mark_length", s.mm_mark_length);
    num("half_cm_mark_length", s.half_cm_mark_length);
    num("inch_mark_length", s.inch_mark_length);
    num("sub_inch_mark_length", s.sub_inch_mark_length);
    num("half_inch_mark_length", s.half_inch_mark_length);
    col("cm_mark_color", s.cm_mark_color);
    col("mm_mark_color", s.mm_mark_color);
    col("inch_mark_color", s.inch_mark_color);
    col("sub_inch_mark_color", s.sub_inch_mark_color);
    flag("show_cm_numbers", s.show_cm_numbers);
    flag("show_inch_numbers", s.show_inch_numbers);
    num("tilt_factor_horizontal", s.tilt_factor_horizontal);
    num("tilt_factor_vertical", s.tilt_factor_vertical);
    int_("num_random_lines", s.num_random_lines);
    int_("num_random_shapes", s.num_random_shapes);
    opt("other_marks", [&](const Json& v, const std::string& p) {
        const std::string o = string(v, p);
        if (o == "none") s.other_marks = OtherMarks::none;
        else if (o == "cm") s.other_marks = OtherMarks::cm;
        else if (o == "inch") s.other_marks = OtherMarks::inch;
        else throw SchemaError(p, "expected none, cm or inch");
    });
    num("mark_offset", s.mark_offset);
    try {
        validate(s);
    } catch (const Error& e) {
        throw SchemaError(path, e.what());
    }
    return s;
}

// ---- estimates and reports ------------------------------------------------

Json estimate_to_json(const ScaleEstimate& e) {
    Json j = {{"status", e.ok() ? "ok" : "failed"},
              {"pixels_per_cm", e.pixels_per_cm},
              {"marks_used", e.marks_used}};
    if (e.params) {
        j["params"] = {{"m0", e.params->m0.t}, {"m1", e.params->m1.t}, {"r", e.params->r}};
    } else {
        j["params"] = nullptr;
    }
    return j;
}

ScaleEstimate estimate_from_json(const Json& j, const std::string& path) {
    ScaleEstimate e;
    const std::string status = string(require(j, "status", path), join(path, "status"));
    if (status == "ok") e.status = EstimateStatus::ok;
    else if (status == "failed") e.status = EstimateStatus::failed;
    else throw SchemaError(join(path, "status"), "expected ok or failed");
    e.pixels_per_cm = number(require(j, "pixels_per_cm", path), join(path, "pixels_per_cm"));
    const long long used = integer(require(j, "marks_used", path), join(path, "marks_used"));
    if (used < 0) throw SchemaError(join(path, "marks_used"), "must be >= 0");
    e.marks_used = static_cast<std::size_t>(used);
    if (auto it = j.find("params"); it != j.end() && !it->is_null()) {
        const std::string p = join(path, "params");
        GPParams g;
        g.m0.t = number(require(*it, "m0", p), join(p, "m0"));
        g.m1.t = number(require(*it, "m1", p), join(p, "m1"));
        g.r = number(require(*it, "r", p), join(p, "r"));
        e.params = g;
    }
    return e;
}

Json report_to_json(const BenchmarkReport& r) {
    Json records = Json::array();
    for (const auto& rec : r.records) {
        Json j = {{"id", rec.id}, {"predicted", rec.predicted}, {"ground_truth", rec.ground_truth}, {"size", rec.size}};
        if (rec.elapsed_ms) j["elapsed_ms"] = *rec.elapsed_ms;
        if (rec.error) j["error"] = *rec.error;
        records.push_back(std::move(j));
    }
    Json j = {{"n", r.n}, {"mape", r.mape}, {"records", std::move(records)}};
    if (r.ms_per_sample) j["ms_per_sample"] = *r.ms_per_sample;
    return j;
}

BenchmarkReport report_from_json(const Json& j) {
    BenchmarkReport r;
    r.n = number(require(j, "n", ""), "n");
    r.mape = number(require(j, "mape", ""), "mape");
    if (auto it = j.find("ms_per_sample"); it != j.end()) r.ms_per_sample = number(*it, "ms_per_sample");
    const Json& records = array(require(j, "records", ""), "records");
    for (std::size_t i = 0; i < records.size(); ++i) {
        const std::string p = index("records", i);
        const Json& rj = records[i];
        EvalRecord rec;
        rec.id = string(require(rj, "id", p), join(p, "id"));
        rec.predicted = number(require(rj, "predicted", p), join(p, "predicted"));
        rec.ground_truth = number(require(rj, "ground_truth", p), join(p, "ground_truth"));
        rec.size = number(require(rj, "size", p), join(p, "size"));
        if (auto it = rj.find("elapsed_ms"); it != rj.end()) rec.elapsed_ms = number(*it, join(p, "elapsed_ms"));
        if (auto it = rj.find("error"); it != rj.end()) rec.error = string(*it, join(p, "error"));
        r.records.push_back(std::move(rec));
    }
    return r;
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

std::string report_to_csv(const BenchmarkReport& r) {
    std::string out = "id,predicted,ground_truth,size,elapsed_ms,error\n";
    for (const auto& rec : r.records) {
        out += csv_field(rec.id) + "," + fmt_double(rec.predicted) + "," + fmt_double(rec.ground_truth) + "," +
               fmt_double(rec.size) + "," + (rec.elapsed_ms ? fmt_double(*rec.elapsed_ms) : "") + "," +
               csv_field(rec.error.value_or("")) + "\n";
    }
    return out;
}

// ---- DGP1 model files -----------------------------------------------------

namespace {
constexpr std::string_view kModelMagic = "DGP1";
constexpr std::uint32_t kMaxModelDim = 1u << 16;
}  // namespace

std::string encode_model(const DeepGPModel& model) {
    std::string out(kModelMagic);
    const auto& layers = model.layers();
    put_u32(out, static_cast<std::uint32_t>(layers.size()));
    for (const auto& l : layers) {
        put_u32(out, static_cast<std::uint32_t>(l.weights.cols()));
        put_u32(out, static_cast<std::uint32_t>(l.weights.rows()));
    }
    for (const auto& l : layers) {
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) put_f32(out, l.weights(r, c));
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) put_f32(out, l.bias(r));
    }
    return out;
}

DeepGPModel decode_model(std::string_view bytes) {
    if (bytes.size() < 8 || bytes.substr(0, 4) != kModelMagic) fail(ErrorCode::MalformedHeader, "model: bad magic");
    const std::uint32_t count = get_u32(bytes, 4);
    if (count == 0 || count > 64) fail(ErrorCode::MalformedHeader, "model: bad layer count");
    std::size_t pos = 8;
    if (bytes.size() < pos + 8ull * count) fail(ErrorCode::TruncatedPayload, "model: layer table truncated");
    std::vector<std::pair<std::uint32_t, std::uint32_t>> dims;
    std::size_t floats = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t in = get_u32(bytes, pos);
        const std::uint32_t out = get_u32(bytes, pos + 4);
        pos += 8;
        if (in == 0 || out == 0 || in > kMaxModelDim || out > kMaxModelDim) {
            fail(ErrorCode::MalformedHeader, "model: bad layer dimensions");
        }
        if (!dims.empty() && dims.back().second != in) fail(ErrorCode::MalformedHeader, "model: layer sizes do not chain");
        dims.emplace_back(in, out);
        floats += static_cast<std::size_t>(in) * out + out;
    }
    if (bytes.size() - pos < floats * 4) fail(ErrorCode::TruncatedPayload, "model: weights truncated");
    if (bytes.size() - pos > floats * 4) fail(ErrorCode::MalformedHeader, "model: trailing bytes");
    std::vector<DeepGPModel::Layer> layers;
    for (const auto& [in, out] : dims) {
        DeepGPModel::Layer l;
        l.weights.resize(out, in);
        l.bias.resize(out);
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
                l.weights(r, c) = get_f32(bytes, pos);
                pos += 4;
            }
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) {
            l.bias(r) = get_f32(bytes, pos);
            pos += 4;
        }
        layers.push_back(std::move(l));
    }
    return DeepGPModel(std::move(layers));
}

void write_model(const fs::path& path, const DeepGPModel& model) { write_file(path, encode_model(model)); }

DeepGPModel read_model(const fs::path& path) { return decode_model(read_file(path)); }

std::string training_log_jsonl(const TrainConfig& cfg, const std::vector<double>& losses) {
    std::string out;
    for (std::size_t i = 0; i < losses.size(); ++i) {
        const long step = static_cast<long>(i);
        out += dump_json(Json{{"step", step}, {"loss", losses[i]}, {"lr", learning_rate_at(cfg, step)}});
        out += '\n';
    }
    return out;
}

}  // namespace rulerkit
