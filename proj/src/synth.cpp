/**
 * @file synth.cpp
 */
#include <rulerkit/synth.hpp>
#include <rulerkit/error.hpp>

#include <algorithm>
#include <array>
#include <cmath>

namespace rulerkit {

namespace {

constexpr double kCmPerInch = 2.54;

using GlyphRows = std::array<std::uint8_t, kGlyphHeight>;

// 5x7 digits, one byte per row, bit 4 is the leftmost column.
constexpr std::array<GlyphRows, 10> kDigits = {{
    {0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110},
    {0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110},
    {0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111},
    {0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110},
    {0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010},
    {0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110},
    {0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110},
    {0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000},
    {0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110},
    {0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100},
}};

/// Maps ruler-local coordinates (along the marked edge, depth into the body)
/// to image coordinates.
struct RulerFrame {
    const RulerSpec& spec;

    Point2 at(double along, double depth) const {
        if (spec.orientation == Orientation::horizontal) return {spec.position.x + along, spec.position.y + depth};
        return {spec.position.x + depth, spec.position.y + along};
    }

    double body_depth() const { return spec.ruler_height_cm * spec.cm_to_px; }

    /// Tick at `along`, running from depth `from` over `length` (negative runs upwards).
    void tick(ImageRGB& img, double along, double from, double length, Rgb color) const {
        const double half = 0.5 * spec.thickness;
        const Point2 a = at(along - half, from);
        const Point2 b = at(along + half, from + length);
        fill_rect(img, a.x, a.y, b.x, b.y, color);
    }

    void label(ImageRGB& img, int value, double along, double depth, int scale, Rgb color, int dx, int dy,
               bool above) const {
        const std::string text = std::to_string(value);
        const double w = (6.0 * static_cast<double>(text.size()) - 1.0) * scale;
        const double h = static_cast<double>(kGlyphHeight) * scale;
        Point2 anchor;
        if (spec.orientation == Orientation::horizontal) {
            anchor = at(along - 0.5 * w, above ? depth - h : depth);
        } else {
            anchor = at(along - 0.5 * h, above ? depth - w : depth);
        }
        anchor.x = std::round(anchor.x + dx);
        anchor.y = std::round(anchor.y + dy);
        render_label(img, text, scale, color, anchor);
    }
};

bool near_multiple(double value, double step) {
    const double k = std::round(value / step);
    return std::abs(value - k * step) < 1e-6;
}

/// cm, half-cm and mm graduations starting at depth `base` and growing in `dir`.
void draw_metric_scale(ImageRGB& img, const RulerFrame& frame, double base, double dir, bool labels) {
    const auto& s = frame.spec;
    const double length_px = s.length_cm * s.cm_to_px;
    const double mm_px = s.cm_to_px / 10.0;
    const double step_mm = s.mm_mark_interval;
    for (long k = 0;; ++k) {
        const double mm = static_cast<double>(k) * step_mm;
        const double along = mm * mm_px;
        if (along > length_px + 1e-9) break;
        if (near_multiple(mm, 5.0)) continue;
        frame.tick(img, along, base, dir * s.mm_mark_length, s.mm_mark_color);
    }
    for (int i = 0; i < s.length_cm; ++i) {
        frame.tick(img, (i + 0.5) * s.cm_to_px, base, dir * s.half_cm_mark_length, s.mm_mark_color);
    }
    for (int i = 0; i <= s.length_cm; ++i) {
        frame.tick(img, i * s.cm_to_px, base, dir * s.cm_mark_length, s.cm_mark_color);
        if (labels) {
            const double depth = base + dir * (s.cm_mark_length + 2.0);
            frame.label(img, i, i * s.cm_to_px, depth, s.cm_font_scale, s.cm_font_color, s.cm_font_offset_x,
                        s.cm_font_offset_y, dir < 0);
        }
    }
}

void draw_inch_scale(ImageRGB& img, const RulerFrame& frame, double base, double dir) {
    const auto& s = frame.spec;
    const int den = parse_inch_interval(s.inch_mark_interval);
    const double inch_px = kCmPerInch * s.cm_to_px;
    const double length_px = s.length_cm * s.cm_to_px;
    for (long k = 0;; ++k) {
        const double along = static_cast<double>(k) * inch_px / den;
        if (along > length_px + 1e-9) break;
        if (k % den == 0) {
            frame.tick(img, along, base, dir * s.inch_mark_length, s.inch_mark_color);
            if (s.show_inch_numbers) {
                frame.label(img, static_cast<int>(k / den), along, base + dir * (s.inch_mark_length + 2.0),
                            s.inch_font_scale, s.inch_font_color, s.inch_font_offset_x, s.inch_font_offset_y,
                            dir < 0);
            }
        } else if (den >= 2 && k % (den / 2) == 0) {
            frame.tick(img, along, base, dir * s.half_inch_mark_length, s.sub_inch_mark_color);
        } else {
            frame.tick(img, along, base, dir * s.sub_inch_mark_length, s.sub_inch_mark_color);
        }
    }
}

void draw_decorations(ImageRGB& img, const RulerSpec& spec, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ux(0.0, img.width() - 1.0);
    std::uniform_real_distribution<double> uy(0.0, img.height() - 1.0);
    std::uniform_int_distribution<int> channel(0, 255);
    auto colour = [&] {
        return Rgb{static_cast<std::uint8_t>(channel(rng)), static_cast<std::uint8_t>(channel(rng)),
                   static_cast<std::uint8_t>(channel(rng))};
    };
    std::uniform_real_distribution<double> width(1.0, 4.0);
    for (int i = 0; i < spec.num_random_lines; ++i) {
        const Point2 a{ux(rng), uy(rng)};
        const Point2 b{ux(rng), uy(rng)};
        const double w = width(rng);
        draw_segment(img, a, b, w, colour());
    }
    const double max_extent = 0.125 * std::min(img.width(), img.height());
    std::uniform_real_distribution<double> extent(2.0, std::max(2.5, max_extent));
    for (int i = 0; i < spec.num_random_shapes; ++i) {
        const bool ellipse = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
        const Point2 c{ux(rng), uy(rng)};
        const double rx = extent(rng);
        const double ry = extent(rng);
        const Rgb col = colour();
        if (ellipse) {
            fill_ellipse(img, c, rx, ry, col);
        } else {
            fill_rect(img, c.x - rx, c.y - ry, c.x + rx, c.y + ry, col);
        }
    }
}

bool inside(const Point2& p, int width, int height) {
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= width - 1.0 && p.y <= height - 1.0;
}

}  // namespace

int parse_inch_interval(std::string_view fraction) {
    if (fraction == "1/2") return 2;
    if (fraction == "1/4") return 4;
    if (fraction == "1/8") return 8;
    if (fraction == "1/16") return 16;
    fail(ErrorCode::InvalidParams, "inch_mark_interval must be one of 1/2, 1/4, 1/8, 1/16, got '" +
                                       std::string(fraction) + "'");
}

void validate(const RulerSpec& s) {
    auto bad = [](const std::string& what) { fail(ErrorCode::InvalidParams, "RulerSpec: " + what); };
    if (s.length_cm < 1) bad("length_cm must be >= 1");
    if (!(s.cm_to_px > 0.0)) bad("cm_to_px must be > 0");
    if (!(s.alpha >= 0.0 && s.alpha <= 1.0)) bad("alpha must be in [0, 1]");
    if (!(std::abs(s.tilt_factor_horizontal) <= 0.4) || !(std::abs(s.tilt_factor_vertical) <= 0.4)) {
        bad("tilt factors must be in [-0.4, 0.4]");
    }
    if (!(s.ruler_height_cm > 0.0)) bad("ruler_height_cm must be > 0");
    if (!(s.ruler_extension_fraction >= 0.0)) bad("ruler_extension_fraction must be >= 0");
    if (s.thickness < 1) bad("thickness must be >= 1");
    if (!(s.mm_mark_interval > 0.0)) bad("mm_mark_interval must be > 0");
    if (s.cm_font_scale < 1 || s.inch_font_scale < 1) bad("font scales must be >= 1");
    if (s.num_random_lines < 0 || s.num_random_shapes < 0) bad("decoration counts must be >= 0");
    if (!std::isfinite(s.position.x) || !std::isfinite(s.position.y)) bad("position must be finite");
    parse_inch_interval(s.inch_mark_interval);
}

Box ruler_footprint(const RulerSpec& spec) {
    const double length_px = spec.length_cm * spec.cm_to_px;
    const double ext = 0.5 * spec.ruler_extension_fraction * length_px;
    const double depth = spec.ruler_height_cm * spec.cm_to_px;
    if (spec.orientation == Orientation::horizontal) {
        return {spec.position.x - ext, spec.position.y, spec.position.x + length_px + ext, spec.position.y + depth};
    }
    return {spec.position.x, spec.position.y - ext, spec.position.x + depth, spec.position.y + length_px + ext};
}

std::vector<Point2> cm_anchor_points(const RulerSpec& spec) {
    const RulerFrame frame{spec};
    std::vector<Point2> pts;
    pts.reserve(static_cast<std::size_t>(spec.length_cm) + 1);
    for (int i = 0; i <= spec.length_cm; ++i) pts.push_back(frame.at(i * spec.cm_to_px, 0.0));
    return pts;
}

Homography homography_from_corners(const std::array<Point2, 4>& src, const std::array<Point2, 4>& dst) {
    Eigen::Matrix<double, 8, 8> a;
    Eigen::Matrix<double, 8, 1> b;
    for (int i = 0; i < 4; ++i) {
        const double x = src[static_cast<std::size_t>(i)].x, y = src[static_cast<std::size_t>(i)].y;
        const double u = dst[static_cast<std::size_t>(i)].x, v = dst[static_cast<std::size_t>(i)].y;
        a.row(2 * i) << x, y, 1, 0, 0, 0, -x * u, -y * u;
        a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -x * v, -y * v;
        b(2 * i) = u;
        b(2 * i + 1) = v;
    }
    const Eigen::Matrix<double, 8, 1> h = a.fullPivLu().solve(b);
    Homography m;
    m << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0;
    return m;
}

Homography tilt_homography(int width, int height, double tilt_h, double tilt_v) {
    if (!(std::abs(tilt_h) <= 0.4) || !(std::abs(tilt_v) <= 0.4)) {
        fail(ErrorCode::InvalidTilt, "tilt factors must be in [-0.4, 0.4]");
    }
    if (tilt_h == 0.0 && tilt_v == 0.0) return Homography::Identity();
    const double w = width - 1.0;
    const double h = height - 1.0;
    const std::array<Point2, 4> src{{{0, 0}, {w, 0}, {w, h}, {0, h}}};
    std::array<Point2, 4> dst = src;  // TL, TR, BR, BL
    const double dx = std::abs(tilt_h) * width;
    const double dy = std::abs(tilt_v) * height;
    if (tilt_h > 0) {
        dst[0].x += dx;
        dst[1].x -= dx;
    } else if (tilt_h < 0) {
        dst[3].x += dx;
        dst[2].x -= dx;
    }
    if (tilt_v > 0) {
        dst[0].y += dy;
        dst[3].y -= dy;
    } else if (tilt_v < 0) {
        dst[1].y += dy;
        dst[2].y -= dy;
    }
    return homography_from_corners(src, dst);
}

Point2 apply_homography(const Homography& h, const Point2& p) {
    const Eigen::Vector3d q = h * Eigen::Vector3d(p.x, p.y, 1.0);
    return {q(0) / q(2), q(1) / q(2)};
}

WarpResult perspective_warp(const ImageRGB& image, std::span<const Point2> points, double tilt_h, double tilt_v) {
    WarpResult out;
    out.homography = tilt_homography(image.width(), image.height(), tilt_h, tilt_v);
    if (out.homography == Homography::Identity()) {
        out.image = image;
        out.points.assign(points.begin(), points.end());
        return out;
    }
    const Homography inv = out.homography.inverse();
    out.image = ImageRGB(image.width(), image.height());
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            const Eigen::Vector3d q = inv * Eigen::Vector3d(x, y, 1.0);
            if (!(q(2) > 0.0)) continue;
            Rgb c;
            if (sample_bilinear(image, q(0) / q(2), q(1) / q(2), c)) out.image.set(x, y, c);
        }
    }
    out.points.reserve(points.size());
    for (const auto& p : points) out.points.push_back(apply_homography(out.homography, p));
    return out;
}

bool spec_fits(const RulerSpec& spec, int width, int height) {
    const Box box = ruler_footprint(spec);
    if (box.x0 < 0.0 || box.y0 < 0.0 || box.x1 > width - 1.0 || box.y1 > height - 1.0) return false;
    const Homography h = tilt_homography(width, height, spec.tilt_factor_horizontal, spec.tilt_factor_vertical);
    for (const auto& p : cm_anchor_points(spec)) {
        if (!inside(apply_homography(h, p), width, height)) return false;
    }
    return true;
}

RulerSample draw_ruler(const ImageRGB& background, const RulerSpec& spec, std::uint64_t seed) {
    validate(spec);
    if (background.empty()) {
        fail(ErrorCode::InvalidValue, "draw_ruler: empty background");
    }
    if (!spec_fits(spec, background.width(), background.height())) {
        fail(ErrorCode::SpecOutOfBounds, "draw_ruler: ruler does not fit the canvas");
    }
    std::mt19937_64 rng(seed);
    ImageRGB img = background;
    draw_decorations(img, spec, rng);

    const Box box = ruler_footprint(spec);
    fill_rect(img, box.x0, box.y0, box.x1, box.y1, spec.fill_color, spec.alpha);
    stroke_rect(img, box.x0, box.y0, box.x1, box.y1, spec.thickness, spec.edge_color);

    const RulerFrame frame{spec};
    const double far_edge = frame.body_depth() - spec.mark_offset;
    if (spec.other_marks == OtherMarks::inch) {
        draw_inch_scale(img, frame, far_edge, -1.0);
    } else if (spec.other_marks == OtherMarks::cm) {
        draw_metric_scale(img, frame, far_edge, -1.0, false);
    }
    draw_metric_scale(img, frame, 0.0, 1.0, spec.show_cm_numbers);

    const auto anchors = cm_anchor_points(spec);
    auto warped = perspective_warp(img, anchors, spec.tilt_factor_horizontal, spec.tilt_factor_vertical);

    RulerSample sample;
    sample.image = std::move(warped.image);
    sample.cm_marks = std::move(warped.points);
    sample.homography = warped.homography;
    sample.spec = spec;
    return sample;
}

RulerSpec random_spec(std::mt19937_64& rng, int width, int height, const SpecConstraints& c) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    auto integer = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    auto colour = [&](int lo, int hi) {
        return Rgb{static_cast<std::uint8_t>(integer(lo, hi)), static_cast<std::uint8_t>(integer(lo, hi)),
                   static_cast<std::uint8_t>(integer(lo, hi))};
    };
    static const std::array<double, 3> kMmIntervals{1.0, 2.0, 5.0};
    static const std::array<const char*, 4> kInchIntervals{"1/2", "1/4", "1/8", "1/16"};

    for (int attempt = 0; attempt < 100; ++attempt) {
        RulerSpec s;
        s.orientation = (c.allow_vertical && integer(0, 1) == 1) ? Orientation::vertical : Orientation::horizontal;
        s.cm_to_px = uniform(c.min_cm_to_px, c.max_cm_to_px);
        s.length_cm = integer(c.min_length_cm, c.max_length_cm);
        s.ruler_height_cm = uniform(1.5, 4.0);
        s.ruler_extension_fraction = uniform(0.0, 0.3);
        s.fill_color = colour(160, 255);
        s.edge_color = colour(0, 80);
        s.thickness = integer(1, 3);
        s.alpha = uniform(0.3, 1.0);
        s.mm_mark_interval = kMmIntervals[static_cast<std::size_t>(integer(0, 2))];
        s.inch_mark_interval = kInchIntervals[static_cast<std::size_t>(integer(0, 3))];
        s.cm_font_scale = integer(1, 2);
        s.inch_font_scale = integer(1, 2);
        s.cm_font_color = colour(0, 90);
        s.inch_font_color = colour(0, 90);
        const double depth = s.ruler_height_cm * s.cm_to_px;
        s.cm_mark_length = uniform(0.25, 0.4) * depth;
        s.half_cm_mark_length = 0.75 * s.cm_mark_length;
        s.mm_mark_length = 0.5 * s.cm_mark_length;
        s.inch_mark_length = uniform(0.2, 0.35) * depth;
        s.half_inch_mark_length = 0.75 * s.inch_mark_length;
        s.sub_inch_mark_length = 0.5 * s.inch_mark_length;
        s.cm_mark_color = colour(0, 90);
        s.mm_mark_color = s.cm_mark_color;
        s.inch_mark_color = colour(0, 120);
        s.sub_inch_mark_color = s.inch_mark_color;
        s.show_cm_numbers = integer(0, 1) == 1;
        s.show_inch_numbers = integer(0, 1) == 1;
        s.tilt_factor_horizontal = uniform(-c.max_tilt, c.max_tilt);
        s.tilt_factor_vertical = uniform(-c.max_tilt, c.max_tilt);
        s.num_random_lines = integer(0, std::max(0, c.max_random_lines));
        s.num_random_shapes = integer(0, std::max(0, c.max_random_shapes));
        s.other_marks = static_cast<OtherMarks>(integer(0, 2));

        // Place the body uniformly among the positions that keep it on the canvas.
        s.position = {0.0, 0.0};
        const Box box = ruler_footprint(s);
        const double span_x = (width - 1.0) - (box.x1 - box.x0);
        const double span_y = (height - 1.0) - (box.y1 - box.y0);
        if (span_x < 0.0 || span_y < 0.0) continue;
        s.position = {uniform(0.0, span_x) - box.x0, uniform(0.0, span_y) - box.y0};
        if (spec_fits(s, width, height)) return s;
    }
    fail(ErrorCode::CannotFit, "random_spec: no ruler fits a " + std::to_string(width) + "x" +
                                   std::to_string(height) + " canvas after 100 attempts");
}

void render_label(ImageRGB& canvas, std::string_view text, int scale, Rgb color, Point2 anchor) {
    for (char ch : text) {
        if (ch < '0' || ch > '9') {
            fail(ErrorCode::UnsupportedGlyph, std::string("render_label: unsupported glyph '") + ch + "'");
        }
    }
    if (scale < 1) {
        fail(ErrorCode::InvalidParams, "render_label: scale must be >= 1");
    }
    const int ox = static_cast<int>(std::lround(anchor.x));
    const int oy = static_cast<int>(std::lround(anchor.y));
    for (std::size_t i = 0; i < text.size(); ++i) {
        const auto& glyph = kDigits[static_cast<std::size_t>(text[i] - '0')];
        const int gx = ox + static_cast<int>(i) * 6 * scale;
        for (int row = 0; row < kGlyphHeight; ++row) {
            for (int col = 0; col < kGlyphWidth; ++col) {
                if (!((glyph[static_cast<std::size_t>(row)] >> (kGlyphWidth - 1 - col)) & 1)) continue;
                for (int sy = 0; sy < scale; ++sy) {
                    for (int sx = 0; sx < scale; ++sx) {
                        canvas.set(gx + col * scale + sx, oy + row * scale + sy, color);
                    }
                }
            }
        }
    }
}

const std::vector<std::string>& prompt_materials() {
    static const std::vector<std::string> v{"plastic", "wood",  "metal", "glass", "rubber", "composite materials",
                                            "paper",   "cardboard"};
    return v;
}

const std::vector<std::string>& prompt_visual_appearances() {
    static const std::vector<std::string> v{"reflective", "transparent", "opaque",   "matte",    "glossy", "textured",
                                            "smooth",     "colored",     "patterned", "gradient", "frosted", "clear"};
    return v;
}

const std::vector<std::string>& prompt_mark_appearances() {
    static const std::vector<std::string> v{"engraved", "printed",   "embossed", "debossed",   "stamped",
                                            "laser-etched", "painted", "raised",  "indented",   "dotted",
                                            "striped",  "highlighted", "faded",  "bold",       "thin",
                                            "dual-color", "metallic", "contrasted", "glowing", "reflective"};
    return v;
}

const std::vector<std::string>& prompt_backgrounds() {
    static const std::vector<std::string> v{
        "a wooden desk",     "white paper",        "a blackboard",      "metal surface",  "a glass table",
        "concrete floor",    "a marble countertop", "fabric surface",   "a grass field",  "sandy surface",
        "a water surface",   "carpet",             "tile floor",        "a painted wall", "a digital screen",
        "a chalkboard",      "cardboard sheet",    "a leather surface", "a plastic sheet", "the sky background",
        "a blurred background", "none"};
    return v;
}

Prompt build_prompt(std::string_view material, std::string_view visual_appearance, std::string_view mark_appearance,
                    std::string_view background) {
    auto listed = [](const std::vector<std::string>& values, std::string_view v) {
        return std::find(values.begin(), values.end(), v) != values.end();
    };
    Prompt p;
    p.flagged = !listed(prompt_materials(), material) || !listed(prompt_visual_appearances(), visual_appearance) ||
                !listed(prompt_mark_appearances(), mark_appearance) || !listed(prompt_backgrounds(), background);

    std::string text = "a";
    if (!visual_appearance.empty()) text += " " + std::string(visual_appearance);
    if (!material.empty()) text += " " + std::string(material);
    text += " rectangle with clear";
    if (!mark_appearance.empty()) text += " " + std::string(mark_appearance);
    text += " marks";
    if (!background.empty() && background != "none") text += " on " + std::string(background);
    p.text = std::move(text);
    return p;
}

Prompt random_prompt(std::mt19937_64& rng) {
    auto pick = [&](const std::vector<std::string>& v) -> const std::string& {
        return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
    };
    const auto& material = pick(prompt_materials());
    const auto& visual = pick(prompt_visual_appearances());
    const auto& mark = pick(prompt_mark_appearances());
    const auto& background = pick(prompt_backgrounds());
    return build_prompt(material, visual, mark, background);
}

}  // namespace rulerkit
