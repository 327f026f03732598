/**
 * @file synth.hpp
 * @brief Procedural ruler renderer with exact cm-mark ground truth
 */
#pragma once

#include <rulerkit/geometry.hpp>
#include <rulerkit/image.hpp>

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rulerkit {

enum class Orientation { horizontal, vertical };
enum class OtherMarks { none, cm, inch };

struct RulerSpec {
    Point2 position;              ///< the 0 cm mark on the marked edge
    int length_cm = 10;
    double cm_to_px = 37.7952755906;
    double ruler_height_cm = 3.0;
    double ruler_extension_fraction = 0.2;
    Orientation orientation = Orientation::horizontal;

    Rgb fill_color{255, 255, 255};
    Rgb edge_color{0, 0, 0};
    int thickness = 2;
    double alpha = 0.5;

    double mm_mark_interval = 1.0;         ///< millimetres
    std::string inch_mark_interval = "1/16";

    int cm_font_scale = 1;
    int inch_font_scale = 1;
    Rgb cm_font_color{0, 0, 0};
    Rgb inch_font_color{0, 0, 0};
    int cm_font_offset_x = 0;
    int cm_font_offset_y = 0;
    int inch_font_offset_x = 0;
    int inch_font_offset_y = 0;

    double cm_mark_length = 20.0;
    double mm_mark_length = 10.0;
    double half_cm_mark_length = 15.0;
    double inch_mark_length = 20.0;
    double sub_inch_mark_length = 10.0;
    double half_inch_mark_length = 15.0;

    Rgb cm_mark_color{50, 50, 50};
    Rgb mm_mark_color{50, 50, 50};
    Rgb inch_mark_color{100, 100, 100};
    Rgb sub_inch_mark_color{100, 100, 100};

    bool show_cm_numbers = true;
    bool show_inch_numbers = true;

    double tilt_factor_horizontal = 0.1;
    double tilt_factor_vertical = 0.1;

    int num_random_lines = 10;
    int num_random_shapes = 10;

    OtherMarks other_marks = OtherMarks::none;
    double mark_offset = 0.0;     ///< inset of the opposite-edge marks
};

/// Throws InvalidParams when a field violates its documented range.
void validate(const RulerSpec& spec);

/// Parses "1/2", "1/4", "1/8" or "1/16" into the denominator.
int parse_inch_interval(std::string_view fraction);

using Homography = Eigen::Matrix3d;

struct RulerSample {
    ImageRGB image;
    std::vector<Point2> cm_marks;  ///< after the perspective warp, sub-pixel
    Homography homography = Homography::Identity();
    RulerSpec spec;
};

/// Axis-aligned box (pre-warp) covered by the ruler body.
struct Box {
    double x0, y0, x1, y1;
};
Box ruler_footprint(const RulerSpec& spec);

/// Analytic cm anchors before any warp.
std::vector<Point2> cm_anchor_points(const RulerSpec& spec);

/// Perspective map for the given tilt factors on a width x height raster. The
/// top edge is inset by tilt_h * width at both ends (bottom edge when negative),
/// the left edge by tilt_v * height (right edge when negative).
Homography tilt_homography(int width, int height, double tilt_h, double tilt_v);

Point2 apply_homography(const Homography& h, const Point2& p);

/// Homography sending the four src corners onto the four dst corners.
Homography homography_from_corners(const std::array<Point2, 4>& src, const std::array<Point2, 4>& dst);

struct WarpResult {
    ImageRGB image;
    std::vector<Point2> points;
    Homography homography;
};

/// Bilinear backward warp; samples falling outside the source are black.
WarpResult perspective_warp(const ImageRGB& image, std::span<const Point2> points, double tilt_h, double tilt_v);

/// Whether draw_ruler would accept `spec` on a canvas of this size.
bool spec_fits(const RulerSpec& spec, int width, int height);

RulerSample draw_ruler(const ImageRGB& background, const RulerSpec& spec, std::uint64_t seed);

struct SpecConstraints {
    int min_length_cm = 3;
    int max_length_cm = 25;
    double min_cm_to_px = 20.0;
    double max_cm_to_px = 45.0;
    double max_tilt = 0.15;
    bool allow_vertical = true;
    int max_random_lines = 10;
    int max_random_shapes = 10;
};

/// Uniformly samples a spec that fits the canvas, retrying up to 100 times.
RulerSpec random_spec(std::mt19937_64& rng, int width, int height, const SpecConstraints& constraints = {});

inline constexpr int kGlyphWidth = 5;
inline constexpr int kGlyphHeight = 7;

/// Draws digits from the built-in 5x7 glyph table; `anchor` is the top-left
/// corner, glyph cells are scale x scale pixels, glyphs advance by 6 cells.
void render_label(ImageRGB& canvas, std::string_view text, int scale, Rgb color, Point2 anchor);

struct Prompt {
    std::string text;
    bool flagged = false; ///< a slot was empty or outside the curated value lists
};

Prompt build_prompt(std::string_view material, std::string_view visual_appearance,
                    std::string_view mark_appearance, std::string_view background);

const std::vector<std::string>& prompt_materials();
const std::vector<std::string>& prompt_visual_appearances();
const std::vector<std::string>& prompt_mark_appearances();
const std::vector<std::string>& prompt_backgrounds();

/// Draws each slot uniformly from its curated list.
Prompt random_prompt(std::mt19937_64& rng);

}  // namespace rulerkit
