/**
 * @file image.hpp
 * @brief 8-bit RGB raster and the few drawing primitives the ruler renderer needs
 */
#pragma once

#include <rulerkit/geometry.hpp>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace rulerkit {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Interleaved RGB, row-major, top row first. Pixel centres sit on integer coordinates.
class ImageRGB {
public:
    ImageRGB() = default;
    ImageRGB(int width, int height, Rgb fill = {});
    ImageRGB(int width, int height, std::vector<std::uint8_t> data);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return data_.empty(); }
    bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    Rgb at(int x, int y) const;
    void set(int x, int y, Rgb c);
    /// Source-over blend of `c` with the given coverage/opacity in [0, 1].
    void blend(int x, int y, Rgb c, double alpha);

    const std::vector<std::uint8_t>& data() const noexcept { return data_; }
    std::vector<std::uint8_t>& data() noexcept { return data_; }

    friend bool operator==(const ImageRGB&, const ImageRGB&) = default;

private:
    std::size_t offset(int x, int y) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Fills every pixel whose centre lies in [x0, x1] x [y0, y1]; at least the nearest
/// pixel column/row is painted when the interval is thinner than a pixel.
void fill_rect(ImageRGB& img, double x0, double y0, double x1, double y1, Rgb c, double alpha = 1.0);

/// Rectangle outline of the given pixel thickness, drawn inside the rectangle.
void stroke_rect(ImageRGB& img, double x0, double y0, double x1, double y1, int thickness, Rgb c);

/// Anti-aliased segment with round caps.
void draw_segment(ImageRGB& img, Point2 a, Point2 b, double width, Rgb c);

/// Filled axis-aligned ellipse with a one-pixel anti-aliased rim.
void fill_ellipse(ImageRGB& img, Point2 centre, double rx, double ry, Rgb c);

/// Bilinear sample; returns false when (x, y) is outside the pixel-centre hull.
bool sample_bilinear(const ImageRGB& img, double x, double y, Rgb& out);

/// Bilinear resize to the requested size (pixel-centre aligned corners).
ImageRGB resize_bilinear(const ImageRGB& img, int width, int height);

}  // namespace rulerkit
