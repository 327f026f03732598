/**
 * @file image.cpp
 */
#include <rulerkit/image.hpp>
#include <rulerkit/error.hpp>

#include <algorithm>
#include <cmath>

namespace rulerkit {

namespace {

std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

int first_pixel(double lo) { return static_cast<int>(std::ceil(lo)); }
int last_pixel(double hi) { return static_cast<int>(std::floor(hi)); }

}  // namespace

ImageRGB::ImageRGB(int width, int height, Rgb fill) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
        fail(ErrorCode::InvalidValue, "image dimensions must be positive");
    }
    data_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
    for (std::size_t i = 0; i < data_.size(); i += 3) {
        data_[i] = fill.r;
        data_[i + 1] = fill.g;
        data_[i + 2] = fill.b;
    }
}

ImageRGB::ImageRGB(int width, int height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
    if (width < 1 || height < 1 ||
        data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
        fail(ErrorCode::ShapeMismatch, "image buffer does not match its dimensions");
    }
}

Rgb ImageRGB::at(int x, int y) const {
    const auto o = offset(x, y);
    return {data_[o], data_[o + 1], data_[o + 2]};
}

void ImageRGB::set(int x, int y, Rgb c) {
    if (!contains(x, y)) return;
    const auto o = offset(x, y);
    data_[o] = c.r;
    data_[o + 1] = c.g;
    data_[o + 2] = c.b;
}

void ImageRGB::blend(int x, int y, Rgb c, double alpha) {
    if (!contains(x, y) || alpha <= 0.0) return;
    if (alpha >= 1.0) {
        set(x, y, c);
        return;
    }
    const auto o = offset(x, y);
    data_[o] = to_byte(alpha * c.r + (1.0 - alpha) * data_[o]);
    data_[o + 1] = to_byte(alpha * c.g + (1.0 - alpha) * data_[o + 1]);
    data_[o + 2] = to_byte(alpha * c.b + (1.0 - alpha) * data_[o + 2]);
}

void fill_rect(ImageRGB& img, double x0, double y0, double x1, double y1, Rgb c, double alpha) {
    if (x1 < x0) std::swap(x0, x1);
    if (y1 < y0) std::swap(y0, y1);
    int xa = first_pixel(x0), xb = last_pixel(x1);
    int ya = first_pixel(y0), yb = last_pixel(y1);
    if (xa > xb) xa = xb = static_cast<int>(std::lround(0.5 * (x0 + x1)));
    if (ya > yb) ya = yb = static_cast<int>(std::lround(0.5 * (y0 + y1)));
    xa = std::max(xa, 0);
    ya = std::max(ya, 0);
    xb = std::min(xb, img.width() - 1);
    yb = std::min(yb, img.height() - 1);
    for (int y = ya; y <= yb; ++y) {
        for (int x = xa; x <= xb; ++x) img.blend(x, y, c, alpha);
    }
}

void stroke_rect(ImageRGB& img, double x0, double y0, double x1, double y1, int thickness, Rgb c) {
    const double t = std::max(1, thickness) - 1;
    fill_rect(img, x0, y0, x1, y0 + t, c);
    fill_rect(img, x0, y1 - t, x1, y1, c);
    fill_rect(img, x0, y0, x0 + t, y1, c);
    fill_rect(img, x1 - t, y0, x1, y1, c);
}

void draw_segment(ImageRGB& img, Point2 a, Point2 b, double width, Rgb c) {
    const double half = 0.5 * std::max(width, 1.0);
    const double vx = b.x - a.x;
    const double vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    const int xa = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - half - 1)));
    const int xb = std::min(img.width() - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + half + 1)));
    const int ya = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - half - 1)));
    const int yb = std::min(img.height() - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + half + 1)));
    for (int y = ya; y <= yb; ++y) {
        for (int x = xa; x <= xb; ++x) {
            double s = len2 > 0.0 ? ((x - a.x) * vx + (y - a.y) * vy) / len2 : 0.0;
            s = std::clamp(s, 0.0, 1.0);
            const double dist = std::hypot(x - (a.x + s * vx), y - (a.y + s * vy));
            const double coverage = std::clamp(half + 0.5 - dist, 0.0, 1.0);
            img.blend(x, y, c, coverage);
        }
    }
}

void fill_ellipse(ImageRGB& img, Point2 centre, double rx, double ry, Rgb c) {
    rx = std::max(rx, 0.5);
    ry = std::max(ry, 0.5);
    const int xa = std::max(0, static_cast<int>(std::floor(centre.x - rx - 1)));
    const int xb = std::min(img.width() - 1, static_cast<int>(std::ceil(centre.x + rx + 1)));
    const int ya = std::max(0, static_cast<int>(std::floor(centre.y - ry - 1)));
    const int yb = std::min(img.height() - 1, static_cast<int>(std::ceil(centre.y + ry + 1)));
    const double scale = std::min(rx, ry);
    for (int y = ya; y <= yb; ++y) {
        for (int x = xa; x <= xb; ++x) {
            const double u = (x - centre.x) / rx;
            const double v = (y - centre.y) / ry;
            // Signed distance to the rim, approximated in units of the minor radius.
            const double dist = (std::sqrt(u * u + v * v) - 1.0) * scale;
            img.blend(x, y, c, std::clamp(0.5 - dist, 0.0, 1.0));
        }
    }
}

bool sample_bilinear(const ImageRGB& img, double x, double y, Rgb& out) {
    if (!(x >= 0.0 && y >= 0.0 && x <= img.width() - 1 && y <= img.height() - 1)) return false;
    const int x0 = std::min(static_cast<int>(std::floor(x)), std::max(0, img.width() - 2));
    const int y0 = std::min(static_cast<int>(std::floor(y)), std::max(0, img.height() - 2));
    const int x1 = std::min(x0 + 1, img.width() - 1);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const Rgb p00 = img.at(x0, y0), p10 = img.at(x1, y0), p01 = img.at(x0, y1), p11 = img.at(x1, y1);
    auto mix = [&](double a, double b, double c, double d) {
        return to_byte((1 - fy) * ((1 - fx) * a + fx * b) + fy * ((1 - fx) * c + fx * d));
    };
    out = {mix(p00.r, p10.r, p01.r, p11.r), mix(p00.g, p10.g, p01.g, p11.g), mix(p00.b, p10.b, p01.b, p11.b)};
    return true;
}

ImageRGB resize_bilinear(const ImageRGB& img, int width, int height) {
    ImageRGB out(width, height);
    const double sx = width > 1 ? static_cast<double>(img.width() - 1) / (width - 1) : 0.0;
    const double sy = height > 1 ? static_cast<double>(img.height() - 1) / (height - 1) : 0.0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            Rgb c;
            sample_bilinear(img, std::min(x * sx, img.width() - 1.0), std::min(y * sy, img.height() - 1.0), c);
            out.set(x, y, c);
        }
    }
    return out;
}

}  // namespace rulerkit
