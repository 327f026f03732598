/**
 * @file heatmap.cpp
 */
#include <rulerkit/heatmap.hpp>
#include <rulerkit/error.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace rulerkit {

namespace {

void check_dims(int width, int height) {
    if (width < 1 || height < 1) {
        fail(ErrorCode::InvalidValue, "heatmap dimensions must be positive, got " +
                                          std::to_string(width) + "x" + std::to_string(height));
    }
}

void check_same_shape(const Heatmap& x, const Heatmap& y) {
    if (x.width() != y.width() || x.height() != y.height()) {
        fail(ErrorCode::ShapeMismatch, "heatmap shapes differ");
    }
}

}  // namespace

Heatmap::Heatmap(int width, int height) : width_(width), height_(height) {
    check_dims(width, height);
    values_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0.0f);
}

Heatmap::Heatmap(int width, int height, std::vector<float> values)
    : width_(width), height_(height), values_(std::move(values)) {
    check_dims(width, height);
    if (values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        fail(ErrorCode::ShapeMismatch, "heatmap value count does not match dimensions");
    }
    for (float v : values_) {
        if (!(v >= 0.0f && v <= 1.0f)) {
            fail(ErrorCode::InvalidValue, "heatmap value outside [0, 1]: " + std::to_string(v));
        }
    }
}

void Heatmap::set(int x, int y, float v) {
    if (!(v >= 0.0f && v <= 1.0f)) {
        fail(ErrorCode::InvalidValue, "heatmap value outside [0, 1]: " + std::to_string(v));
    }
    values_[index(x, y)] = v;
}

Heatmap render_gaussians(std::span<const Point2> points, double sigma, int width, int height) {
    if (!(sigma > 0.0)) {
        fail(ErrorCode::InvalidSigma, "render_gaussians: sigma must be > 0");
    }
    Heatmap h(width, height);
    const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
    // Beyond 6 sigma exp() is below 1.6e-8 and rounds to nothing useful in float.
    const double reach = 6.0 * sigma;
    for (const auto& p : points) {
        const int x0 = std::max(0, static_cast<int>(std::floor(p.x - reach)));
        const int x1 = std::min(width - 1, static_cast<int>(std::ceil(p.x + reach)));
        const int y0 = std::max(0, static_cast<int>(std::floor(p.y - reach)));
        const int y1 = std::min(height - 1, static_cast<int>(std::ceil(p.y + reach)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double dx = x - p.x;
                const double dy = y - p.y;
                const float v = static_cast<float>(std::exp(-(dx * dx + dy * dy) * inv_two_var));
                if (v > h.at(x, y)) h.set(x, y, v);
            }
        }
    }
    return h;
}

double dice_loss(const Heatmap& x, const Heatmap& y) {
    check_same_shape(x, y);
    double cross = 0.0, xx = 0.0, yy = 0.0;
    const auto xv = x.values();
    const auto yv = y.values();
    for (std::size_t i = 0; i < xv.size(); ++i) {
        const double a = xv[i];
        const double b = yv[i];
        cross += a * b;
        xx += a * a;
        yy += b * b;
    }
    return 1.0 - (cross + kDiceSmoothing) / (xx + yy + kDiceSmoothing);
}

double cross_entropy_loss(const Heatmap& x, const Heatmap& y) {
    check_same_shape(x, y);
    const auto xv = x.values();
    const auto yv = y.values();
    double sum = 0.0;
    for (std::size_t i = 0; i < xv.size(); ++i) {
        const double p = std::clamp(static_cast<double>(xv[i]), kCrossEntropyClamp, 1.0 - kCrossEntropyClamp);
        const double t = yv[i];
        sum -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    }
    return sum / static_cast<double>(xv.size());
}

double total_loss(const Heatmap& x, const Heatmap& y, double lambda_ce, double lambda_dice) {
    if (lambda_ce < 0.0 || lambda_dice < 0.0) {
        fail(ErrorCode::InvalidValue, "total_loss: lambdas must be >= 0");
    }
    return lambda_ce * cross_entropy_loss(x, y) + lambda_dice * dice_loss(x, y);
}

std::vector<double> gaussian_kernel(int k, double sigma) {
    if (k < 3 || k % 2 == 0) {
        fail(ErrorCode::InvalidKernel, "kernel size must be odd and >= 3, got " + std::to_string(k));
    }
    if (!(sigma > 0.0)) {
        fail(ErrorCode::InvalidKernel, "kernel sigma must be > 0");
    }
    const int half = k / 2;
    std::vector<double> g(static_cast<std::size_t>(k));
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        const double d = i - half;
        g[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += g[static_cast<std::size_t>(i)];
    }
    for (auto& v : g) v /= sum;
    std::vector<double> kernel(static_cast<std::size_t>(k * k));
    for (int r = 0; r < k; ++r) {
        for (int c = 0; c < k; ++c) {
            kernel[static_cast<std::size_t>(r * k + c)] = g[static_cast<std::size_t>(r)] * g[static_cast<std::size_t>(c)];
        }
    }
    return kernel;
}

std::vector<double> smooth_heatmap(const Heatmap& h, int k, double sigma) {
    const auto kernel = gaussian_kernel(k, sigma);
    const int half = k / 2;
    const int w = h.width();
    const int ht = h.height();
    std::vector<double> out(static_cast<std::size_t>(w) * static_cast<std::size_t>(ht), 0.0);
    for (int y = 0; y < ht; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int r = 0; r < k; ++r) {
                const int sy = y + r - half;
                if (sy < 0 || sy >= ht) continue;
                for (int c = 0; c < k; ++c) {
                    const int sx = x + c - half;
                    if (sx < 0 || sx >= w) continue;
                    acc += kernel[static_cast<std::size_t>(r * k + c)] * h.at(sx, sy);
                }
            }
            out[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] = acc;
        }
    }
    return out;
}

std::vector<Point2> extract_peaks(const Heatmap& h, double tau, int k, double sigma) {
    const auto s = smooth_heatmap(h, k, sigma);
    const int w = h.width();
    const int ht = h.height();
    auto at = [&](int x, int y) {
        return s[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)];
    };
    std::vector<Point2> peaks;
    // Border rows and columns have no neighbour on one side and are padded false.
    for (int y = 1; y + 1 < ht; ++y) {
        for (int x = 1; x + 1 < w; ++x) {
            const double v = at(x, y);
            if (!(v > tau)) continue;
            const bool x_peak = (v - at(x - 1, y) > 0.0) && (at(x + 1, y) - v < 0.0);
            const bool y_peak = (v - at(x, y - 1) > 0.0) && (at(x, y + 1) - v < 0.0);
            if (x_peak && y_peak) {
                peaks.push_back({static_cast<double>(x), static_cast<double>(y)});
            }
        }
    }
    return peaks;
}

}  // namespace rulerkit
