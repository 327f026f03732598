/**
 * @file heatmap.hpp
 * @brief Dense mark-probability grids: Gaussian targets, training losses and peak extraction
 */
#pragma once

#include <rulerkit/geometry.hpp>

#include <cstddef>
#include <span>
#include <vector>

namespace rulerkit {

/// Row-major grid of probabilities in [0, 1].
class Heatmap {
public:
    /// All-zero map; width and height must be >= 1.
    Heatmap(int width, int height);

    /// Takes ownership of `values` (row-major, top row first). Throws InvalidValue
    /// when a value falls outside [0, 1] or is not finite.
    Heatmap(int width, int height, std::vector<float> values);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return values_.size(); }

    float at(int x, int y) const { return values_[index(x, y)]; }
    void set(int x, int y, float v);

    std::span<const float> values() const noexcept { return values_; }

    friend bool operator==(const Heatmap&, const Heatmap&) = default;

private:
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_;
    int height_;
    std::vector<float> values_;
};

/// Pixelwise max of unit-peak Gaussians centred on `points`.
Heatmap render_gaussians(std::span<const Point2> points, double sigma, int width, int height);

inline constexpr double kDiceSmoothing = 1e-6;
inline constexpr double kCrossEntropyClamp = 1e-7;

/// 1 - (sum x*y + eps) / (sum x^2 + sum y^2 + eps). No factor 2 in the numerator.
double dice_loss(const Heatmap& x, const Heatmap& y);

/// Mean binary cross entropy with predictions clamped to [1e-7, 1 - 1e-7].
double cross_entropy_loss(const Heatmap& x, const Heatmap& y);

double total_loss(const Heatmap& x, const Heatmap& y, double lambda_ce, double lambda_dice);

struct PeakConfig {
    double tau = 0.5;
    int kernel = 5;
    double sigma = 1.0;
};

/// Normalised k x k Gaussian kernel, row-major.
std::vector<double> gaussian_kernel(int k, double sigma);

/// Zero-padded "same" convolution of the heatmap with a k x k Gaussian.
std::vector<double> smooth_heatmap(const Heatmap& h, int k, double sigma);

/// Integer peak coordinates: strict local maxima along x and along y of the
/// smoothed map whose smoothed value exceeds tau. Row-major order.
std::vector<Point2> extract_peaks(const Heatmap& h, double tau, int k, double sigma);

inline std::vector<Point2> extract_peaks(const Heatmap& h, const PeakConfig& cfg) {
    return extract_peaks(h, cfg.tau, cfg.kernel, cfg.sigma);
}

}  // namespace rulerkit
