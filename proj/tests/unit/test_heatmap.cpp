/**
 * @file test_heatmap.cpp
 * @brief Gaussian targets, losses and peak extraction
 */
#include "test_support.hpp"

#include <rulerkit/heatmap.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace rulerkit;

namespace {

Heatmap random_map(std::mt19937_64& rng, int w, int h) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::vector<float> v(static_cast<std::size_t>(w * h));
    for (auto& x : v) x = u(rng);
    return Heatmap(w, h, std::move(v));
}

}  // namespace

TEST(Heatmap, RejectsOutOfRangeValues) {
    EXPECT_RK_ERROR(Heatmap(2, 1, std::vector<float>{0.5f, 1.5f}), ErrorCode::InvalidValue);
    EXPECT_RK_ERROR(Heatmap(0, 3), ErrorCode::InvalidValue);
}

TEST(RenderGaussians, NoPointsIsZero) {
    const auto h = render_gaussians({}, 2.0, 16, 12);
    EXPECT_TRUE(std::all_of(h.values().begin(), h.values().end(), [](float v) { return v == 0.0f; }));
}

TEST(RenderGaussians, ClosedForm) {
    const std::vector<Point2> p{{20, 30}};
    const auto h = render_gaussians(p, 2.0, 64, 64);
    EXPECT_FLOAT_EQ(h.at(20, 30), 1.0f);
    EXPECT_NEAR(h.at(21, 30), 0.8824969025845955, 1e-7);
}

TEST(RenderGaussians, SeparatedPeaksStayAtOne) {
    const std::vector<Point2> p{{20, 20}, {32, 20}};
    const auto h = render_gaussians(p, 2.0, 64, 40);
    EXPECT_NEAR(h.at(20, 20), 1.0, 1e-6);
    EXPECT_NEAR(h.at(32, 20), 1.0, 1e-6);
}

TEST(RenderGaussians, InvalidSigma) {
    EXPECT_RK_ERROR(render_gaussians({}, 0.0, 4, 4), ErrorCode::InvalidSigma);
}

TEST(Dice, WorkedExamples) {
    const Heatmap ones(4, 4, std::vector<float>(16, 1.0f));
    EXPECT_NEAR(dice_loss(ones, ones), 0.5, 1e-6);

    const Heatmap x(2, 1, {1.0f, 0.0f});
    const Heatmap y(2, 1, {1.0f, 1.0f});
    EXPECT_NEAR(dice_loss(x, y), 1.0 - 1.0 / 3.0, 1e-6);

    const Heatmap z(3, 3);
    EXPECT_DOUBLE_EQ(dice_loss(z, z), 0.0);
}

TEST(Dice, ShapeMismatch) {
    EXPECT_RK_ERROR(dice_loss(Heatmap(2, 2), Heatmap(2, 3)), ErrorCode::ShapeMismatch);
}

TEST(Dice, SymmetricAndSelfHalf) {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 100; ++i) {
        const auto a = random_map(rng, 9, 7);
        const auto b = random_map(rng, 9, 7);
        EXPECT_NEAR(dice_loss(a, b), dice_loss(b, a), 1e-12);
        EXPECT_NEAR(dice_loss(a, a), 0.5, 1e-6);
    }
}

TEST(CrossEntropy, WorkedExamples) {
    const Heatmap half(3, 2, std::vector<float>(6, 0.5f));
    EXPECT_NEAR(cross_entropy_loss(half, half), 0.6931471805599453, 1e-7);

    const Heatmap binary(4, 1, {0.0f, 1.0f, 1.0f, 0.0f});
    const double perfect = cross_entropy_loss(binary, binary);
    EXPECT_GE(perfect, 0.0);
    EXPECT_LE(perfect, 1.1e-7);

    const Heatmap x(1, 1, {0.9f});
    const Heatmap y(1, 1, {1.0f});
    EXPECT_NEAR(cross_entropy_loss(x, y), 0.10536051565782628, 1e-6);
}

TEST(TotalLoss, LambdasCombineLinearly) {
    std::mt19937_64 rng(4);
    const auto a = random_map(rng, 8, 8);
    const auto b = random_map(rng, 8, 8);
    const double ce = cross_entropy_loss(a, b);
    const double dice = dice_loss(a, b);
    EXPECT_DOUBLE_EQ(total_loss(a, b, 1, 0), ce);
    EXPECT_DOUBLE_EQ(total_loss(a, b, 0, 1), dice);
    EXPECT_NEAR(total_loss(a, b, 2, 3), 2 * ce + 3 * dice, 1e-12);
    EXPECT_NEAR(total_loss(a, b, 2 * 1.7, 2 * 0.4), 2 * total_loss(a, b, 1.7, 0.4), 1e-12);
    EXPECT_RK_ERROR(total_loss(a, b, -1, 1), ErrorCode::InvalidValue);
}

TEST(GaussianKernel, NormalisedAndSymmetric) {
    const auto k = gaussian_kernel(5, 1.0);
    ASSERT_EQ(k.size(), 25u);
    double sum = 0;
    for (double v : k) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 5; ++x) EXPECT_DOUBLE_EQ(k[y * 5 + x], k[x * 5 + y]);
    }
}

TEST(ExtractPeaks, ZeroMapHasNoPeaks) {
    EXPECT_TRUE(extract_peaks(Heatmap(32, 32), 0.5, 5, 1.0).empty());
}

TEST(ExtractPeaks, SingleGaussian) {
    const std::vector<Point2> p{{20, 30}};
    const auto peaks = extract_peaks(render_gaussians(p, 2.0, 64, 64), 0.5, 5, 1.0);
    ASSERT_EQ(peaks.size(), 1u);
    EXPECT_EQ(peaks[0], (Point2{20, 30}));
}

TEST(ExtractPeaks, TwoSeparatedCentres) {
    const std::vector<Point2> p{{12, 15}, {40, 27}};
    const auto h = render_gaussians(p, 2.0, 64, 48);
    const auto peaks = extract_peaks(h, 0.5, 5, 1.0);

    // brute-force scan of the smoothed grid
    const auto s = smooth_heatmap(h, 5, 1.0);
    std::vector<Point2> oracle;
    for (int y = 1; y + 1 < h.height(); ++y) {
        for (int x = 1; x + 1 < h.width(); ++x) {
            const double c = s[y * h.width() + x];
            if (c > 0.5 && c > s[y * h.width() + x - 1] && c > s[y * h.width() + x + 1] &&
                c > s[(y - 1) * h.width() + x] && c > s[(y + 1) * h.width() + x]) {
                oracle.push_back({static_cast<double>(x), static_cast<double>(y)});
            }
        }
    }
    EXPECT_EQ(peaks, oracle);
    EXPECT_EQ(peaks, (std::vector<Point2>{{12, 15}, {40, 27}}));
}

TEST(ExtractPeaks, InvalidKernel) {
    const Heatmap h(8, 8);
    EXPECT_RK_ERROR(extract_peaks(h, 0.5, 4, 1.0), ErrorCode::InvalidKernel);
    EXPECT_RK_ERROR(extract_peaks(h, 0.5, 1, 1.0), ErrorCode::InvalidKernel);
    EXPECT_RK_ERROR(extract_peaks(h, 0.5, 5, 0.0), ErrorCode::InvalidKernel);
}

TEST(ExtractPeaks, PlateauYieldsNoPeak) {
    const Heatmap flat(16, 16, std::vector<float>(256, 1.0f));
    EXPECT_TRUE(extract_peaks(flat, 0.1, 3, 0.5).empty());
}

TEST(ExtractPeaks, RecoversPlantedCentres) {
    std::mt19937_64 rng(77);
    std::uniform_int_distribution<int> coord(4, 91);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Point2> planted;
        while (planted.size() < 6) {
            const Point2 c{static_cast<double>(coord(rng)), static_cast<double>(coord(rng))};
            const bool far = std::all_of(planted.begin(), planted.end(), [&](const Point2& q) {
                return std::hypot(q.x - c.x, q.y - c.y) >= 12.0;
            });
            if (far) planted.push_back(c);
        }
        auto peaks = extract_peaks(render_gaussians(planted, 2.0, 96, 96), 0.5, 5, 1.0);
        auto key = [](const Point2& a, const Point2& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; };
        std::sort(planted.begin(), planted.end(), key);
        EXPECT_EQ(peaks, planted);
    }
}

TEST(ExtractPeaks, CountNonIncreasingInTau) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const auto h = random_map(rng, 24, 24);
        std::size_t prev = extract_peaks(h, 0.05, 3, 1.0).size();
        for (double tau = 0.1; tau < 1.0; tau += 0.05) {
            const std::size_t now = extract_peaks(h, tau, 3, 1.0).size();
            EXPECT_LE(now, prev);
            prev = now;
        }
    }
}
