/**
 * @file test_hough.cpp
 * @brief Dominant-line voting and greedy multi-line peeling
 */
#include "test_support.hpp"

#include <rulerkit/hough.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

using namespace rulerkit;

namespace {

double distance_to(const HoughLine& l, const Point2& p) {
    return std::abs(l.rho - (p.x * std::cos(l.theta) + p.y * std::sin(l.theta)));
}

/// Exact distance of p to the line y = a x + b.
double distance_to_ab(double a, double b, const Point2& p) {
    return std::abs(a * p.x - p.y + b) / std::hypot(a, 1.0);
}

}  // namespace

TEST(HoughDominant, VerticalLine) {
    const std::vector<Point2> pts{{5, 0}, {5, 3}, {5, 7}, {5, 11}};
    HoughConfig cfg;
    cfg.delta_rho = 1.0;
    const auto det = hough_dominant_line(pts, cfg);
    EXPECT_NEAR(det.line.theta, 0.0, 1e-9);
    EXPECT_NEAR(det.line.rho, 5.0, 1e-9);
    EXPECT_EQ(det.support, 4u);
    EXPECT_EQ(det.inliers, pts);
}

TEST(HoughDominant, DiagonalWithOutlier) {
    const std::vector<Point2> pts{{0, 0}, {1, 1}, {2, 2}, {3, 3}, {10, 0}};
    HoughConfig cfg;
    cfg.delta_rho = 1.0;
    const auto det = hough_dominant_line(pts, cfg);
    EXPECT_EQ(det.inlier_indices, (std::vector<std::size_t>{0, 1, 2, 3}));
    EXPECT_NEAR(det.line.rho, 0.0, 1e-9);
    EXPECT_NEAR(det.line.theta, -kPi / 4, 1e-9);
}

TEST(HoughDominant, BareBinLineWithoutRefinement) {
    const std::vector<Point2> pts{{0, 0}, {1, 1}, {2, 2}, {3, 3}, {10, 0}};
    HoughConfig cfg;
    cfg.delta_rho = 1.0;
    cfg.refine_iterations = 0;
    const auto det = hough_dominant_line(pts, cfg);
    EXPECT_EQ(det.inlier_indices, (std::vector<std::size_t>{0, 1, 2, 3}));
    // the reported line is a bin centre of the accumulator grid
    const double bins = (det.line.theta + kPi / 2) / (kPi / 180.0);
    EXPECT_NEAR(bins, std::round(bins), 1e-9);
}

TEST(HoughDominant, RecoversLineAmongOutliers) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> box(0.0, 100.0);
    std::uniform_int_distribution<int> n_out(0, 8);
    const double a = 0.5;
    const double b = 3.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Point2> pts;
        for (int i = 0; i < 20; ++i) pts.push_back({4.0 * i + 2.0, a * (4.0 * i + 2.0) + b});
        const int outliers = n_out(rng);
        for (int i = 0; i < outliers; ++i) pts.push_back({box(rng), box(rng)});

        const auto det = hough_dominant_line(pts, {});
        const std::set<std::size_t> in(det.inlier_indices.begin(), det.inlier_indices.end());
        for (std::size_t i = 0; i < 20; ++i) EXPECT_TRUE(in.count(i)) << "trial " << trial << " point " << i;
        for (std::size_t i = 20; i < pts.size(); ++i) {
            if (distance_to_ab(a, b, pts[i]) > 2.0 * 2.0) EXPECT_FALSE(in.count(i));
        }
    }
}

TEST(HoughDominant, InliersSatisfyPredicate) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 300.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Point2> pts;
        for (int i = 0; i < 30; ++i) pts.push_back({u(rng), u(rng)});
        HoughConfig cfg;
        const auto det = hough_dominant_line(pts, cfg);
        EXPECT_EQ(det.support, det.inliers.size());
        ASSERT_EQ(det.inliers.size(), det.inlier_indices.size());
        for (std::size_t k = 0; k < det.inliers.size(); ++k) {
            EXPECT_EQ(det.inliers[k], pts[det.inlier_indices[k]]);
            EXPECT_LT(distance_to(det.line, det.inliers[k]), cfg.delta_rho);
        }
        EXPECT_GE(det.line.theta, -kPi / 2);
        EXPECT_LT(det.line.theta, kPi / 2);
    }
}

TEST(HoughDominant, CompleteAtZeroNoise) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(50.0, 700.0);
    std::uniform_real_distribution<double> step(8.0, 30.0);
    for (int trial = 0; trial < 200; ++trial) {
        const Point2 a{u(rng), u(rng)};
        const double ang = std::uniform_real_distribution<double>(0, 2 * kPi)(rng);
        const double s = step(rng);
        std::vector<Point2> pts;
        for (int i = 0; i < 15; ++i) pts.push_back({a.x + i * s * std::cos(ang), a.y + i * s * std::sin(ang)});
        EXPECT_EQ(hough_dominant_line(pts, {}).support, pts.size()) << "trial " << trial;
    }
}

TEST(HoughDominant, TranslationKeepsInlierSet) {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(100.0, 400.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Point2> pts;
        for (int i = 0; i < 12; ++i) pts.push_back({150.0 + 10.0 * i, 200.0 + 3.0 * i});
        for (int i = 0; i < 4; ++i) pts.push_back({u(rng), u(rng)});
        auto moved = pts;
        for (auto& p : moved) {
            p.x += 17;
            p.y -= 9;
        }
        EXPECT_EQ(hough_dominant_line(pts, {}).inlier_indices, hough_dominant_line(moved, {}).inlier_indices);
    }
}

TEST(HoughDominant, Errors) {
    EXPECT_RK_ERROR(hough_dominant_line(std::vector<Point2>{{1, 1}}, {}), ErrorCode::TooFewPoints);
    HoughConfig bad;
    bad.peak_fraction = 1.0;
    EXPECT_RK_ERROR(validate(bad), ErrorCode::InvalidParams);
    bad = {};
    bad.delta_rho = 0.0;
    EXPECT_RK_ERROR(validate(bad), ErrorCode::InvalidParams);
}

TEST(HoughAll, TwoPerpendicularLines) {
    std::vector<Point2> pts;
    for (int i = 0; i < 10; ++i) pts.push_back({100.0 + 20.0 * i, 300.0});
    for (int i = 0; i < 10; ++i) pts.push_back({500.0, 50.0 + 20.0 * i});
    const auto lines = hough_all_lines(pts, {}, 8);
    ASSERT_EQ(lines.size(), 2u);
    EXPECT_EQ(lines[0].support, 10u);
    EXPECT_EQ(lines[1].support, 10u);
    std::set<std::size_t> first(lines[0].inlier_indices.begin(), lines[0].inlier_indices.end());
    std::set<std::size_t> second(lines[1].inlier_indices.begin(), lines[1].inlier_indices.end());
    const bool split = (first.count(0) && second.count(10)) || (first.count(10) && second.count(0));
    EXPECT_TRUE(split);
    for (auto i : first) EXPECT_FALSE(second.count(i));
    for (std::size_t i = 0; i < 20; ++i) EXPECT_TRUE(first.count(i) || second.count(i));
}

TEST(HoughAll, SingleLineTerminates) {
    std::vector<Point2> pts;
    for (int i = 0; i < 10; ++i) pts.push_back({10.0 * i, 2.0 * i + 5.0});
    EXPECT_EQ(hough_all_lines(pts, {}, 8).size(), 1u);
}

TEST(HoughAll, MaxLinesOneMatchesDominant) {
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> u(0.0, 500.0);
    std::vector<Point2> pts;
    for (int i = 0; i < 40; ++i) pts.push_back({u(rng), u(rng)});
    const auto all = hough_all_lines(pts, {}, 1);
    const auto one = hough_dominant_line(pts, {});
    ASSERT_EQ(all.size(), 1u);
    EXPECT_EQ(all[0].inlier_indices, one.inlier_indices);
    EXPECT_EQ(all[0].line.rho, one.line.rho);
    EXPECT_EQ(all[0].line.theta, one.line.theta);
}

TEST(HoughAll, DisjointAndOrderedBySupport) {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(0.0, 600.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Point2> pts;
        for (int i = 0; i < 60; ++i) pts.push_back({u(rng), u(rng)});
        const auto lines = hough_all_lines(pts, {}, 8);
        std::set<std::size_t> seen;
        for (std::size_t k = 0; k < lines.size(); ++k) {
            if (k > 0) EXPECT_GE(lines[k - 1].support, lines[k].support);
            for (auto i : lines[k].inlier_indices) EXPECT_TRUE(seen.insert(i).second);
        }
    }
}
