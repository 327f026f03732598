/**
 * @file hough.hpp
 * @brief Groups detected marks by collinearity with a (rho, theta) vote accumulator
 */
#pragma once

#include <rulerkit/geometry.hpp>

#include <cstddef>
#include <span>
#include <vector>

namespace rulerkit {

struct HoughConfig {
    double delta_theta = 1.0;   ///< degrees per angle bin
    double delta_rho = 2.0;     ///< pixels per rho bin
    double peak_fraction = 0.3; ///< candidate cells satisfy A > peak_fraction * max(A)
    int kernel_size = 3;        ///< odd; weights below are kernel_size^2 row-major
    std::vector<double> kernel = {1.0 / 16, 2.0 / 16, 1.0 / 16,
                                  2.0 / 16, 4.0 / 16, 2.0 / 16,
                                  1.0 / 16, 2.0 / 16, 1.0 / 16};
    /// Cap on polish rounds after the winner is refit through its best inlier pair; 0 keeps the bin line.
    int refine_iterations = 10;
};

void validate(const HoughConfig& cfg);

struct LineDetection {
    HoughLine line;
    std::vector<Point2> inliers;
    std::vector<std::size_t> inlier_indices; ///< indices into the input point list, ascending
    std::size_t support = 0;
};

/// Line with the most support. Candidates come from the smoothed accumulator;
/// the winner is then refit to its inliers so the reported line is not tied to
/// the bin grid.
LineDetection hough_dominant_line(std::span<const Point2> points, const HoughConfig& cfg = {});

/// Greedy peeling: repeatedly take the dominant line and drop its inliers.
std::vector<LineDetection> hough_all_lines(std::span<const Point2> points, const HoughConfig& cfg,
                                           std::size_t max_lines);

}  // namespace rulerkit
