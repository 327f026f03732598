/**
 * @file geometry.hpp
 * @brief Points, normal-form lines and the 2D <-> 1D projection along a line
 */
#pragma once

#include <span>
#include <vector>

namespace rulerkit {

inline constexpr double kPi = 3.14159265358979323846;

/// Image-space point in pixels; x grows right, y grows down.
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

/// Line x*cos(theta) + y*sin(theta) = rho with theta in [-pi/2, pi/2).
/// Its direction vector is (-sin(theta), cos(theta)).
struct HoughLine {
    double rho = 0.0;
    double theta = 0.0;

    /// Signed residual rho - (x cos(theta) + y sin(theta)).
    double residual(const Point2& p) const;
};

/// Signed coordinate along a line's direction vector.
struct Mark1D {
    double t = 0.0;

    friend bool operator==(const Mark1D&, const Mark1D&) = default;
    friend auto operator<=>(const Mark1D&, const Mark1D&) = default;
};

HoughLine line_from_points(const Point2& a, const Point2& b);

/// Builds a line from a unit normal and offset, normalising theta into [-pi/2, pi/2).
HoughLine line_from_normal(double nx, double ny, double rho);

std::vector<Mark1D> project_to_line(std::span<const Point2> points, const HoughLine& line);

std::vector<Point2> unproject_from_line(std::span<const Mark1D> marks, const HoughLine& line);

/// Total-least-squares line through the points (at least two distinct points).
HoughLine fit_line(std::span<const Point2> points);

std::vector<Mark1D> to_marks(std::span<const double> values);
std::vector<double> to_values(std::span<const Mark1D> marks);

}  // namespace rulerkit
