/**
 * @file geometry.cpp
 */
#include <rulerkit/geometry.hpp>
#include <rulerkit/error.hpp>

#include <cmath>

namespace rulerkit {

double HoughLine::residual(const Point2& p) const {
    return rho - (p.x * std::cos(theta) + p.y * std::sin(theta));
}

HoughLine line_from_normal(double nx, double ny, double rho) {
    double theta = std::atan2(ny, nx);
    // Flip the normal until theta lands in [-pi/2, pi/2); rho changes sign with it.
    if (theta >= kPi / 2.0) {
        theta -= kPi;
        rho = -rho;
    } else if (theta < -kPi / 2.0) {
        theta += kPi;
        rho = -rho;
    }
    return {rho, theta};
}

HoughLine line_from_points(const Point2& a, const Point2& b) {
    if (a == b) {
        fail(ErrorCode::DegenerateInput, "line_from_points: points coincide");
    }
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len = std::hypot(dx, dy);
    const double nx = dy / len;
    const double ny = -dx / len;
    HoughLine line = line_from_normal(nx, ny, a.x * nx + a.y * ny);
    // Recompute rho from the final angle so both points satisfy the equation to rounding.
    const double c = std::cos(line.theta);
    const double s = std::sin(line.theta);
    line.rho = 0.5 * ((a.x + b.x) * c + (a.y + b.y) * s);
    return line;
}

std::vector<Mark1D> project_to_line(std::span<const Point2> points, const HoughLine& line) {
    if (points.empty()) {
        fail(ErrorCode::EmptyInput, "project_to_line: no points");
    }
    const double ux = -std::sin(line.theta);
    const double uy = std::cos(line.theta);
    std::vector<Mark1D> marks;
    marks.reserve(points.size());
    for (const auto& p : points) {
        marks.push_back({p.x * ux + p.y * uy});
    }
    return marks;
}

std::vector<Point2> unproject_from_line(std::span<const Mark1D> marks, const HoughLine& line) {
    const double c = std::cos(line.theta);
    const double s = std::sin(line.theta);
    std::vector<Point2> points;
    points.reserve(marks.size());
    for (const auto& m : marks) {
        points.push_back({line.rho * c - m.t * s, line.rho * s + m.t * c});
    }
    return points;
}

HoughLine fit_line(std::span<const Point2> points) {
    if (points.size() < 2) {
        fail(ErrorCode::TooFewPoints, "fit_line: need at least two points");
    }
    double mx = 0.0, my = 0.0;
    for (const auto& p : points) {
        mx += p.x;
        my += p.y;
    }
    mx /= static_cast<double>(points.size());
    my /= static_cast<double>(points.size());
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (const auto& p : points) {
        const double dx = p.x - mx;
        const double dy = p.y - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx + syy == 0.0) {
        fail(ErrorCode::DegenerateInput, "fit_line: all points coincide");
    }
    // Principal axis of the scatter matrix; the normal is perpendicular to it.
    const double phi = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
    const double nx = -std::sin(phi);
    const double ny = std::cos(phi);
    return line_from_normal(nx, ny, mx * nx + my * ny);
}

std::vector<Mark1D> to_marks(std::span<const double> values) {
    std::vector<Mark1D> marks;
    marks.reserve(values.size());
    for (double v : values) marks.push_back({v});
    return marks;
}

std::vector<double> to_values(std::span<const Mark1D> marks) {
    std::vector<double> values;
    values.reserve(marks.size());
    for (const auto& m : marks) values.push_back(m.t);
    return values;
}

}  // namespace rulerkit
