/**
 * @file hough.cpp
 */
#include <rulerkit/hough.hpp>
#include <rulerkit/error.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rulerkit {

namespace {

struct Assignment {
    std::vector<std::size_t> indices;
    double residual_sum = 0.0;
};

Assignment assign(std::span<const Point2> points, const HoughLine& line, double delta_rho) {
    Assignment a;
    const double c = std::cos(line.theta);
    const double s = std::sin(line.theta);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double d = std::abs(line.rho - (points[i].x * c + points[i].y * s));
        if (d < delta_rho) {
            a.indices.push_back(i);
            a.residual_sum += d;
        }
    }
    return a;
}

LineDetection make_detection(std::span<const Point2> points, const HoughLine& line,
                             std::vector<std::size_t> indices) {
    LineDetection det;
    det.line = line;
    det.inlier_indices = std::move(indices);
    det.inliers.reserve(det.inlier_indices.size());
    for (auto i : det.inlier_indices) det.inliers.push_back(points[i]);
    det.support = det.inliers.size();
    return det;
}

/// Sum over all points of min(residual^2, cap^2).
double truncated_cost(std::span<const Point2> points, const HoughLine& line, double cap) {
    const double cap2 = cap * cap;
    double cost = 0.0;
    for (const auto& p : points) {
        const double r = line.residual(p);
        cost += std::min(r * r, cap2);
    }
    return cost;
}

/// Inlier pairs tried as candidate lines are capped at this many inliers.
constexpr std::size_t kMaxPairInliers = 64;

/// Replaces the bin-centre line by the best of the lines through pairs of its
/// inliers (truncated residual cost), then polishes it with total least squares
/// on the reassigned inliers while the cost keeps dropping.
LineDetection refine(std::span<const Point2> points, HoughLine line, Assignment current,
                     const HoughConfig& cfg) {
    if (cfg.refine_iterations <= 0 || current.indices.size() < 2) {
        return make_detection(points, line, std::move(current.indices));
    }
    const double cap = cfg.delta_rho;
    double cost = truncated_cost(points, line, cap);

    std::vector<std::size_t> pool;
    const std::size_t k = current.indices.size();
    const std::size_t take = std::min(k, kMaxPairInliers);
    for (std::size_t j = 0; j < take; ++j) pool.push_back(current.indices[j * k / take]);
    for (std::size_t a = 0; a < pool.size(); ++a) {
        for (std::size_t b = a + 1; b < pool.size(); ++b) {
            const Point2& p = points[pool[a]];
            const Point2& q = points[pool[b]];
            if (p.x == q.x && p.y == q.y) continue;
            const HoughLine cand = line_from_points(p, q);
            const double c = truncated_cost(points, cand, cap);
            if (c < cost) {
                cost = c;
                line = cand;
            }
        }
    }
    current = assign(points, line, cfg.delta_rho);

    for (int it = 0; it < cfg.refine_iterations && current.indices.size() >= 2; ++it) {
        std::vector<Point2> subset;
        subset.reserve(current.indices.size());
        for (auto i : current.indices) subset.push_back(points[i]);
        HoughLine refit;
        try {
            refit = fit_line(subset);
        } catch (const Error&) {
            break;
        }
        const double next_cost = truncated_cost(points, refit, cap);
        if (!(next_cost < cost)) break;
        Assignment next = assign(points, refit, cfg.delta_rho);
        if (next.indices.size() < 2) break;
        const bool same = next.indices == current.indices;
        line = refit;
        cost = next_cost;
        current = std::move(next);
        if (same) break;
    }
    return make_detection(points, line, std::move(current.indices));
}

}  // namespace

void validate(const HoughConfig& cfg) {
    if (!(cfg.delta_theta > 0.0) || !(cfg.delta_rho > 0.0)) {
        fail(ErrorCode::InvalidParams, "hough: delta_theta and delta_rho must be > 0");
    }
    if (!(cfg.peak_fraction > 0.0 && cfg.peak_fraction < 1.0)) {
        fail(ErrorCode::InvalidParams, "hough: peak_fraction must be in (0, 1)");
    }
    if (cfg.kernel_size < 1 || cfg.kernel_size % 2 == 0 ||
        cfg.kernel.size() != static_cast<std::size_t>(cfg.kernel_size * cfg.kernel_size)) {
        fail(ErrorCode::InvalidKernel, "hough: kernel must be odd-sized and square");
    }
}

LineDetection hough_dominant_line(std::span<const Point2> points, const HoughConfig& cfg) {
    if (points.size() < 2) {
        fail(ErrorCode::TooFewPoints, "hough_dominant_line: need at least two points");
    }
    validate(cfg);

    // Angle grid over [-90, 90) degrees.
    const auto n_theta = static_cast<std::size_t>(std::ceil(180.0 / cfg.delta_theta - 1e-12));
    std::vector<double> theta(n_theta), cos_t(n_theta), sin_t(n_theta);
    for (std::size_t j = 0; j < n_theta; ++j) {
        theta[j] = (-90.0 + static_cast<double>(j) * cfg.delta_theta) * kPi / 180.0;
        cos_t[j] = std::cos(theta[j]);
        sin_t[j] = std::sin(theta[j]);
    }

    double max_norm = 0.0;
    for (const auto& p : points) max_norm = std::max(max_norm, std::hypot(p.x, p.y));
    const double rho_max = std::ceil(max_norm);
    // Bin edges -rho_max, -rho_max + d, ... strictly below rho_max + d.
    const auto n_rho = static_cast<std::size_t>(std::ceil((2.0 * rho_max + cfg.delta_rho) / cfg.delta_rho - 1e-12));
    auto edge = [&](std::size_t i) { return -rho_max + static_cast<double>(i) * cfg.delta_rho; };

    // Votes land in the first edge >= rho (left-open buckets).
    std::vector<double> acc(n_rho * n_theta, 0.0);
    for (const auto& p : points) {
        for (std::size_t j = 0; j < n_theta; ++j) {
            const double rho = p.x * cos_t[j] + p.y * sin_t[j];
            double pos = std::ceil((rho + rho_max) / cfg.delta_rho);
            auto i = static_cast<std::size_t>(std::max(0.0, pos));
            // Guard the division against rounding to the wrong side of an edge.
            while (i > 0 && edge(i - 1) >= rho) --i;
            while (i < n_rho && edge(i) < rho) ++i;
            if (i >= n_rho) i = n_rho - 1;
            acc[i * n_theta + j] += 1.0;
        }
    }

    // Zero-padded convolution with the smoothing kernel.
    const int half = cfg.kernel_size / 2;
    std::vector<double> smooth(acc.size(), 0.0);
    double peak = 0.0;
    for (std::size_t i = 0; i < n_rho; ++i) {
        for (std::size_t j = 0; j < n_theta; ++j) {
            double v = 0.0;
            for (int r = 0; r < cfg.kernel_size; ++r) {
                const auto si = static_cast<long>(i) + r - half;
                if (si < 0 || si >= static_cast<long>(n_rho)) continue;
                for (int c = 0; c < cfg.kernel_size; ++c) {
                    const auto sj = static_cast<long>(j) + c - half;
                    if (sj < 0 || sj >= static_cast<long>(n_theta)) continue;
                    v += cfg.kernel[static_cast<std::size_t>(r * cfg.kernel_size + c)] *
                         acc[static_cast<std::size_t>(si) * n_theta + static_cast<std::size_t>(sj)];
                }
            }
            smooth[i * n_theta + j] = v;
            peak = std::max(peak, v);
        }
    }

    // Best candidate: most inliers, then smaller theta bin, then smaller rho bin.
    const double threshold = cfg.peak_fraction * peak;
    bool found = false;
    std::size_t best_j = 0, best_i = 0;
    Assignment best;
    for (std::size_t j = 0; j < n_theta; ++j) {
        for (std::size_t i = 0; i < n_rho; ++i) {
            if (!(smooth[i * n_theta + j] > threshold)) continue;
            Assignment a = assign(points, HoughLine{edge(i), theta[j]}, cfg.delta_rho);
            if (!found || a.indices.size() > best.indices.size()) {
                best = std::move(a);
                best_i = i;
                best_j = j;
                found = true;
            }
        }
    }
    if (!found) {
        fail(ErrorCode::DegenerateInput, "hough_dominant_line: empty accumulator");
    }
    const HoughLine cell{edge(best_i), theta[best_j]};
    return refine(points, cell, std::move(best), cfg);
}

std::vector<LineDetection> hough_all_lines(std::span<const Point2> points, const HoughConfig& cfg,
                                           std::size_t max_lines) {
    if (points.size() < 2) {
        fail(ErrorCode::TooFewPoints, "hough_all_lines: need at least two points");
    }
    std::vector<Point2> remaining(points.begin(), points.end());
    std::vector<std::size_t> origin(points.size());
    std::iota(origin.begin(), origin.end(), std::size_t{0});

    std::vector<LineDetection> out;
    while (remaining.size() >= 2 && out.size() < max_lines) {
        LineDetection det = hough_dominant_line(remaining, cfg);
        if (det.support < 3 && !out.empty()) break;
        std::vector<bool> taken(remaining.size(), false);
        for (auto idx : det.inlier_indices) taken[idx] = true;
        for (auto& idx : det.inlier_indices) idx = origin[idx];

        std::vector<Point2> next;
        std::vector<std::size_t> next_origin;
        for (std::size_t i = 0; i < remaining.size(); ++i) {
            if (!taken[i]) {
                next.push_back(remaining[i]);
                next_origin.push_back(origin[i]);
            }
        }
        remaining = std::move(next);
        origin = std::move(next_origin);
        const bool weak = det.support < 3;
        out.push_back(std::move(det));
        if (weak) break;
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const LineDetection& a, const LineDetection& b) { return a.support > b.support; });
    return out;
}

}  // namespace rulerkit
