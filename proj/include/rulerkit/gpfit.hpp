/**
 * @file gpfit.hpp
 * @brief Geometric-progression ruler model, 1D Chamfer objective and its global fit
 *
 * A straight ruler seen under perspective has cm gaps that grow (or shrink) by a
 * constant ratio r from one mark to the next. Three numbers (m0, m1, r) therefore
 * describe every mark along the projected ruler line. The fit searches for the
 * progression whose marks best match the detections in the Chamfer sense.
 */
#pragma once

#include <rulerkit/geometry.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rulerkit {

struct GPParams {
    Mark1D m0;
    Mark1D m1;
    double r = 1.0;

    double spacing() const { return m1.t - m0.t; }

    friend bool operator==(const GPParams&, const GPParams&) = default;
};

/// Throws InvalidParams unless m0 != m1 and r > 0.
void validate(const GPParams& params);

/// Gaps below this are treated as an unresolvable progression.
inline constexpr double kMinGap = 0.5;
/// Hard cap on the number of marks a spanning progression may produce.
inline constexpr std::size_t kMaxSpanMarks = 100000;

/// m_i = r * (m_{i-1} - m_{i-2}) + m_{i-1}, starting from m0, m1.
std::vector<Mark1D> gp_generate(const GPParams& params, std::size_t n);

/// The progression extended from (m0, m1) in both index directions, ascending,
/// restricted to marks inside [lo, hi] plus any mark beyond an end that lies
/// within half of its inward gap of that end.
std::vector<Mark1D> gp_generate_spanning(const GPParams& params, Mark1D lo, Mark1D hi);

/// Mean nearest-neighbour distance from a to b plus the same from b to a.
double chamfer_1d(std::span<const Mark1D> a, std::span<const Mark1D> b);
double chamfer_1d_brute(std::span<const Mark1D> a, std::span<const Mark1D> b);
double chamfer_1d_sorted(std::span<const Mark1D> a, std::span<const Mark1D> b);

struct FitBounds {
    double r_min = 1.0 / 1.5;
    double r_max = 1.5;
    double d_min = 0.0;
    double d_max = 0.0;
};

/// r in [1/1.5, 1.5]; d between the smallest and largest adjacent gap of the sorted marks.
FitBounds default_bounds(std::span<const Mark1D> marks);

struct FitConfig {
    double r_min = 1.0 / 1.5;
    double r_max = 1.5;
    double d_min = 1.0;
    double d_max = 1.0;
    int population = 32;
    int max_generations = 300;
    double crossover_prob = 0.7;
    double weight_min = 0.5; ///< differential weight is redrawn each generation
    double weight_max = 1.0;
    std::uint64_t seed = 0;
    double tolerance = 1e-8;   ///< stagnation threshold, in units of the mean mark spacing
    int stagnation_generations = 30;
    /// Initial members replaced by progressions through consecutive mark triples.
    int seeded_members = 8;
    /// Nelder-Mead budget spent polishing the best member; 0 disables.
    int polish_evaluations = 300;

    /// Copy of this config with bounds taken from `marks`.
    FitConfig with_bounds(const FitBounds& b) const;
};

void validate(const FitConfig& cfg);

struct FitResult {
    GPParams params;
    double objective = 0.0;
    int generations = 0;
    std::size_t evaluations = 0;
};

/// Chamfer distance between sorted marks and the progression spanning them.
/// Returns +inf when the candidate cannot span the range.
double gp_objective(std::span<const Mark1D> sorted_marks, const GPParams& params);

/// Differential evolution (rand/1/bin, Latin hypercube start) over (m0, d, r)
/// with m1 = m0 + d, followed by a bounded Nelder-Mead polish of the best member.
/// Deterministic for a given seed.
FitResult fit_gp_de_report(std::span<const Mark1D> marks, const FitConfig& cfg);

inline GPParams fit_gp_de(std::span<const Mark1D> marks, const FitConfig& cfg) {
    return fit_gp_de_report(marks, cfg).params;
}

enum class EstimateStatus { ok, failed };

struct ScaleEstimate {
    double pixels_per_cm = 0.0;
    EstimateStatus status = EstimateStatus::failed;
    std::optional<GPParams> params;
    std::size_t marks_used = 0;

    bool ok() const { return status == EstimateStatus::ok; }
    static ScaleEstimate failed() { return {}; }
};

/// Mean of the adjacent gaps of the sorted marks.
ScaleEstimate estimate_direct(std::span<const Mark1D> marks);

/// Mean of the adjacent gaps that survive a 20% median-distance filter followed
/// by a 10% median-ratio filter.
ScaleEstimate estimate_median_filtered(std::span<const Mark1D> marks);

/// Mean gap of the fitted progression across [lo, hi].
ScaleEstimate scale_from_gp(const GPParams& params, Mark1D lo, Mark1D hi);

double median(std::vector<double> values);

}  // namespace rulerkit
