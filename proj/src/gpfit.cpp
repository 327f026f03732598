/**
 * @file gpfit.cpp
 */
#include <rulerkit/gpfit.hpp>
#include <rulerkit/error.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <tuple>
#include <utility>

namespace rulerkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> sorted_values(std::span<const Mark1D> marks) {
    auto v = to_values(marks);
    std::sort(v.begin(), v.end());
    return v;
}

std::vector<double> adjacent_gaps(const std::vector<double>& sorted) {
    std::vector<double> gaps;
    gaps.reserve(sorted.size() > 0 ? sorted.size() - 1 : 0);
    for (std::size_t i = 1; i < sorted.size(); ++i) gaps.push_back(sorted[i] - sorted[i - 1]);
    return gaps;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Fills `out` with the ascending spanning progression. Returns false when the
/// span cannot be covered by at least two marks.
bool span_into(const GPParams& p, double lo, double hi, std::vector<double>& out) {
    out.clear();
    const double d = p.spacing();
    if (!(std::abs(d) >= kMinGap) || !(p.r > 0.0) || !std::isfinite(d) || !std::isfinite(p.r)) return false;

    // Walking upwards from m0 follows the index direction when d > 0 and the
    // reverse index direction (ratio 1/r) otherwise; likewise downwards.
    const double a = p.m0.t;
    const double up_gap = d > 0.0 ? d : -d / p.r;
    const double up_ratio = d > 0.0 ? p.r : 1.0 / p.r;
    const double down_gap = d > 0.0 ? d / p.r : -d;
    const double down_ratio = d > 0.0 ? 1.0 / p.r : p.r;

    // Each walked mark keeps the gaps to its neighbours above and below; the
    // inward one sets how far past the span it may sit.
    struct Walked {
        double t;
        double gap_above;
        double gap_below;
    };
    std::size_t count = 0;
    std::vector<Walked> down;
    double t = a;
    double g = down_gap;
    while (t >= lo && g >= kMinGap) {
        if (++count > kMaxSpanMarks) return false;
        t -= g;
        down.push_back({t, g, g * down_ratio});
        if (t < lo) break;
        g *= down_ratio;
    }
    std::vector<Walked> up;
    t = a;
    g = up_gap;
    while (t <= hi && g >= kMinGap) {
        if (++count > kMaxSpanMarks) return false;
        t += g;
        up.push_back({t, g * up_ratio, g});
        if (t > hi) break;
        g *= up_ratio;
    }

    auto keep = [&](const Walked& w) { return w.t >= lo - 0.5 * w.gap_above && w.t <= hi + 0.5 * w.gap_below; };
    out.reserve(down.size() + up.size() + 1);
    for (auto it = down.rbegin(); it != down.rend(); ++it) {
        if (keep(*it)) out.push_back(it->t);
    }
    if (keep({a, up_gap, down_gap})) out.push_back(a);
    for (const auto& w : up) {
        if (keep(w)) out.push_back(w.t);
    }
    return out.size() >= 2;
}

double chamfer_sorted_values(const std::vector<double>& a, const std::vector<double>& b) {
    auto directed = [](const std::vector<double>& from, const std::vector<double>& to) {
        double sum = 0.0;
        std::size_t j = 0;
        for (double x : from) {
            while (j + 1 < to.size() && to[j + 1] <= x) ++j;
            double best = std::abs(x - to[j]);
            if (j + 1 < to.size()) best = std::min(best, std::abs(to[j + 1] - x));
            sum += best;
        }
        return sum / static_cast<double>(from.size());
    };
    return directed(a, b) + directed(b, a);
}

/// Bounded Nelder-Mead on three variables; points are clamped into the box.
template <typename F>
std::pair<std::array<double, 3>, double> nelder_mead(F&& f, std::array<double, 3> x0, double f0,
                                                     const std::array<double, 3>& lower,
                                                     const std::array<double, 3>& upper, int budget) {
    using Vec = std::array<double, 3>;
    auto clamp = [&](Vec v) {
        for (std::size_t d = 0; d < 3; ++d) v[d] = std::clamp(v[d], lower[d], upper[d]);
        return v;
    };
    std::array<Vec, 4> simplex;
    std::array<double, 4> values;
    simplex[0] = x0;
    values[0] = f0;
    const std::array<double, 3> step{0.05 * std::max(x0[1], 1e-3), 0.05 * std::max(x0[1], 1e-3), 0.01};
    int used = 0;
    for (std::size_t d = 0; d < 3; ++d) {
        Vec v = x0;
        v[d] += (v[d] + step[d] <= upper[d]) ? step[d] : -step[d];
        simplex[d + 1] = clamp(v);
        values[d + 1] = f(simplex[d + 1]);
        ++used;
    }
    auto combine = [&](const Vec& c, const Vec& w, double t) {
        Vec v;
        for (std::size_t d = 0; d < 3; ++d) v[d] = c[d] + t * (w[d] - c[d]);
        return clamp(v);
    };
    while (used < budget) {
        std::array<std::size_t, 4> order{0, 1, 2, 3};
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order[0], worst = order[3], second = order[2];
        if (values[worst] - values[best] <= 1e-12 * (x0[1] + std::abs(values[best]))) break;
        Vec centroid{0.0, 0.0, 0.0};
        for (std::size_t k = 0; k < 3; ++k) {
            for (std::size_t d = 0; d < 3; ++d) centroid[d] += simplex[order[k]][d] / 3.0;
        }
        const Vec reflected = combine(centroid, simplex[worst], -1.0);
        const double fr = f(reflected);
        ++used;
        if (fr < values[best]) {
            const Vec expanded = combine(centroid, simplex[worst], -2.0);
            const double fe = f(expanded);
            ++used;
            if (fe < fr) {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if (fr < values[second]) {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            const bool outside = fr < values[worst];
            const Vec contracted = combine(centroid, outside ? reflected : simplex[worst], 0.5);
            const double fc = f(contracted);
            ++used;
            if (fc < std::min(fr, values[worst])) {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                for (std::size_t k = 1; k < 4; ++k) {
                    const std::size_t idx = order[k];
                    simplex[idx] = combine(simplex[best], simplex[idx], 0.5);
                    values[idx] = f(simplex[idx]);
                    ++used;
                }
            }
        }
    }
    const auto it = std::min_element(values.begin(), values.end());
    const std::size_t i = static_cast<std::size_t>(it - values.begin());
    if (values[i] < f0) return {simplex[i], values[i]};
    return {x0, f0};
}

}  // namespace

void validate(const GPParams& params) {
    if (params.m0 == params.m1) {
        fail(ErrorCode::InvalidParams, "GP params: m0 == m1");
    }
    if (!(params.r > 0.0) || !std::isfinite(params.r)) {
        fail(ErrorCode::InvalidParams, "GP params: r must be > 0");
    }
}

std::vector<Mark1D> gp_generate(const GPParams& params, std::size_t n) {
    validate(params);
    if (n < 2) {
        fail(ErrorCode::InvalidCount, "gp_generate: n must be >= 2");
    }
    std::vector<Mark1D> out;
    out.reserve(n);
    out.push_back(params.m0);
    out.push_back(params.m1);
    for (std::size_t i = 2; i < n; ++i) {
        const double prev = out[i - 1].t;
        out.push_back({params.r * (prev - out[i - 2].t) + prev});
    }
    return out;
}

std::vector<Mark1D> gp_generate_spanning(const GPParams& params, Mark1D lo, Mark1D hi) {
    validate(params);
    if (!(lo.t < hi.t)) {
        fail(ErrorCode::DegenerateSpan, "gp_generate_spanning: need lo < hi");
    }
    if (!(std::abs(params.spacing()) >= kMinGap)) {
        fail(ErrorCode::DegenerateSpan, "gp_generate_spanning: |m1 - m0| below " + std::to_string(kMinGap) + " px");
    }
    std::vector<double> values;
    if (!span_into(params, lo.t, hi.t, values)) {
        fail(ErrorCode::DegenerateSpan, "gp_generate_spanning: progression does not cover the span");
    }
    return to_marks(values);
}

double chamfer_1d_brute(std::span<const Mark1D> a, std::span<const Mark1D> b) {
    if (a.empty() || b.empty()) {
        fail(ErrorCode::EmptyInput, "chamfer_1d: empty input");
    }
    auto directed = [](std::span<const Mark1D> from, std::span<const Mark1D> to) {
        double sum = 0.0;
        for (const auto& x : from) {
            double best = kInf;
            for (const auto& y : to) best = std::min(best, std::abs(x.t - y.t));
            sum += best;
        }
        return sum / static_cast<double>(from.size());
    };
    return directed(a, b) + directed(b, a);
}

double chamfer_1d_sorted(std::span<const Mark1D> a, std::span<const Mark1D> b) {
    if (a.empty() || b.empty()) {
        fail(ErrorCode::EmptyInput, "chamfer_1d: empty input");
    }
    return chamfer_sorted_values(sorted_values(a), sorted_values(b));
}

double chamfer_1d(std::span<const Mark1D> a, std::span<const Mark1D> b) {
    return chamfer_1d_sorted(a, b);
}

FitBounds default_bounds(std::span<const Mark1D> marks) {
    if (marks.size() < 2) {
        fail(ErrorCode::TooFewMarks, "default_bounds: need at least two marks");
    }
    const auto gaps = adjacent_gaps(sorted_values(marks));
    FitBounds b;
    b.d_min = *std::min_element(gaps.begin(), gaps.end());
    b.d_max = *std::max_element(gaps.begin(), gaps.end());
    return b;
}

FitConfig FitConfig::with_bounds(const FitBounds& b) const {
    FitConfig cfg = *this;
    cfg.r_min = b.r_min;
    cfg.r_max = b.r_max;
    cfg.d_min = b.d_min;
    cfg.d_max = b.d_max;
    return cfg;
}

void validate(const FitConfig& cfg) {
    if (!(cfg.r_min > 0.0 && cfg.r_min < cfg.r_max)) {
        fail(ErrorCode::InvalidParams, "FitConfig: need 0 < r_min < r_max");
    }
    if (!(cfg.d_min > 0.0 && cfg.d_min <= cfg.d_max)) {
        fail(ErrorCode::InvalidParams, "FitConfig: need 0 < d_min <= d_max");
    }
    if (cfg.seeded_members < 0 || cfg.polish_evaluations < 0) {
        fail(ErrorCode::InvalidParams, "FitConfig: seeded_members and polish_evaluations must be >= 0");
    }
    if (cfg.population < 8) {
        fail(ErrorCode::InvalidParams, "FitConfig: population must be >= 8");
    }
    if (cfg.max_generations < 1 || !(cfg.crossover_prob >= 0.0 && cfg.crossover_prob <= 1.0) ||
        !(cfg.weight_min > 0.0 && cfg.weight_min <= cfg.weight_max)) {
        fail(ErrorCode::InvalidParams, "FitConfig: invalid evolution settings");
    }
}

double gp_objective(std::span<const Mark1D> sorted_marks, const GPParams& params) {
    thread_local std::vector<double> generated;
    thread_local std::vector<double> gt;
    gt.clear();
    for (const auto& m : sorted_marks) gt.push_back(m.t);
    if (!span_into(params, gt.front(), gt.back(), generated)) return kInf;
    return chamfer_sorted_values(gt, generated);
}

FitResult fit_gp_de_report(std::span<const Mark1D> marks, const FitConfig& cfg_in) {
    if (marks.size() < 3) {
        fail(ErrorCode::TooFewMarks, "fit_gp_de: need at least three marks");
    }
    FitConfig cfg = cfg_in;
    if (cfg.d_min == cfg.d_max) {
        cfg.d_min *= 0.9;
        cfg.d_max *= 1.1;
    }
    cfg.d_min = std::max(cfg.d_min, kMinGap);
    cfg.d_max = std::max(cfg.d_max, cfg.d_min);
    if (cfg.d_min == cfg.d_max) cfg.d_max = cfg.d_min * 1.1;
    validate(cfg);

    const auto sorted = sorted_values(marks);
    const double lo = sorted.front();
    if (!(sorted.back() > lo)) {
        fail(ErrorCode::DegenerateSpan, "fit_gp_de: all marks coincide");
    }

    using Vec = std::array<double, 3>;  // (m0, d, r)
    const Vec lower{lo - cfg.d_max, cfg.d_min, cfg.r_min};
    const Vec upper{lo + cfg.d_max, cfg.d_max, cfg.r_max};

    std::vector<double> generated;
    std::size_t evaluations = 0;
    auto energy = [&](const Vec& x) {
        ++evaluations;
        const GPParams p{{x[0]}, {x[0] + x[1]}, x[2]};
        if (!span_into(p, sorted.front(), sorted.back(), generated)) return kInf;
        return chamfer_sorted_values(sorted, generated);
    };

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto pop_size = static_cast<std::size_t>(cfg.population);

    // Latin hypercube: one sample per stratum in every dimension.
    std::vector<Vec> pop(pop_size);
    for (std::size_t dim = 0; dim < 3; ++dim) {
        std::vector<std::size_t> strata(pop_size);
        std::iota(strata.begin(), strata.end(), std::size_t{0});
        std::shuffle(strata.begin(), strata.end(), rng);
        for (std::size_t i = 0; i < pop_size; ++i) {
            const double u = (static_cast<double>(strata[i]) + unit(rng)) / static_cast<double>(pop_size);
            pop[i][dim] = lower[dim] + u * (upper[dim] - lower[dim]);
        }
    }
    // Progressions through consecutive triples, spread evenly over the marks.
    const std::size_t triples = sorted.size() - 2;
    const std::size_t seeds = std::min({static_cast<std::size_t>(std::max(0, cfg.seeded_members)), triples, pop_size});
    for (std::size_t s = 0; s < seeds; ++s) {
        const std::size_t i = seeds == 1 ? 0 : s * (triples - 1) / (seeds - 1);
        const double g1 = sorted[i + 1] - sorted[i];
        const double g2 = sorted[i + 2] - sorted[i + 1];
        if (!(g1 > 0.0) || !(g2 > 0.0)) continue;
        const Vec seed{sorted[i], g1, g2 / g1};
        for (std::size_t dim = 0; dim < 3; ++dim) pop[s][dim] = std::clamp(seed[dim], lower[dim], upper[dim]);
    }

    std::vector<double> energies(pop_size);
    for (std::size_t i = 0; i < pop_size; ++i) energies[i] = energy(pop[i]);

    auto best_index = [&] {
        return static_cast<std::size_t>(std::min_element(energies.begin(), energies.end()) - energies.begin());
    };
    std::size_t best = best_index();
    double reference = energies[best];
    const double tolerance = cfg.tolerance * (sorted.back() - lo) / static_cast<double>(sorted.size() - 1);
    int last_improvement = 0;

    std::uniform_int_distribution<std::size_t> pick(0, pop_size - 1);
    std::uniform_int_distribution<std::size_t> pick_dim(0, 2);
    int gen = 0;
    for (gen = 1; gen <= cfg.max_generations; ++gen) {
        const double weight = cfg.weight_min + (cfg.weight_max - cfg.weight_min) * unit(rng);
        for (std::size_t i = 0; i < pop_size; ++i) {
            std::size_t r0, r1, r2;
            do { r0 = pick(rng); } while (r0 == i);
            do { r1 = pick(rng); } while (r1 == i || r1 == r0);
            do { r2 = pick(rng); } while (r2 == i || r2 == r0 || r2 == r1);

            Vec trial = pop[i];
            const std::size_t forced = pick_dim(rng);
            for (std::size_t dim = 0; dim < 3; ++dim) {
                const double u = unit(rng);
                if (dim == forced || u < cfg.crossover_prob) {
                    trial[dim] = pop[r0][dim] + weight * (pop[r1][dim] - pop[r2][dim]);
                }
            }
            // Out-of-box components are resampled uniformly inside the box.
            for (std::size_t dim = 0; dim < 3; ++dim) {
                if (trial[dim] < lower[dim] || trial[dim] > upper[dim]) {
                    trial[dim] = lower[dim] + unit(rng) * (upper[dim] - lower[dim]);
                }
            }
            const double e = energy(trial);
            if (e <= energies[i]) {
                pop[i] = trial;
                energies[i] = e;
                if (e < energies[best]) best = i;
            }
        }
        if (energies[best] < reference - tolerance) {
            reference = energies[best];
            last_improvement = gen;
        } else if (gen - last_improvement >= cfg.stagnation_generations) {
            break;
        }
    }

    Vec x = pop[best];
    double fx = energies[best];
    if (cfg.polish_evaluations > 0 && std::isfinite(fx)) {
        std::tie(x, fx) = nelder_mead(energy, x, fx, lower, upper, cfg.polish_evaluations);
    }

    FitResult result;
    result.params = GPParams{{x[0]}, {x[0] + x[1]}, x[2]};
    result.objective = fx;
    result.generations = std::min(gen, cfg.max_generations);
    result.evaluations = evaluations;
    return result;
}

double median(std::vector<double> values) {
    if (values.empty()) {
        fail(ErrorCode::EmptyInput, "median: no values");
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return 0.5 * (values[mid - 1] + values[mid]);
}

ScaleEstimate estimate_direct(std::span<const Mark1D> marks) {
    if (marks.size() < 2) return ScaleEstimate::failed();
    const auto gaps = adjacent_gaps(sorted_values(marks));
    ScaleEstimate est;
    est.pixels_per_cm = mean(gaps);
    est.status = EstimateStatus::ok;
    est.marks_used = marks.size();
    return est;
}

ScaleEstimate estimate_median_filtered(std::span<const Mark1D> marks) {
    if (marks.size() < 3) return ScaleEstimate::failed();
    const auto gaps = adjacent_gaps(sorted_values(marks));

    const double med_gap = median(gaps);
    std::vector<double> survivors;
    for (double g : gaps) {
        if (std::abs(g - med_gap) <= 0.2 * med_gap) survivors.push_back(g);
    }
    if (survivors.empty()) return ScaleEstimate::failed();

    // Ratio filter on consecutive survivors: drop a gap only when every ratio it
    // takes part in falls outside the 10% band.
    std::vector<double> kept;
    if (survivors.size() >= 2) {
        std::vector<double> ratios;
        for (std::size_t j = 0; j + 1 < survivors.size(); ++j) ratios.push_back(survivors[j + 1] / survivors[j]);
        const double med_ratio = median(ratios);
        auto ratio_ok = [&](std::size_t j) { return std::abs(ratios[j] - med_ratio) <= 0.1 * med_ratio; };
        for (std::size_t i = 0; i < survivors.size(); ++i) {
            const bool left_ok = i > 0 && ratio_ok(i - 1);
            const bool right_ok = i + 1 < survivors.size() && ratio_ok(i);
            if (left_ok || right_ok) kept.push_back(survivors[i]);
        }
    } else {
        kept = survivors;
    }
    if (kept.empty()) return ScaleEstimate::failed();

    ScaleEstimate est;
    est.pixels_per_cm = mean(kept);
    est.status = EstimateStatus::ok;
    est.marks_used = kept.size() + 1;
    return est;
}

ScaleEstimate scale_from_gp(const GPParams& params, Mark1D lo, Mark1D hi) {
    std::vector<Mark1D> marks;
    try {
        marks = gp_generate_spanning(params, lo, hi);
    } catch (const Error&) {
        return ScaleEstimate::failed();
    }
    std::vector<double> gaps;
    for (std::size_t i = 1; i < marks.size(); ++i) gaps.push_back(marks[i].t - marks[i - 1].t);
    ScaleEstimate est;
    est.pixels_per_cm = mean(gaps);
    est.status = EstimateStatus::ok;
    est.params = params;
    est.marks_used = marks.size();
    return est;
}

}  // namespace rulerkit
