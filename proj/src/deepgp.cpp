/**
 * @file deepgp.cpp
 */
#include <rulerkit/deepgp.hpp>
#include <rulerkit/error.hpp>
#include <rulerkit/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace rulerkit {

using Matrix = DeepGPModel::Matrix;
using Vector = DeepGPModel::Vector;

namespace {

constexpr double kMinNormalizedSpacing = 1e-6;

/// First gap of a progression that starts at m0n and reaches 1 after a whole
/// number of gaps, the count being the one closest to (1 - m0n) / mean_gap.
double first_gap(double m0n, double mean_gap, double r) {
    const double span = 1.0 - m0n;
    const double gaps = std::max(1.0, std::round(span / std::max(mean_gap, kMinNormalizedSpacing)));
    double d = span / gaps;
    if (std::abs(r - 1.0) > 1e-9) d = span * (r - 1.0) / (std::pow(r, gaps) - 1.0);
    return std::isfinite(d) ? std::max(d, kMinNormalizedSpacing) : kMinNormalizedSpacing;
}

struct ForwardCache {
    std::vector<Matrix> activations; ///< input, then each layer output (post-activation)
    std::vector<Matrix> pre;         ///< each layer pre-activation
};

Matrix affine(const Matrix& a, const DeepGPModel::Layer& layer) {
    Matrix z = a * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
    return z;
}

ForwardCache forward_cached(const DeepGPModel& model, const Matrix& inputs) {
    ForwardCache cache;
    const auto& layers = model.layers();
    cache.activations.reserve(layers.size() + 1);
    cache.pre.reserve(layers.size());
    cache.activations.push_back(inputs);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Matrix z = affine(cache.activations.back(), layers[l]);
        Matrix a = (l + 1 < layers.size()) ? Matrix(z.cwiseMax(0.0f)) : z;
        cache.pre.push_back(std::move(z));
        cache.activations.push_back(std::move(a));
    }
    return cache;
}

double squared_error(const Matrix& out, const Matrix& targets) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        for (Eigen::Index j = 0; j < out.cols(); ++j) {
            const double e = static_cast<double>(out(i, j)) - static_cast<double>(targets(i, j));
            sum += e * e;
        }
    }
    return sum / static_cast<double>(out.size());
}

/// Loss of the float32 weights evaluated in double precision, so that central
/// differences are not swamped by float rounding.
double squared_error_exact(const DeepGPModel& model, const Matrix& inputs, const Matrix& targets) {
    Eigen::MatrixXd a = inputs.cast<double>();
    const auto& layers = model.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Eigen::MatrixXd z = a * layers[l].weights.cast<double>().transpose();
        z.rowwise() += layers[l].bias.cast<double>().transpose();
        a = (l + 1 < layers.size()) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
    }
    return (a - targets.cast<double>()).squaredNorm() / static_cast<double>(a.size());
}

void check_batch(const DeepGPModel& model, const Matrix& inputs, const Matrix& targets) {
    if (model.layers().empty()) {
        fail(ErrorCode::InvalidParams, "DeepGP model has no layers");
    }
    if (static_cast<std::size_t>(inputs.cols()) != model.input_size() ||
        static_cast<std::size_t>(targets.cols()) != model.output_size() || inputs.rows() != targets.rows() ||
        inputs.rows() == 0) {
        fail(ErrorCode::ShapeMismatch, "DeepGP batch shape does not match the model");
    }
}

}  // namespace

void validate(const NoiseConfig& cfg) {
    if (!(cfg.sigma_frac >= 0.0) || !(cfg.drop_frac_max >= 0.0 && cfg.drop_frac_max < 1.0) || cfg.add_max < 0) {
        fail(ErrorCode::InvalidParams, "NoiseConfig out of range");
    }
}

NoisyGPSample generate_noisy_gp(const GPParams& truth, std::size_t n, const NoiseConfig& cfg) {
    validate(cfg);
    if (n < 3 || n > kMaxDeepGPMarks) {
        fail(ErrorCode::InvalidCount, "generate_noisy_gp: n must be in [3, 64], got " + std::to_string(n));
    }
    const auto clean = gp_generate(truth, n);
    std::mt19937_64 rng(cfg.seed);

    std::vector<double> marks = to_values(clean);
    const double sigma = cfg.sigma_frac * std::abs(truth.spacing());
    if (sigma > 0.0) {
        std::normal_distribution<double> noise(0.0, sigma);
        for (auto& m : marks) m += noise(rng);
    }

    const auto drop_limit = std::min(static_cast<std::size_t>(std::floor(cfg.drop_frac_max * static_cast<double>(n))), n - 3);
    const auto drop = std::uniform_int_distribution<std::size_t>(0, drop_limit)(rng);
    if (drop > 0) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<bool> removed(n, false);
        for (std::size_t i = 0; i < drop; ++i) removed[order[i]] = true;
        std::vector<double> kept;
        for (std::size_t i = 0; i < n; ++i) {
            if (!removed[i]) kept.push_back(marks[i]);
        }
        marks = std::move(kept);
    }
    const std::size_t n_clean = marks.size();

    const auto add = std::uniform_int_distribution<int>(0, cfg.add_max)(rng);
    if (add > 0) {
        const auto [lo_it, hi_it] = std::minmax_element(clean.begin(), clean.end());
        std::uniform_real_distribution<double> where(lo_it->t, hi_it->t);
        for (int i = 0; i < add; ++i) marks.push_back(where(rng));
    }
    std::shuffle(marks.begin(), marks.end(), rng);

    NoisyGPSample sample;
    sample.marks = to_marks(marks);
    sample.truth = truth;
    sample.n_clean = n_clean;
    return sample;
}

NormalizedMarks normalize_marks(std::span<const Mark1D> marks) {
    if (marks.size() < 2) {
        fail(ErrorCode::DegenerateRange, "normalize_marks: need at least two marks");
    }
    const auto [lo_it, hi_it] = std::minmax_element(marks.begin(), marks.end());
    const double lo = lo_it->t;
    const double hi = hi_it->t;
    if (!(hi > lo)) {
        fail(ErrorCode::DegenerateRange, "normalize_marks: all marks are equal");
    }
    NormalizedMarks out;
    out.record.offset = 0.5 * (hi + lo);
    out.record.scale = 0.5 * (hi - lo);
    out.values.reserve(marks.size());
    for (const auto& m : marks) {
        double v = (m.t - out.record.offset) / out.record.scale;
        out.values.push_back(std::clamp(v, -1.0, 1.0));
    }
    return out;
}

std::vector<float> encode_input(std::span<const double> normalized) {
    if (normalized.size() > kMaxDeepGPMarks) {
        fail(ErrorCode::TooManyMarks, "encode_input: at most 64 marks, got " + std::to_string(normalized.size()));
    }
    if (normalized.size() < 2) {
        fail(ErrorCode::TooFewMarks, "encode_input: need at least two marks");
    }
    std::vector<double> sorted(normalized.begin(), normalized.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<float> features(kDeepGPInputSize, 0.0f);
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        features[i] = static_cast<float>(sorted[i]);
        features[kMaxDeepGPMarks + i] = 1.0f;
    }
    return features;
}

std::vector<double> decode_input(std::span<const float> features) {
    if (features.size() != kDeepGPInputSize) {
        fail(ErrorCode::ShapeMismatch, "decode_input: expected 128 features");
    }
    std::vector<double> values;
    for (std::size_t i = 0; i < kMaxDeepGPMarks; ++i) {
        if (features[kMaxDeepGPMarks + i] != 0.0f) values.push_back(features[i]);
    }
    return values;
}

DeepGPModel::DeepGPModel(std::vector<Layer> layers) : layers_(std::move(layers)) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& layer = layers_[l];
        if (layer.bias.size() != layer.weights.rows() ||
            (l > 0 && layers_[l - 1].weights.rows() != layer.weights.cols())) {
            fail(ErrorCode::ShapeMismatch, "DeepGP layer dimensions do not chain");
        }
        if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
            fail(ErrorCode::InvalidValue, "DeepGP weights must be finite");
        }
    }
}

DeepGPModel DeepGPModel::create(std::span<const int> sizes, std::uint64_t seed) {
    if (sizes.size() < 2) {
        fail(ErrorCode::InvalidParams, "DeepGP model needs at least input and output sizes");
    }
    std::mt19937_64 rng(seed);
    std::vector<Layer> layers;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int in = sizes[l];
        const int out = sizes[l + 1];
        if (in < 1 || out < 1) {
            fail(ErrorCode::InvalidParams, "DeepGP layer sizes must be positive");
        }
        std::normal_distribution<float> init(0.0f, static_cast<float>(std::sqrt(2.0 / in)));
        Layer layer{Matrix(out, in), Vector::Zero(out)};
        for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = init(rng);
        layers.push_back(std::move(layer));
    }
    return DeepGPModel(std::move(layers));
}

DeepGPModel DeepGPModel::create_default(std::uint64_t seed) {
    const std::array<int, 5> sizes{static_cast<int>(kDeepGPInputSize), 256, 256, 256,
                                   static_cast<int>(kDeepGPOutputSize)};
    return create(sizes, seed);
}

std::size_t DeepGPModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
}

std::size_t DeepGPModel::input_size() const {
    return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().weights.cols());
}

std::size_t DeepGPModel::output_size() const {
    return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().weights.rows());
}

Matrix DeepGPModel::forward(const Matrix& inputs) const {
    if (layers_.empty() || static_cast<std::size_t>(inputs.cols()) != input_size()) {
        fail(ErrorCode::ShapeMismatch, "DeepGP forward: input width does not match the model");
    }
    Matrix a = inputs;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Matrix z = affine(a, layers_[l]);
        a = (l + 1 < layers_.size()) ? Matrix(z.cwiseMax(0.0f)) : z;
    }
    return a;
}

bool operator==(const DeepGPModel& a, const DeepGPModel& b) {
    if (a.layers_.size() != b.layers_.size()) return false;
    for (std::size_t l = 0; l < a.layers_.size(); ++l) {
        const auto& x = a.layers_[l];
        const auto& y = b.layers_[l];
        if (x.weights.rows() != y.weights.rows() || x.weights.cols() != y.weights.cols()) return false;
        if (x.weights != y.weights || x.bias != y.bias) return false;
    }
    return true;
}

Gradients mse_gradients(const DeepGPModel& model, const Matrix& inputs, const Matrix& targets) {
    check_batch(model, inputs, targets);
    const auto cache = forward_cached(model, inputs);
    const auto& layers = model.layers();
    const Matrix& out = cache.activations.back();

    Gradients grads;
    grads.loss = squared_error(out, targets);
    grads.layers.resize(layers.size());

    Matrix delta = (out - targets) * static_cast<float>(2.0 / static_cast<double>(out.size()));
    for (std::size_t l = layers.size(); l-- > 0;) {
        const Matrix& a_prev = cache.activations[l];
        grads.layers[l].weights = delta.transpose() * a_prev;
        grads.layers[l].bias = delta.colwise().sum().transpose();
        if (l == 0) break;
        Matrix back = delta * layers[l].weights;
        const Matrix& z_prev = cache.pre[l - 1];
        delta = back.cwiseProduct((z_prev.array() > 0.0f).cast<float>().matrix());
    }
    return grads;
}

double mse_loss(const DeepGPModel& model, const Matrix& inputs, const Matrix& targets) {
    check_batch(model, inputs, targets);
    return squared_error(model.forward(inputs), targets);
}

double gradient_check(const DeepGPModel& model, const Matrix& inputs, const Matrix& targets, double step) {
    const auto analytic = mse_gradients(model, inputs, targets);
    DeepGPModel probe = model;
    double worst = 0.0;
    auto check = [&](float& param, float grad) {
        const float original = param;
        param = static_cast<float>(original + step);
        const float up = param;
        const double loss_up = squared_error_exact(probe, inputs, targets);
        param = static_cast<float>(original - step);
        const float down = param;
        const double loss_down = squared_error_exact(probe, inputs, targets);
        param = original;
        const double numeric = (loss_up - loss_down) / (static_cast<double>(up) - static_cast<double>(down));
        const double a = grad;
        // Absolute floor keeps near-zero gradients from dominating through rounding noise.
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-3});
        worst = std::max(worst, std::abs(a - numeric) / denom);
    };
    for (std::size_t l = 0; l < probe.layers().size(); ++l) {
        auto& layer = probe.layers()[l];
        const auto& g = analytic.layers[l];
        for (Eigen::Index i = 0; i < layer.weights.size(); ++i) check(layer.weights.data()[i], g.weights.data()[i]);
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) check(layer.bias.data()[i], g.bias.data()[i]);
    }
    return worst;
}

GPParams deepgp_infer(const DeepGPModel& model, std::span<const Mark1D> marks) {
    if (marks.size() > kMaxDeepGPMarks) {
        fail(ErrorCode::TooManyMarks, "deepgp_infer: at most 64 marks");
    }
    if (marks.size() < 3) {
        fail(ErrorCode::TooFewMarks, "deepgp_infer: need at least three marks");
    }
    const auto norm = normalize_marks(marks);
    const auto features = encode_input(norm.values);
    Matrix input(1, static_cast<Eigen::Index>(features.size()));
    for (std::size_t i = 0; i < features.size(); ++i) input(0, static_cast<Eigen::Index>(i)) = features[i];
    const Matrix out = model.forward(input);
    if (out.cols() != static_cast<Eigen::Index>(kDeepGPOutputSize)) {
        fail(ErrorCode::ShapeMismatch, "deepgp_infer: model must output three values");
    }
    const double mean_gap = std::exp(static_cast<double>(out(0, 1)));
    double m0n = std::min(static_cast<double>(out(0, 0)), 0.5);
    // A first mark predicted within half a gap of the smallest observation is that observation.
    if (std::abs(m0n + 1.0) <= 0.5 * mean_gap) m0n = -1.0;
    const double r = std::clamp(static_cast<double>(out(0, 2)), 1.0 / 1.5, 1.5);
    const double dn = first_gap(m0n, mean_gap, r);

    GPParams p;
    p.m0.t = m0n * norm.record.scale + norm.record.offset;
    p.m1.t = p.m0.t + dn * norm.record.scale;
    p.r = r;
    return p;
}

TrainingSample make_training_sample(const SampleStreamConfig& cfg, std::uint64_t index) {
    std::mt19937_64 rng(derive_seed(cfg.noise.seed, index));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double r = cfg.r_min + (cfg.r_max - cfg.r_min) * unit(rng);
    // Spurious marks come on top of the clean ones; keep the total encodable.
    const int n_cap = static_cast<int>(kMaxDeepGPMarks) - std::max(0, cfg.noise.add_max);
    const int n_max = std::max(cfg.n_min, std::min(cfg.n_max, n_cap));
    const int n = std::uniform_int_distribution<int>(cfg.n_min, n_max)(rng);
    const double gap = cfg.d_min + (cfg.d_max - cfg.d_min) * unit(rng);
    const double d = r >= 1.0 ? gap : gap / std::pow(r, static_cast<double>(n) - 2.0);
    const double m0 = cfg.m0_min + (cfg.m0_max - cfg.m0_min) * unit(rng);

    NoiseConfig noise = cfg.noise;
    noise.sigma_frac = cfg.noise.sigma_frac * unit(rng);
    noise.seed = rng();

    TrainingSample s;
    const GPParams truth{{m0}, {m0 + d}, r};
    s.sample = generate_noisy_gp(truth, static_cast<std::size_t>(n), noise);
    const auto norm = normalize_marks(s.sample.marks);
    s.input = encode_input(norm.values);
    // Targets describe the same progression re-indexed so that m0 is the clean
    // mark nearest the observed minimum, with the spacing given as the mean gap
    // across the observed range.
    const auto clean = gp_generate(truth, static_cast<std::size_t>(n));
    const double lo = norm.record.offset - norm.record.scale;
    std::size_t k = 0;
    for (std::size_t i = 1; i < clean.size(); ++i) {
        if (std::abs(clean[i].t - lo) < std::abs(clean[k].t - lo)) k = i;
    }
    const double mean_gap = scale_from_gp(truth, Mark1D{lo}, Mark1D{lo + 2.0 * norm.record.scale}).pixels_per_cm;
    s.target = {static_cast<float>((clean[k].t - norm.record.offset) / norm.record.scale),
                static_cast<float>(std::log(mean_gap / norm.record.scale)), static_cast<float>(r)};
    return s;
}

double learning_rate_at(const TrainConfig& cfg, long step) {
    const long warmup = static_cast<long>(std::floor(cfg.warmup_fraction * static_cast<double>(cfg.steps)));
    if (step < warmup) {
        return cfg.learning_rate * static_cast<double>(step + 1) / static_cast<double>(warmup);
    }
    const long span = std::max(1L, cfg.steps - warmup);
    const double progress = static_cast<double>(step - warmup) / static_cast<double>(span);
    return cfg.learning_rate * 0.5 * (1.0 + std::cos(kPi * progress));
}

TrainReport deepgp_train(const SampleStreamConfig& stream, const TrainConfig& cfg, const TrainLogger& log) {
    std::vector<int> sizes;
    sizes.push_back(static_cast<int>(kDeepGPInputSize));
    sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    sizes.push_back(static_cast<int>(kDeepGPOutputSize));
    return deepgp_train(DeepGPModel::create(sizes, cfg.seed), stream, cfg, log);
}

TrainReport deepgp_train(DeepGPModel model, const SampleStreamConfig& stream_in, const TrainConfig& cfg,
                         const TrainLogger& log) {
    if (cfg.steps < 1 || cfg.batch < 1) {
        fail(ErrorCode::InvalidParams, "deepgp_train: steps and batch must be >= 1");
    }
    SampleStreamConfig stream = stream_in;
    stream.noise.seed = derive_seed(stream_in.noise.seed, cfg.seed);

    const auto batch = static_cast<std::size_t>(cfg.batch);
    const auto n_layers = model.layers().size();
    std::vector<DeepGPModel::Layer> m1(n_layers), m2(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        const auto& layer = model.layers()[l];
        m1[l] = {Matrix::Zero(layer.weights.rows(), layer.weights.cols()), Vector::Zero(layer.bias.size())};
        m2[l] = m1[l];
    }
    constexpr float beta1 = 0.9f;
    constexpr float beta2 = 0.999f;
    constexpr float eps = 1e-8f;

    TrainReport report;
    report.losses.reserve(static_cast<std::size_t>(cfg.steps));
    Matrix inputs(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(kDeepGPInputSize));
    Matrix targets(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(kDeepGPOutputSize));

    for (long step = 0; step < cfg.steps; ++step) {
        parallel_for(batch, cfg.jobs, [&](std::size_t b) {
            const auto s = make_training_sample(stream, static_cast<std::uint64_t>(step) * batch + b);
            const auto row = static_cast<Eigen::Index>(b);
            for (std::size_t i = 0; i < kDeepGPInputSize; ++i) inputs(row, static_cast<Eigen::Index>(i)) = s.input[i];
            for (std::size_t i = 0; i < kDeepGPOutputSize; ++i) targets(row, static_cast<Eigen::Index>(i)) = s.target[i];
        });

        auto grads = mse_gradients(model, inputs, targets);
        report.losses.push_back(grads.loss);
        if (log) log(step, grads.loss);

        const double lr = learning_rate_at(cfg, step);
        const double c1 = 1.0 - std::pow(0.9, static_cast<double>(step + 1));
        const double c2 = 1.0 - std::pow(0.999, static_cast<double>(step + 1));
        const auto alpha = static_cast<float>(lr * std::sqrt(c2) / c1);
        if (alpha == 0.0f) continue;
        auto update = [&](auto& param, auto& mom, auto& vel, const auto& grad) {
            mom = beta1 * mom + (1.0f - beta1) * grad;
            vel = beta2 * vel + (1.0f - beta2) * grad.cwiseAbs2();
            param.array() -= alpha * mom.array() / (vel.array().sqrt() + eps);
        };
        for (std::size_t l = 0; l < n_layers; ++l) {
            auto& layer = model.layers()[l];
            update(layer.weights, m1[l].weights, m2[l].weights, grads.layers[l].weights);
            update(layer.bias, m1[l].bias, m2[l].bias, grads.layers[l].bias);
        }
    }
    report.model = std::move(model);
    return report;
}

}  // namespace rulerkit
