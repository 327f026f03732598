/**
 * @file deepgp.hpp
 * @brief Feed-forward regressor from noisy 1D marks straight to progression parameters
 *
 * Marks are min-max normalised to [-1, 1], sorted, zero padded to 64 slots and
 * followed by a 64-slot presence mask. The network predicts m0', the log of the
 * mean gap across the observed range, and r, all in the normalised frame.
 * Inference turns the mean gap into a whole number of gaps from m0' to +1,
 * derives d' from it and maps m0' and d' back to pixels.
 */
#pragma once

#include <rulerkit/gpfit.hpp>

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace rulerkit {

inline constexpr std::size_t kMaxDeepGPMarks = 64;
inline constexpr std::size_t kDeepGPInputSize = 2 * kMaxDeepGPMarks;
inline constexpr std::size_t kDeepGPOutputSize = 3;

struct NoiseConfig {
    double sigma_frac = 0.0;    ///< displacement std as a fraction of |m1 - m0|
    double drop_frac_max = 0.0; ///< up to floor(drop_frac_max * n) clean marks removed
    int add_max = 0;            ///< up to this many uniform spurious marks
    std::uint64_t seed = 0;
};

void validate(const NoiseConfig& cfg);

struct NoisyGPSample {
    std::vector<Mark1D> marks; ///< shuffled
    GPParams truth;
    std::size_t n_clean = 0;   ///< clean marks that survived the drop step
};

NoisyGPSample generate_noisy_gp(const GPParams& truth, std::size_t n, const NoiseConfig& cfg);

struct NormalizationRecord {
    double offset = 0.0;
    double scale = 1.0; ///< half range
};

struct NormalizedMarks {
    std::vector<double> values;
    NormalizationRecord record;
};

/// (t - mid) / half so that min -> -1 and max -> +1.
NormalizedMarks normalize_marks(std::span<const Mark1D> marks);

/// Sorted values in slots [0, 64), zero padded, then the presence mask in [64, 128).
std::vector<float> encode_input(std::span<const double> normalized);

/// Inverse of encode_input: the values whose mask slot is set.
std::vector<double> decode_input(std::span<const float> features);

/// Fully connected network, rectifier on hidden layers, identity output.
class DeepGPModel {
public:
    using Matrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using Vector = Eigen::VectorXf;

    struct Layer {
        Matrix weights; ///< out x in
        Vector bias;    ///< out
    };

    DeepGPModel() = default;
    explicit DeepGPModel(std::vector<Layer> layers);

    /// He-initialised network with the given layer widths (input first, output last).
    static DeepGPModel create(std::span<const int> sizes, std::uint64_t seed);
    /// 128 -> 256 -> 256 -> 256 -> 3.
    static DeepGPModel create_default(std::uint64_t seed);

    const std::vector<Layer>& layers() const noexcept { return layers_; }
    std::vector<Layer>& layers() noexcept { return layers_; }
    std::size_t parameter_count() const;
    std::size_t input_size() const;
    std::size_t output_size() const;

    /// Row-per-sample batch forward pass.
    Matrix forward(const Matrix& inputs) const;

    friend bool operator==(const DeepGPModel& a, const DeepGPModel& b);

private:
    std::vector<Layer> layers_;
};

struct Gradients {
    std::vector<DeepGPModel::Layer> layers;
    double loss = 0.0;
};

/// Mean squared error over the batch and outputs, and its gradient.
Gradients mse_gradients(const DeepGPModel& model, const DeepGPModel::Matrix& inputs,
                        const DeepGPModel::Matrix& targets);

double mse_loss(const DeepGPModel& model, const DeepGPModel::Matrix& inputs, const DeepGPModel::Matrix& targets);

/// Largest relative difference between analytic and central-difference gradients.
double gradient_check(const DeepGPModel& model, const DeepGPModel::Matrix& inputs,
                      const DeepGPModel::Matrix& targets, double step = 1e-3);

GPParams deepgp_infer(const DeepGPModel& model, std::span<const Mark1D> marks);

/// Where training progressions come from. Noise sigma is drawn per sample from
/// [0, noise.sigma_frac]; the drop/add limits and seed are used as given.
struct SampleStreamConfig {
    NoiseConfig noise{0.05, 0.2, 3, 0};
    double r_min = 1.0 / 1.4;
    double r_max = 1.4;
    int n_min = 5;
    int n_max = 64;             ///< lowered so that n + noise.add_max <= 64
    double d_min = 5.0;         ///< bounds on the smallest clean gap
    double d_max = 60.0;
    double m0_min = 0.0;
    double m0_max = 200.0;
};

struct TrainingSample {
    std::vector<float> input;          ///< kDeepGPInputSize
    std::array<float, 3> target{};     ///< (m0', log mean gap', r)
    NoisyGPSample sample;
};

/// Sample number `index` of the stream; depends only on (cfg, index).
TrainingSample make_training_sample(const SampleStreamConfig& cfg, std::uint64_t index);

struct TrainConfig {
    int batch = 256;
    long steps = 4000;
    double learning_rate = 1e-3;
    double warmup_fraction = 0.1; ///< linear warmup, then cosine decay to zero
    std::uint64_t seed = 0;
    int jobs = 1;                 ///< sample generation threads; results do not depend on it
    std::vector<int> hidden = {256, 256, 256};
};

struct TrainReport {
    DeepGPModel model;
    std::vector<double> losses; ///< one per step
};

using TrainLogger = std::function<void(long step, double loss)>;

TrainReport deepgp_train(const SampleStreamConfig& stream, const TrainConfig& cfg, const TrainLogger& log = {});

/// Continue training an existing model (same schedule semantics).
TrainReport deepgp_train(DeepGPModel model, const SampleStreamConfig& stream, const TrainConfig& cfg,
                         const TrainLogger& log = {});

double learning_rate_at(const TrainConfig& cfg, long step);

}  // namespace rulerkit
