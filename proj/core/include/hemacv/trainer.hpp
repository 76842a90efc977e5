#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hemacv/image.hpp"

namespace hemacv {

// Flattened, downsampled, channel-normalized image: 32x32x3 values in
// [0, 1] row-major plus a trailing constant 1.0 bias term.
struct FeatureVector {
    std::vector<double> values;
};

inline constexpr int kFeatureEdge = 32;
inline constexpr int kFeatureDim = kFeatureEdge * kFeatureEdge * 3 + 1;

FeatureVector featurize(const RgbImage& img);

// Multinomial logistic regression weights, classes x dim row-major.
struct ModelParams {
    int classes = 0;
    int dim = 0;
    std::vector<double> weights;

    static ModelParams zeros(int classes, int dim);
    double& at(int cls, int j) { return weights[static_cast<std::size_t>(cls) * dim + j]; }
    double at(int cls, int j) const { return weights[static_cast<std::size_t>(cls) * dim + j]; }
};

struct TrainConfig {
    int epochs = 50;
    double learning_rate = 0.1;
    int batch_size = 32;
    std::uint64_t seed = 0;
    double l2 = 0.0;
};

struct EpochStats {
    double train_loss = 0.0;   // mean cross-entropy on the train split
    double val_loss = 0.0;     // mean cross-entropy on the val split
    double val_accuracy = 0.0;
};

using LossCurve = std::vector<EpochStats>;

struct TrainData {
    std::vector<FeatureVector> x;
    std::vector<int> y; // class ordinals

    std::size_t size() const { return x.size(); }
};

struct TrainResult {
    ModelParams params;
    LossCurve curve;
};

// Softmax class probabilities for one sample; sums to 1.
std::vector<double> class_probabilities(const ModelParams& params, const FeatureVector& fv);

// Mean softmax cross-entropy over the samples plus (l2/2) * ||W||^2.
double dataset_loss(const ModelParams& params, const TrainData& data, double l2);

// Accumulates d(dataset_loss over `indices`)/dW into grad (classes*dim,
// overwritten). Fixed summation order, so results are reproducible.
void batch_gradient(const ModelParams& params, const TrainData& data,
                    std::span<const std::size_t> indices, double l2, std::vector<double>& grad);

// Mini-batch SGD from zero-initialized weights, minimizing mean
// cross-entropy + L2. The sample order of epoch e is a deterministic
// function of (cfg.seed, e); the recorded losses are clean full-split
// passes after each epoch's updates (penalty excluded from the curve).
// Throws std::invalid_argument on empty splits and std::runtime_error
// naming the epoch if the loss turns non-finite.
TrainResult train(const TrainData& train_set, const TrainData& val_set, const TrainConfig& cfg);

// Argmax of the logits; ties break toward the smallest class ordinal.
int predict(const ModelParams& params, const FeatureVector& fv);

// Compares batch_gradient against central finite differences (step 1e-5) on
// `probes` randomly chosen coordinates and returns the max relative error.
// Coordinates where both gradients are below 1e-10 in magnitude are skipped.
double grad_check(const ModelParams& params, const TrainData& batch, double l2,
                  int probes = 100, std::uint64_t seed = 0);

// CSV "epoch,train_loss,val_loss,val_accuracy", epochs 1-based.
void write_loss_curve_csv(const std::filesystem::path& path, const LossCurve& curve);

// Little-endian binary blob: 16-byte header (magic "HMCV", u32 version,
// u32 rows, u32 cols) followed by rows*cols float64 row-major.
void save_params(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_params(const std::filesystem::path& path);

} // namespace hemacv
