#include "hemacv/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "hemacv/dataset.hpp"
#include "hemacv/rng.hpp"

namespace hemacv {

FeatureVector featurize(const RgbImage& img) {
    const RgbImage small = resize(img, kFeatureEdge, kFeatureEdge);
    FeatureVector fv;
    fv.values.reserve(kFeatureDim);
    for (const Rgb& p : small.pixels()) {
        fv.values.push_back(p.r / 255.0);
        fv.values.push_back(p.g / 255.0);
        fv.values.push_back(p.b / 255.0);
    }
    fv.values.push_back(1.0); // bias
    return fv;
}

ModelParams ModelParams::zeros(int classes, int dim) {
    if (classes < 1 || dim < 1)
        throw std::invalid_argument("ModelParams: classes and dim must be at least 1");
    ModelParams p;
    p.classes = classes;
    p.dim = dim;
    p.weights.assign(static_cast<std::size_t>(classes) * dim, 0.0);
    return p;
}

namespace {

void check_sample(const ModelParams& params, const FeatureVector& fv) {
    if (static_cast<int>(fv.values.size()) != params.dim)
        throw std::invalid_argument("feature dimension " + std::to_string(fv.values.size()) +
                                    " does not match model dim " + std::to_string(params.dim));
}

std::vector<double> logits_of(const ModelParams& params, const FeatureVector& fv) {
    check_sample(params, fv);
    std::vector<double> logits(static_cast<std::size_t>(params.classes), 0.0);
    for (int c = 0; c < params.classes; ++c) {
        const double* w = &params.weights[static_cast<std::size_t>(c) * params.dim];
        double acc = 0.0;
        for (int j = 0; j < params.dim; ++j)
            acc += w[j] * fv.values[j];
        logits[static_cast<std::size_t>(c)] = acc;
    }
    return logits;
}

// log(sum exp(z)) with the max factored out.
double log_sum_exp(const std::vector<double>& z) {
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (const double v : z)
        sum += std::exp(v - m);
    return m + std::log(sum);
}

void check_data(const TrainData& data, int classes) {
    if (data.x.size() != data.y.size())
        throw std::invalid_argument("TrainData: feature/label count mismatch");
    for (const int y : data.y)
        if (y < 0 || y >= classes)
            throw std::invalid_argument("TrainData: label out of range");
}

double weight_norm_sq(const ModelParams& params) {
    double sq = 0.0;
    for (const double w : params.weights)
        sq += w * w;
    return sq;
}

} // namespace

std::vector<double> class_probabilities(const ModelParams& params, const FeatureVector& fv) {
    std::vector<double> p = logits_of(params, fv);
    const double lse = log_sum_exp(p);
    for (double& v : p)
        v = std::exp(v - lse);
    return p;
}

double dataset_loss(const ModelParams& params, const TrainData& data, double l2) {
    if (data.size() == 0)
        throw std::invalid_argument("dataset_loss: empty data");
    check_data(data, params.classes);
    double loss = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::vector<double> z = logits_of(params, data.x[i]);
        loss += log_sum_exp(z) - z[static_cast<std::size_t>(data.y[i])];
    }
    loss /= static_cast<double>(data.size());
    return loss + 0.5 * l2 * weight_norm_sq(params);
}

void batch_gradient(const ModelParams& params, const TrainData& data,
                    std::span<const std::size_t> indices, double l2, std::vector<double>& grad) {
    if (indices.empty())
        throw std::invalid_argument("batch_gradient: empty batch");
    check_data(data, params.classes);
    grad.assign(params.weights.size(), 0.0);
    const double inv_b = 1.0 / static_cast<double>(indices.size());
    for (const std::size_t i : indices) {
        const FeatureVector& fv = data.x[i];
        const std::vector<double> p = class_probabilities(params, fv);
        for (int c = 0; c < params.classes; ++c) {
            const double coef = (p[static_cast<std::size_t>(c)] -
                                 (data.y[i] == c ? 1.0 : 0.0)) * inv_b;
            double* g = &grad[static_cast<std::size_t>(c) * params.dim];
            for (int j = 0; j < params.dim; ++j)
                g[j] += coef * fv.values[j];
        }
    }
    if (l2 != 0.0) {
        for (std::size_t i = 0; i < grad.size(); ++i)
            grad[i] += l2 * params.weights[i];
    }
}

TrainResult train(const TrainData& train_set, const TrainData& val_set, const TrainConfig& cfg) {
    if (cfg.epochs < 1)
        throw std::invalid_argument("train: epochs must be at least 1");
    if (cfg.batch_size < 1)
        throw std::invalid_argument("train: batch_size must be at least 1");
    if (cfg.learning_rate < 0.0)
        throw std::invalid_argument("train: learning_rate must be non-negative");
    if (cfg.l2 < 0.0)
        throw std::invalid_argument("train: l2 must be non-negative");
    if (train_set.size() == 0)
        throw std::invalid_argument("train: empty train split");
    if (val_set.size() == 0)
        throw std::invalid_argument("train: empty val split");
    check_data(train_set, kClassCount);
    check_data(val_set, kClassCount);

    const int dim = static_cast<int>(train_set.x.front().values.size());
    TrainResult res;
    res.params = ModelParams::zeros(kClassCount, dim);

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> grad;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        SplitMix64 rng = seeded_stream(cfg.seed, static_cast<std::uint64_t>(epoch));
        shuffle(order, rng);

        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            batch_gradient(res.params, train_set,
                           std::span<const std::size_t>(order.data() + start, stop - start),
                           cfg.l2, grad);
            for (std::size_t i = 0; i < grad.size(); ++i)
                res.params.weights[i] -= cfg.learning_rate * grad[i];
        }

        EpochStats stats;
        stats.train_loss = dataset_loss(res.params, train_set, 0.0);
        stats.val_loss = dataset_loss(res.params, val_set, 0.0);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < val_set.size(); ++i)
            correct += predict(res.params, val_set.x[i]) == val_set.y[i];
        stats.val_accuracy = static_cast<double>(correct) / static_cast<double>(val_set.size());

        if (!std::isfinite(stats.train_loss) || !std::isfinite(stats.val_loss))
            throw std::runtime_error("train: loss diverged at epoch " + std::to_string(epoch + 1));
        res.curve.push_back(stats);
    }
    return res;
}

int predict(const ModelParams& params, const FeatureVector& fv) {
    const std::vector<double> z = logits_of(params, fv);
    int best = 0;
    for (int c = 1; c < params.classes; ++c)
        if (z[static_cast<std::size_t>(c)] > z[static_cast<std::size_t>(best)])
            best = c;
    return best;
}

double grad_check(const ModelParams& params, const TrainData& batch, double l2, int probes,
                  std::uint64_t seed) {
    if (batch.size() == 0)
        throw std::invalid_argument("grad_check: empty batch");
    std::vector<std::size_t> indices(batch.size());
    std::iota(indices.begin(), indices.end(), 0);

    std::vector<double> analytic;
    batch_gradient(params, batch, indices, l2, analytic);

    constexpr double kStep = 1e-5;
    constexpr double kZeroTol = 1e-10;
    ModelParams probe = params;
    SplitMix64 rng(seed);

    double max_rel = 0.0;
    for (int p = 0; p < probes; ++p) {
        const std::size_t coord = rng.next_below(probe.weights.size());
        const double saved = probe.weights[coord];
        probe.weights[coord] = saved + kStep;
        const double hi = dataset_loss(probe, batch, l2);
        probe.weights[coord] = saved - kStep;
        const double lo = dataset_loss(probe, batch, l2);
        probe.weights[coord] = saved;

        const double numeric = (hi - lo) / (2.0 * kStep);
        const double a = analytic[coord];
        if (std::abs(a) < kZeroTol && std::abs(numeric) < kZeroTol)
            continue; // both effectively zero; the ratio is meaningless
        const double rel = std::abs(a - numeric) / std::max(std::abs(a), std::abs(numeric));
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

void write_loss_curve_csv(const std::filesystem::path& path, const LossCurve& curve) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << "epoch,train_loss,val_loss,val_accuracy\n";
    char buf[160];
    for (std::size_t e = 0; e < curve.size(); ++e) {
        std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f\n", e + 1, curve[e].train_loss,
                      curve[e].val_loss, curve[e].val_accuracy);
        out << buf;
    }
    if (!out)
        throw std::runtime_error("failed writing " + path.string());
}

namespace {

constexpr char kParamsMagic[4] = {'H', 'M', 'C', 'V'};
constexpr std::uint32_t kParamsVersion = 1;

void put_u32(std::ofstream& out, std::uint32_t v) {
    // little-endian
    const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                           static_cast<char>((v >> 16) & 0xff),
                           static_cast<char>((v >> 24) & 0xff)};
    out.write(bytes, 4);
}

std::uint32_t get_u32(std::ifstream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) |
           (static_cast<std::uint32_t>(bytes[3]) << 24);
}

} // namespace

void save_params(const std::filesystem::path& path, const ModelParams& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out.write(kParamsMagic, 4);
    put_u32(out, kParamsVersion);
    put_u32(out, static_cast<std::uint32_t>(params.classes));
    put_u32(out, static_cast<std::uint32_t>(params.dim));
    static_assert(sizeof(double) == 8);
    for (const double w : params.weights) {
        std::uint64_t bits;
        std::memcpy(&bits, &w, 8);
        char bytes[8];
        for (int i = 0; i < 8; ++i)
            bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
        out.write(bytes, 8);
    }
    if (!out)
        throw std::runtime_error("failed writing " + path.string());
}

ModelParams load_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kParamsMagic, 4) != 0)
        throw std::runtime_error("bad model file magic in " + path.string());
    const std::uint32_t version = get_u32(in);
    if (version != kParamsVersion)
        throw std::runtime_error("unsupported model file version in " + path.string());
    const std::uint32_t rows = get_u32(in);
    const std::uint32_t cols = get_u32(in);
    if (!in || rows == 0 || cols == 0)
        throw std::runtime_error("bad model file header in " + path.string());

    ModelParams params = ModelParams::zeros(static_cast<int>(rows), static_cast<int>(cols));
    for (double& w : params.weights) {
        unsigned char bytes[8];
        in.read(reinterpret_cast<char*>(bytes), 8);
        if (!in)
            throw std::runtime_error("truncated model file: " + path.string());
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i)
            bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
        std::memcpy(&w, &bits, 8);
    }
    return params;
}

} // namespace hemacv
