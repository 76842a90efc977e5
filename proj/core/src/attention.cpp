#include "hemacv/attention.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace hemacv {

FeatureMap FeatureMap::zeros(int n, int h, int d) {
    if (n < 1 || h < 1 || d < 1)
        throw std::invalid_argument("FeatureMap: n, h, d must be at least 1");
    FeatureMap fm;
    fm.n = n;
    fm.h = h;
    fm.d = d;
    fm.values.assign(static_cast<std::size_t>(n) * h * d, 0.0);
    return fm;
}

std::string axis_name(SplitAxis axis) {
    switch (axis) {
    case SplitAxis::horizontal: return "horizontal";
    case SplitAxis::vertical: return "vertical";
    default: return "token";
    }
}

std::optional<SplitAxis> axis_from_name(std::string_view name) {
    if (name == "horizontal")
        return SplitAxis::horizontal;
    if (name == "vertical")
        return SplitAxis::vertical;
    if (name == "token")
        return SplitAxis::token;
    return std::nullopt;
}

void softmax_inplace(std::span<double> row) {
    if (row.empty())
        return;
    double maxv = -std::numeric_limits<double>::infinity();
    for (const double v : row)
        maxv = std::max(maxv, v);
    double sum = 0.0;
    for (double& v : row) {
        v = std::exp(v - maxv);
        sum += v;
    }
    const double inv = 1.0 / sum;
    for (double& v : row)
        v *= inv;
}

namespace {

void check_shapes(const FeatureMap& q, const FeatureMap& k, const FeatureMap& v) {
    if (q.n < 1 || q.h < 1 || q.d < 1)
        throw std::invalid_argument("attention: shapes must be at least 1x1x1");
    if (!q.same_shape(k) || !q.same_shape(v))
        throw std::invalid_argument("attention: q, k, v must share (n, h, d)");
    const std::size_t want = static_cast<std::size_t>(q.n) * q.h * q.d;
    if (q.values.size() != want || k.values.size() != want || v.values.size() != want)
        throw std::invalid_argument("attention: value buffer does not match shape");
}

// softmax(scale * Q K^T) V restricted to one token group, one shared
// implementation for full and area attention so the l == 1 degenerate case
// is literally the same sequence of floating-point operations. The MAC
// counter ticks inside the two matmuls only.
void attend_group(const FeatureMap& q, const FeatureMap& k, const FeatureMap& v,
                  std::span<const int> tokens, double scale, FeatureMap& out,
                  std::uint64_t& macs) {
    const int m = static_cast<int>(tokens.size());
    const int heads = q.h;
    const int d = q.d;
    std::vector<double> weights(static_cast<std::size_t>(m));

    for (int head = 0; head < heads; ++head) {
        for (int qi = 0; qi < m; ++qi) {
            const double* qrow = &q.values[(static_cast<std::size_t>(tokens[qi]) * heads + head) * d];
            // scores = scale * q . k_j
            for (int kj = 0; kj < m; ++kj) {
                const double* krow =
                    &k.values[(static_cast<std::size_t>(tokens[kj]) * heads + head) * d];
                double s = 0.0;
                for (int e = 0; e < d; ++e)
                    s += qrow[e] * krow[e];
                macs += static_cast<std::uint64_t>(d);
                weights[kj] = scale * s;
            }
            softmax_inplace(weights);
            // out_row = weights . V
            double* orow = &out.values[(static_cast<std::size_t>(tokens[qi]) * heads + head) * d];
            for (int e = 0; e < d; ++e) {
                double acc = 0.0;
                for (int kj = 0; kj < m; ++kj) {
                    const double* vrow =
                        &v.values[(static_cast<std::size_t>(tokens[kj]) * heads + head) * d];
                    acc += weights[kj] * vrow[e];
                }
                macs += static_cast<std::uint64_t>(m);
                orow[e] = acc;
            }
        }
    }
}

double resolve_scale(const FeatureMap& q, std::optional<double> scale) {
    return scale ? *scale : 1.0 / std::sqrt(static_cast<double>(q.d));
}

} // namespace

AttentionResult full_attention(const FeatureMap& q, const FeatureMap& k, const FeatureMap& v,
                               std::optional<double> scale) {
    check_shapes(q, k, v);
    AttentionResult res;
    res.out = FeatureMap::zeros(q.n, q.h, q.d);
    res.out.spatial = q.spatial;
    std::vector<int> all(static_cast<std::size_t>(q.n));
    std::iota(all.begin(), all.end(), 0);
    attend_group(q, k, v, all, resolve_scale(q, scale), res.out, res.flops.macs);
    return res;
}

std::vector<std::vector<int>> segment_tokens(const FeatureMap& fm, const AttentionConfig& cfg) {
    if (cfg.l < 1)
        throw std::invalid_argument("segment_tokens: l must be at least 1");
    const int l = cfg.l;

    std::vector<std::vector<int>> groups;
    if (cfg.axis == SplitAxis::token) {
        if (fm.n % l != 0)
            throw std::invalid_argument(
                "segment_tokens: token axis: n=" + std::to_string(fm.n) +
                " not divisible by l=" + std::to_string(l) +
                " (remainder " + std::to_string(fm.n % l) + ")");
        const int block = fm.n / l;
        for (int g = 0; g < l; ++g) {
            std::vector<int> idx(static_cast<std::size_t>(block));
            std::iota(idx.begin(), idx.end(), g * block);
            groups.push_back(std::move(idx));
        }
        return groups;
    }

    if (!fm.spatial)
        throw std::invalid_argument("segment_tokens: " + axis_name(cfg.axis) +
                                    " axis requires a spatial (H, W) shape");
    const auto [H, W] = *fm.spatial;
    if (H < 1 || W < 1 || static_cast<long long>(H) * W != fm.n)
        throw std::invalid_argument("segment_tokens: spatial shape does not match token count");

    if (cfg.axis == SplitAxis::horizontal) {
        if (H % l != 0)
            throw std::invalid_argument(
                "segment_tokens: horizontal axis: H=" + std::to_string(H) +
                " not divisible by l=" + std::to_string(l) +
                " (remainder " + std::to_string(H % l) + ")");
        const int rows = H / l;
        for (int g = 0; g < l; ++g) {
            std::vector<int> idx;
            idx.reserve(static_cast<std::size_t>(rows) * W);
            for (int r = g * rows; r < (g + 1) * rows; ++r)
                for (int c = 0; c < W; ++c)
                    idx.push_back(r * W + c);
            groups.push_back(std::move(idx));
        }
        return groups;
    }

    if (W % l != 0)
        throw std::invalid_argument(
            "segment_tokens: vertical axis: W=" + std::to_string(W) +
            " not divisible by l=" + std::to_string(l) +
            " (remainder " + std::to_string(W % l) + ")");
    const int cols = W / l;
    for (int g = 0; g < l; ++g) {
        std::vector<int> idx;
        idx.reserve(static_cast<std::size_t>(cols) * H);
        for (int r = 0; r < H; ++r)
            for (int c = g * cols; c < (g + 1) * cols; ++c)
                idx.push_back(r * W + c);
        groups.push_back(std::move(idx));
    }
    return groups;
}

AttentionResult area_attention(const FeatureMap& q, const FeatureMap& k, const FeatureMap& v,
                               const AttentionConfig& cfg) {
    check_shapes(q, k, v);
    const auto groups = segment_tokens(q, cfg);
    AttentionResult res;
    res.out = FeatureMap::zeros(q.n, q.h, q.d);
    res.out.spatial = q.spatial;
    const double scale = resolve_scale(q, cfg.scale);
    for (const auto& group : groups)
        attend_group(q, k, v, group, scale, res.out, res.flops.macs);
    return res;
}

FlopCount count_flops(std::uint64_t n, std::uint64_t h, std::uint64_t d, std::uint64_t l) {
    if (n < 1 || h < 1 || d < 1 || l < 1)
        throw std::invalid_argument("count_flops: arguments must be positive");
    if (n % l != 0)
        throw std::invalid_argument("count_flops: n=" + std::to_string(n) +
                                    " not divisible by l=" + std::to_string(l));
    return FlopCount{2 * n * n * h * d / l};
}

} // namespace hemacv
