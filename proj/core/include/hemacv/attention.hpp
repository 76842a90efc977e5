#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hemacv {

// n x h x d token tensor: n tokens, h heads, d dims per head, 64-bit floats,
// laid out (token, head, dim) row-major. `spatial`, when present, gives the
// (H, W) grid behind the token axis with H*W == n and row-major token order.
struct FeatureMap {
    int n = 0;
    int h = 0;
    int d = 0;
    std::vector<double> values;
    std::optional<std::pair<int, int>> spatial; // (H, W)

    static FeatureMap zeros(int n, int h, int d);

    double& at(int token, int head, int dim) {
        return values[(static_cast<std::size_t>(token) * h + head) * d + dim];
    }
    double at(int token, int head, int dim) const {
        return values[(static_cast<std::size_t>(token) * h + head) * d + dim];
    }
    bool same_shape(const FeatureMap& o) const { return n == o.n && h == o.h && d == o.d; }
};

enum class SplitAxis { horizontal, vertical, token };

std::string axis_name(SplitAxis axis);
std::optional<SplitAxis> axis_from_name(std::string_view name);

struct AttentionConfig {
    int l = 4;                        // number of equal segments
    SplitAxis axis = SplitAxis::token;
    std::optional<double> scale;      // softmax scaling, default 1/sqrt(d)
};

// Multiply-accumulate count for the two n^2-order matmuls (QK^T and AV).
// Softmax exponentials and any Q/K/V projections are deliberately excluded.
struct FlopCount {
    std::uint64_t macs = 0;
};

struct AttentionResult {
    FeatureMap out;
    FlopCount flops;
};

// Numerically stable in-place softmax (subtracts the max before
// exponentiating); the result sums to 1.
void softmax_inplace(std::span<double> row);

// Per head: out = softmax(scale * Q K^T) V over all n tokens.
// flops.macs == 2 n^2 h d, counted inside the kernel.
// Throws std::invalid_argument on shape mismatch.
AttentionResult full_attention(const FeatureMap& q, const FeatureMap& k, const FeatureMap& v,
                               std::optional<double> scale = std::nullopt);

// Splits the token axis into cfg.l disjoint groups covering all n tokens.
// horizontal: group i = spatial rows [iH/l, (i+1)H/l), requires spatial and
//             l | H; vertical analogously over columns, requires l | W;
// token:      contiguous index blocks, requires l | n.
// Indices within each group stay in row-major order. Throws
// std::invalid_argument naming the axis and the remainder when the
// dimension does not divide evenly.
std::vector<std::vector<int>> segment_tokens(const FeatureMap& fm, const AttentionConfig& cfg);

// Full attention applied independently within each token group, outputs
// scattered back to their original positions. With l == 1 this executes the
// exact same floating-point operations as full_attention (bitwise-equal
// output). flops.macs == 2 n^2 h d / l.
AttentionResult area_attention(const FeatureMap& q, const FeatureMap& k, const FeatureMap& v,
                               const AttentionConfig& cfg);

// 2 n^2 h d / l in exact integer arithmetic. Throws when l does not divide n.
FlopCount count_flops(std::uint64_t n, std::uint64_t h, std::uint64_t d, std::uint64_t l);

} // namespace hemacv
