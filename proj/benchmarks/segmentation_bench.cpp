#include <benchmark/benchmark.h>

#include <cmath>

#include "hemacv/rng.hpp"
#include "hemacv/segmentation.hpp"

using namespace hemacv;

namespace {

RgbImage synthetic_smear(int edge) {
    SplitMix64 rng(7);
    RgbImage img(edge, edge, {250, 245, 248});
    const double cx = edge / 2.0, cy = edge / 2.0;
    for (int y = 0; y < edge; ++y) {
        for (int x = 0; x < edge; ++x) {
            const double dx = x - cx, dy = y - cy;
            const double r = std::sqrt(dx * dx + dy * dy);
            if (r < edge * 0.18)
                img.at(x, y) = {150, 90, 190};
            else if (r < edge * 0.33)
                img.at(x, y) = {235, 170, 195};
            if (rng.next_below(100) == 0)
                img.at(x, y).g = static_cast<std::uint8_t>(rng.next_below(256));
        }
    }
    return img;
}

void BM_OtsuThreshold(benchmark::State& state) {
    const RgbImage img = synthetic_smear(static_cast<int>(state.range(0)));
    const Histogram256 h = histogram(to_gray(img));
    for (auto _ : state)
        benchmark::DoNotOptimize(otsu_threshold(h));
}

void BM_SegmentVariant(benchmark::State& state) {
    const RgbImage img = synthetic_smear(static_cast<int>(state.range(0)));
    const SegMethod method{state.range(1) == 0 ? SegMethodKind::hue : SegMethodKind::otsu,
                           state.range(2) == 0 ? SegTarget::cell : SegTarget::nucleus};
    for (auto _ : state) {
        SegmentResult res = segment(img, method);
        benchmark::DoNotOptimize(res.mask.bits().data());
    }
}

void BM_LargestComponent(benchmark::State& state) {
    const RgbImage img = synthetic_smear(static_cast<int>(state.range(0)));
    const BinaryMask mask = otsu_mask(img, OtsuPolarity::dark_fg);
    for (auto _ : state) {
        BinaryMask kept = largest_component(mask);
        benchmark::DoNotOptimize(kept.bits().data());
    }
}

} // namespace

BENCHMARK(BM_OtsuThreshold)->Arg(128)->Arg(512);
BENCHMARK(BM_SegmentVariant)
    ->Args({128, 0, 0})
    ->Args({128, 1, 0})
    ->Args({128, 1, 1})
    ->Args({512, 1, 0});
BENCHMARK(BM_LargestComponent)->Arg(128)->Arg(512);
