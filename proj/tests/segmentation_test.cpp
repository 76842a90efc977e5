#include <doctest.h>

#include <algorithm>

#include "hemacv/dataset.hpp"
#include "hemacv/image_io.hpp"
#include "hemacv/segmentation.hpp"
#include "hemacv/rng.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace hemacv;

namespace {

Histogram256 two_delta(int a, std::uint64_t na, int b, std::uint64_t nb) {
    Histogram256 h;
    h.counts[static_cast<std::size_t>(a)] = na;
    h.counts[static_cast<std::size_t>(b)] = nb;
    return h;
}

Histogram256 random_histogram(SplitMix64& rng) {
    Histogram256 h;
    switch (rng.next_below(4)) {
    case 0: // dense
        for (auto& c : h.counts)
            c = rng.next_below(50);
        break;
    case 1: { // two clusters
        const int c1 = static_cast<int>(rng.next_below(100));
        const int c2 = 128 + static_cast<int>(rng.next_below(100));
        for (int i = 0; i < 500; ++i) {
            const int spread1 = static_cast<int>(rng.next_below(21)) - 10;
            const int spread2 = static_cast<int>(rng.next_below(21)) - 10;
            h.counts[static_cast<std::size_t>(std::clamp(c1 + spread1, 0, 255))]++;
            h.counts[static_cast<std::size_t>(std::clamp(c2 + spread2, 0, 255))]++;
        }
        break;
    }
    case 2: // single mass
        h.counts[rng.next_below(256)] = 1 + rng.next_below(1000);
        break;
    default: // sparse spikes
        for (int i = 0; i < 8; ++i)
            h.counts[rng.next_below(256)] += rng.next_below(200);
        if (h.total() == 0)
            h.counts[7] = 1;
        break;
    }
    return h;
}

} // namespace

TEST_CASE("histogram counts pixels and conserves mass") {
    GrayImage img(2, 2, 0);
    Histogram256 h = histogram(img);
    CHECK(h.counts[0] == 4);
    CHECK(h.total() == 4);

    GrayImage two(2, 1);
    two.at(0, 0) = 0;
    two.at(1, 0) = 255;
    h = histogram(two);
    CHECK(h.counts[0] == 1);
    CHECK(h.counts[255] == 1);

    SplitMix64 rng(5);
    GrayImage rnd(64, 64);
    for (auto& v : rnd.pixels())
        v = static_cast<std::uint8_t>(rng.next_below(256));
    CHECK(histogram(rnd).total() == 4096);
}

TEST_CASE("otsu_threshold on a symmetric two-delta histogram picks the smallest tied t") {
    CHECK(otsu_threshold(two_delta(50, 100, 200, 100)) == 50);
}

TEST_CASE("otsu_threshold degenerate single-mass histogram returns the value") {
    Histogram256 h;
    h.counts[7] = 123;
    CHECK(otsu_threshold(h) == 7);
}

TEST_CASE("otsu_threshold empty histogram errors") {
    CHECK_THROWS_AS(otsu_threshold(Histogram256{}), std::invalid_argument);
}

TEST_CASE("otsu_threshold two gaussian-like clusters matches the exhaustive oracle") {
    SplitMix64 rng(99);
    Histogram256 h;
    for (int i = 0; i < 500; ++i) {
        // crude normal-ish sampling: mean of 4 uniforms
        const auto bump = [&](int center) {
            double acc = 0;
            for (int k = 0; k < 4; ++k)
                acc += rng.next_in(-17.0, 17.0);
            return std::clamp(center + static_cast<int>(std::lround(acc / 2.0)), 0, 255);
        };
        h.counts[static_cast<std::size_t>(bump(60))]++;
        h.counts[static_cast<std::size_t>(bump(190))]++;
    }
    CHECK(otsu_threshold(h) == oracles::otsu_exhaustive(h));
}

TEST_CASE("otsu_threshold equals the exhaustive oracle on random histograms") {
    SplitMix64 rng(0xABCDEF);
    for (int i = 0; i < 100; ++i) {
        const Histogram256 h = random_histogram(rng);
        REQUIRE(otsu_threshold(h) == oracles::otsu_exhaustive(h));
    }
}

TEST_CASE("shifting histogram mass shifts the otsu argmax by the same constant") {
    SplitMix64 rng(0xBEEF);
    for (int trial = 0; trial < 20; ++trial) {
        Histogram256 h;
        for (int i = 0; i < 12; ++i)
            h.counts[20 + rng.next_below(150)] += 1 + rng.next_below(300);
        const int k = 1 + static_cast<int>(rng.next_below(80));
        Histogram256 shifted;
        for (int v = 0; v < 256; ++v)
            if (h.counts[v] != 0)
                shifted.counts[static_cast<std::size_t>(v + k)] = h.counts[v];
        REQUIRE(otsu_threshold(shifted) == otsu_threshold(h) + k);
    }
}

TEST_CASE("hue_mask band and saturation gating") {
    const RgbImage red(3, 3, {255, 0, 0});
    CHECK(hue_mask(red, {200, 320, 0.2}).none());

    const RgbImage purple(3, 3, {128, 0, 128});
    CHECK(hue_mask(purple, {270, 330, 0.2}).foreground_count() == 9);

    const RgbImage gray(3, 3, {99, 99, 99});
    CHECK(hue_mask(gray, {0, 359, 0.2}).none());
}

TEST_CASE("hue_mask wraps circularly through zero") {
    const RgbImage red(1, 1, {255, 0, 0}); // hue 0
    CHECK(hue_mask(red, {350, 10, 0.1}).foreground_count() == 1);
    CHECK(hue_mask(red, {10, 350, 0.1}).none());
}

TEST_CASE("otsu_mask polarity and degenerate input") {
    RgbImage img(20, 10);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 20; ++x)
            img.at(x, y) = (y * 20 + x) % 2 == 0 ? Rgb{50, 50, 50} : Rgb{200, 200, 200};

    const BinaryMask dark = otsu_mask(img, OtsuPolarity::dark_fg);
    const BinaryMask bright = otsu_mask(img, OtsuPolarity::bright_fg);
    for (int y = 0; y < 10; ++y) {
        for (int x = 0; x < 20; ++x) {
            const bool is_dark_pixel = (y * 20 + x) % 2 == 0;
            CHECK(dark.at(x, y) == is_dark_pixel);
            CHECK(bright.at(x, y) == !is_dark_pixel);
        }
    }

    const RgbImage uniform(4, 4, {80, 80, 80});
    CHECK(otsu_mask(uniform, OtsuPolarity::dark_fg).foreground_count() == 16);
}

TEST_CASE("largest_component keeps exactly the biggest blob") {
    BinaryMask empty(6, 6);
    CHECK(largest_component(empty) == empty);

    BinaryMask one(6, 6);
    one.set(2, 2, true);
    one.set(2, 3, true);
    CHECK(largest_component(one) == one);

    // 5-pixel blob at top-left, 3-pixel blob at bottom-right
    BinaryMask two(8, 8);
    for (const auto [x, y] : {std::pair{1, 1}, {2, 1}, {1, 2}, {2, 2}, {3, 2}})
        two.set(x, y, true);
    for (const auto [x, y] : {std::pair{6, 6}, {6, 7}, {7, 6}})
        two.set(x, y, true);
    const BinaryMask kept = largest_component(two);
    CHECK(kept.foreground_count() == 5);
    CHECK(kept.at(1, 1));
    CHECK_FALSE(kept.at(6, 6));

    // agreement with the flood-fill oracle on the same mask
    const auto parts = oracles::all_components(two);
    const auto biggest = std::max_element(parts.begin(), parts.end(),
                                          [](const BinaryMask& a, const BinaryMask& b) {
                                              return a.foreground_count() < b.foreground_count();
                                          });
    CHECK(kept == *biggest);
}

TEST_CASE("largest_component ties break toward the earlier row-major origin") {
    BinaryMask mask(5, 3);
    mask.set(3, 0, true); // later in row-major than (0,1)? index 3 vs 5 -> earlier
    mask.set(0, 1, true);
    const BinaryMask kept = largest_component(mask);
    CHECK(kept.foreground_count() == 1);
    CHECK(kept.at(3, 0));
}

TEST_CASE("largest_component never grows and is idempotent") {
    SplitMix64 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        BinaryMask mask(16, 16);
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 16; ++x)
                mask.set(x, y, rng.next_below(3) == 0);
        const BinaryMask once = largest_component(mask);
        CHECK(once.foreground_count() <= mask.foreground_count());
        CHECK(largest_component(once) == once);
    }
}

TEST_CASE("segment on fixture geometry recovers the generator ground truth") {
    helpers::TempDir tmp("segment_fixture");
    make_fixture(tmp.path(), {3, 77, 96});
    const auto samples = scan(tmp.path());
    REQUIRE(samples.size() == 15);

    int checked = 0;
    for (const auto& sample : samples) {
        const RgbImage img = read_image(tmp.path() / sample.path);

        const auto cell_truth = load_fixture_truth(tmp.path(), sample.path, false);
        const auto nucleus_truth = load_fixture_truth(tmp.path(), sample.path, true);
        REQUIRE(cell_truth.has_value());
        REQUIRE(nucleus_truth.has_value());

        const SegmentResult otsu_cell = segment(img, {SegMethodKind::otsu, SegTarget::cell});
        const double cell_area = static_cast<double>(otsu_cell.mask.foreground_count());
        const double truth_area = static_cast<double>(cell_truth->foreground_count());
        CHECK(std::abs(cell_area - truth_area) <= 0.02 * truth_area);

        const SegmentResult hue_nucleus = segment(img, {SegMethodKind::hue, SegTarget::nucleus});
        CHECK(dice_coefficient(hue_nucleus.mask, *nucleus_truth) >= 0.95);
        ++checked;
    }
    CHECK(checked == 15);
}

TEST_CASE("segment nucleus masks are subsets of cell masks on fixtures") {
    helpers::TempDir tmp("segment_subset");
    make_fixture(tmp.path(), {3, 5, 96});
    for (const auto& sample : scan(tmp.path())) {
        const RgbImage img = read_image(tmp.path() / sample.path);
        for (const SegMethodKind method : {SegMethodKind::otsu, SegMethodKind::hue}) {
            const SegmentResult cell = segment(img, {method, SegTarget::cell});
            const SegmentResult nucleus = segment(img, {method, SegTarget::nucleus});
            CHECK(is_subset(nucleus.mask, cell.mask));
            CHECK(nucleus.image.width() == img.width());
            CHECK(nucleus.image.height() == img.height());
        }
    }
}

TEST_CASE("segment of an all-white image is all black for every variant") {
    const RgbImage white(24, 24, {255, 255, 255});
    for (const SegMethodKind method : {SegMethodKind::otsu, SegMethodKind::hue}) {
        for (const SegTarget target : {SegTarget::cell, SegTarget::nucleus}) {
            const SegmentResult res = segment(white, {method, target});
            CHECK(res.mask.none());
            for (const auto& p : res.image.pixels())
                CHECK(p == Rgb{0, 0, 0});
        }
    }
}
