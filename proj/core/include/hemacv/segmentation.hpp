#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "hemacv/image.hpp"

namespace hemacv {

enum class SegMethodKind { hue, otsu };
enum class SegTarget { cell, nucleus };

struct SegMethod {
    SegMethodKind method = SegMethodKind::otsu;
    SegTarget target = SegTarget::cell;

    bool operator==(const SegMethod&) const = default;
};

std::string seg_method_name(SegMethodKind m);
std::string seg_target_name(SegTarget t);
// "otsu-cell", "hue-nucleus", ...
std::string seg_variant_name(SegMethod m);

// Hue interval in degrees, interpreted circularly: lo > hi wraps through 0.
// Bounds are inclusive.
struct HueBand {
    double lo = 0.0;
    double hi = 0.0;
    double min_saturation = 0.0;

    bool contains_hue(double h) const {
        return lo <= hi ? (h >= lo && h <= hi) : (h >= lo || h <= hi);
    }
};

struct Histogram256 {
    std::array<std::uint64_t, 256> counts{};

    std::uint64_t total() const;
    void add(std::uint8_t value, std::uint64_t n = 1) { counts[value] += n; }
    // Number of bins with nonzero count.
    int occupied_bins() const;
};

Histogram256 histogram(const GrayImage& img);

// Threshold t in [0, 255] maximizing the between-class variance
// w0(t) * w1(t) * (mu0(t) - mu1(t))^2, class 0 being intensities <= t.
// Only thresholds where both classes are nonempty compete; ties resolve to
// the smallest t. A histogram with all mass on one value returns that value.
// Throws std::invalid_argument on an empty histogram.
int otsu_threshold(const Histogram256& h);

// Foreground iff hue lies in the band (circularly) and saturation clears
// band.min_saturation.
BinaryMask hue_mask(const RgbImage& img, const HueBand& band);

enum class OtsuPolarity { dark_fg, bright_fg };

// Grayscale via to_gray, threshold via otsu_threshold; dark_fg marks
// intensity <= t as foreground.
BinaryMask otsu_mask(const RgbImage& img, OtsuPolarity polarity);

// Keeps only the largest 4-connected foreground component; the empty mask is
// returned unchanged. Equal-sized components resolve to the one whose first
// row-major pixel comes first.
BinaryMask largest_component(const BinaryMask& mask);

// Stain-family defaults for Wright-Giemsa smears (violet/magenta nuclei over
// pink cytoplasm). Both bands are caller-overridable.
struct SegmentationConfig {
    HueBand cell_band{180.0, 359.0, 0.08};
    HueBand nucleus_band{220.0, 340.0, 0.15};
};

struct SegmentResult {
    RgbImage image;  // apply_mask(input, mask)
    BinaryMask mask; // final mask after largest-component selection
};

// Produces one of the four segmented variants of an image.
//
// hue/cell:      hue_mask with the cell band.
// hue/nucleus:   hue_mask with the nucleus band.
// otsu/cell:     dark-foreground Otsu on luma.
// otsu/nucleus:  Otsu restricted to the within-cell histogram, keeping the
//                darker class, so the nucleus is a subset of the cell mask
//                by construction.
//
// A grayscale image whose histogram sits on a single value has no contrast
// to threshold; the otsu family treats it as contentless and yields an empty
// mask (an all-white smear segments to all black, same as the hue family).
// The final mask of every variant is its largest 4-connected component.
SegmentResult segment(const RgbImage& img, SegMethod method,
                      const SegmentationConfig& cfg = {});

} // namespace hemacv
