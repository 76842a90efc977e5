#include "hemacv/segmentation.hpp"

#include <numeric>
#include <stdexcept>
#include <vector>

namespace hemacv {

std::string seg_method_name(SegMethodKind m) {
    return m == SegMethodKind::hue ? "hue" : "otsu";
}

std::string seg_target_name(SegTarget t) {
    return t == SegTarget::cell ? "cell" : "nucleus";
}

std::string seg_variant_name(SegMethod m) {
    return seg_method_name(m.method) + "-" + seg_target_name(m.target);
}

std::uint64_t Histogram256::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

int Histogram256::occupied_bins() const {
    int n = 0;
    for (const auto c : counts)
        n += c != 0;
    return n;
}

Histogram256 histogram(const GrayImage& img) {
    if (img.empty())
        throw std::invalid_argument("histogram: empty image");
    Histogram256 h;
    for (const std::uint8_t v : img.pixels())
        ++h.counts[v];
    return h;
}

int otsu_threshold(const Histogram256& h) {
    const std::uint64_t total = h.total();
    if (total == 0)
        throw std::invalid_argument("otsu_threshold: empty histogram");

    std::uint64_t sum_all = 0;
    for (int v = 0; v < 256; ++v)
        sum_all += static_cast<std::uint64_t>(v) * h.counts[v];

    // Between-class variance up to the constant 1/N^2:
    // c0*c1*(mu0-mu1)^2, scanned over thresholds where both classes are
    // nonempty. Strict > keeps the smallest t on ties.
    std::uint64_t c0 = 0;
    std::uint64_t s0 = 0;
    int best_t = -1;
    double best_score = -1.0;
    for (int t = 0; t < 256; ++t) {
        c0 += h.counts[t];
        s0 += static_cast<std::uint64_t>(t) * h.counts[t];
        const std::uint64_t c1 = total - c0;
        if (c0 == 0 || c1 == 0)
            continue;
        const double mu0 = static_cast<double>(s0) / static_cast<double>(c0);
        const double mu1 = static_cast<double>(sum_all - s0) / static_cast<double>(c1);
        const double diff = mu0 - mu1;
        const double score = static_cast<double>(c0) * static_cast<double>(c1) * diff * diff;
        if (score > best_score) {
            best_score = score;
            best_t = t;
        }
    }
    if (best_t < 0) {
        // All mass sits on a single value; return it.
        for (int v = 0; v < 256; ++v)
            if (h.counts[v] != 0)
                return v;
    }
    return best_t;
}

BinaryMask hue_mask(const RgbImage& img, const HueBand& band) {
    if (img.empty())
        throw std::invalid_argument("hue_mask: empty image");
    BinaryMask mask(img.width(), img.height());
    const auto& px = img.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) {
        const HsvPixel hsv = rgb_to_hsv(px[i]);
        mask.bits()[i] = (hsv.s >= band.min_saturation && band.contains_hue(hsv.h)) ? 1 : 0;
    }
    return mask;
}

BinaryMask otsu_mask(const RgbImage& img, OtsuPolarity polarity) {
    const GrayImage gray = to_gray(img);
    const int t = otsu_threshold(histogram(gray));
    BinaryMask mask(img.width(), img.height());
    const bool dark = polarity == OtsuPolarity::dark_fg;
    for (std::size_t i = 0; i < gray.pixels().size(); ++i) {
        const bool below = gray.pixels()[i] <= t;
        mask.bits()[i] = (below == dark) ? 1 : 0;
    }
    return mask;
}

BinaryMask largest_component(const BinaryMask& mask) {
    if (mask.empty())
        return mask;
    const int w = mask.width();
    const int h = mask.height();
    const auto& bits = mask.bits();

    std::vector<std::int32_t> label(bits.size(), -1);
    std::vector<std::size_t> stack;

    std::size_t best_size = 0;
    std::int32_t best_label = -1;
    std::int32_t next_label = 0;

    for (std::size_t start = 0; start < bits.size(); ++start) {
        if (bits[start] == 0 || label[start] >= 0)
            continue;
        // Flood fill; the first pixel reached row-major is the component
        // origin, so earlier components win ties automatically.
        const std::int32_t cur = next_label++;
        std::size_t size = 0;
        stack.clear();
        stack.push_back(start);
        label[start] = cur;
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            ++size;
            const int x = static_cast<int>(i % w);
            const int y = static_cast<int>(i / w);
            const auto visit = [&](int nx, int ny) {
                if (nx < 0 || ny < 0 || nx >= w || ny >= h)
                    return;
                const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                if (bits[ni] != 0 && label[ni] < 0) {
                    label[ni] = cur;
                    stack.push_back(ni);
                }
            };
            visit(x - 1, y);
            visit(x + 1, y);
            visit(x, y - 1);
            visit(x, y + 1);
        }
        if (size > best_size) {
            best_size = size;
            best_label = cur;
        }
    }

    BinaryMask out(w, h);
    if (best_label < 0)
        return out; // no foreground at all
    for (std::size_t i = 0; i < bits.size(); ++i)
        out.bits()[i] = label[i] == best_label ? 1 : 0;
    return out;
}

namespace {

// Uniform grayscale carries no threshold information; the otsu family
// treats such images as contentless.
bool contentless_for_otsu(const Histogram256& h) {
    return h.occupied_bins() <= 1;
}

BinaryMask otsu_cell_mask(const RgbImage& img, const GrayImage& gray, const Histogram256& hist) {
    if (contentless_for_otsu(hist))
        return BinaryMask(img.width(), img.height());
    const int t = otsu_threshold(hist);
    BinaryMask mask(img.width(), img.height());
    for (std::size_t i = 0; i < gray.pixels().size(); ++i)
        mask.bits()[i] = gray.pixels()[i] <= t ? 1 : 0;
    return mask;
}

} // namespace

SegmentResult segment(const RgbImage& img, SegMethod method, const SegmentationConfig& cfg) {
    if (img.empty())
        throw std::invalid_argument("segment: empty image");

    BinaryMask raw;
    if (method.method == SegMethodKind::hue) {
        const HueBand& band =
            method.target == SegTarget::cell ? cfg.cell_band : cfg.nucleus_band;
        raw = largest_component(hue_mask(img, band));
    } else {
        const GrayImage gray = to_gray(img);
        const Histogram256 hist = histogram(gray);
        const BinaryMask cell = largest_component(otsu_cell_mask(img, gray, hist));
        if (method.target == SegTarget::cell) {
            raw = cell;
        } else if (cell.none()) {
            raw = BinaryMask(img.width(), img.height());
        } else {
            // Re-threshold inside the cell and keep the darker class; the
            // nucleus is the darkest compartment and stays a subset of the
            // cell mask by construction.
            Histogram256 inner;
            for (std::size_t i = 0; i < gray.pixels().size(); ++i)
                if (cell.bits()[i] != 0)
                    inner.add(gray.pixels()[i]);
            const int t2 = otsu_threshold(inner);
            BinaryMask nucleus(img.width(), img.height());
            for (std::size_t i = 0; i < gray.pixels().size(); ++i)
                nucleus.bits()[i] = (cell.bits()[i] != 0 && gray.pixels()[i] <= t2) ? 1 : 0;
            raw = largest_component(nucleus);
        }
    }

    return SegmentResult{apply_mask(img, raw), std::move(raw)};
}

} // namespace hemacv
