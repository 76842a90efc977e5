#include "hemacv/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hemacv {

namespace {

void check_dims(int width, int height) {
    if (width < 1 || height < 1)
        throw std::invalid_argument("image dimensions must be at least 1x1");
}

} // namespace

RgbImage::RgbImage(int width, int height, Rgb fill) : width_(width), height_(height) {
    check_dims(width, height);
    pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
    check_dims(width, height);
    pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

BinaryMask::BinaryMask(int width, int height, bool fill) : width_(width), height_(height) {
    check_dims(width, height);
    bits_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

std::size_t BinaryMask::foreground_count() const {
    return static_cast<std::size_t>(
        std::count_if(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; }));
}

HsvPixel rgb_to_hsv(Rgb p) {
    const double r = p.r / 255.0;
    const double g = p.g / 255.0;
    const double b = p.b / 255.0;
    const double maxc = std::max({r, g, b});
    const double minc = std::min({r, g, b});
    const double delta = maxc - minc;

    HsvPixel out;
    out.v = maxc;
    out.s = maxc == 0.0 ? 0.0 : delta / maxc;
    if (delta == 0.0) {
        out.h = 0.0; // achromatic, hue pinned to 0 by convention
        return out;
    }
    double h;
    if (maxc == r)
        h = 60.0 * std::fmod((g - b) / delta, 6.0);
    else if (maxc == g)
        h = 60.0 * ((b - r) / delta + 2.0);
    else
        h = 60.0 * ((r - g) / delta + 4.0);
    if (h < 0.0)
        h += 360.0;
    if (h >= 360.0)
        h -= 360.0;
    out.h = h;
    return out;
}

GrayImage to_gray(const RgbImage& img) {
    GrayImage out(img.width(), img.height());
    const auto& src = img.pixels();
    auto& dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double luma = 0.299 * src[i].r + 0.587 * src[i].g + 0.114 * src[i].b;
        const long v = std::lround(luma);
        dst[i] = static_cast<std::uint8_t>(std::clamp(v, 0L, 255L));
    }
    return out;
}

RgbImage apply_mask(const RgbImage& img, const BinaryMask& mask) {
    if (img.width() != mask.width() || img.height() != mask.height())
        throw std::invalid_argument("apply_mask: image and mask dimensions differ");
    RgbImage out = img;
    auto& px = out.pixels();
    const auto& bits = mask.bits();
    for (std::size_t i = 0; i < px.size(); ++i) {
        if (bits[i] == 0)
            px[i] = {0, 0, 0};
    }
    return out;
}

RgbImage resize(const RgbImage& img, int target_w, int target_h) {
    if (target_w < 1 || target_h < 1)
        throw std::invalid_argument("resize: target dimensions must be at least 1x1");
    if (img.empty())
        throw std::invalid_argument("resize: empty source image");
    if (target_w == img.width() && target_h == img.height())
        return img;

    RgbImage out(target_w, target_h);
    const double sx = static_cast<double>(img.width()) / target_w;
    const double sy = static_cast<double>(img.height()) / target_h;

    for (int y = 0; y < target_h; ++y) {
        // Half-pixel-center alignment, clamped at the borders.
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(img.height() - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height() - 1);
        const double wy = fy - y0;

        for (int x = 0; x < target_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(img.width() - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width() - 1);
            const double wx = fx - x0;

            const Rgb& p00 = img.at(x0, y0);
            const Rgb& p10 = img.at(x1, y0);
            const Rgb& p01 = img.at(x0, y1);
            const Rgb& p11 = img.at(x1, y1);

            auto lerp2 = [&](std::uint8_t c00, std::uint8_t c10, std::uint8_t c01,
                             std::uint8_t c11) {
                const double top = c00 + (c10 - c00) * wx;
                const double bot = c01 + (c11 - c01) * wx;
                const double v = top + (bot - top) * wy;
                return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            };
            out.at(x, y) = {lerp2(p00.r, p10.r, p01.r, p11.r),
                            lerp2(p00.g, p10.g, p01.g, p11.g),
                            lerp2(p00.b, p10.b, p01.b, p11.b)};
        }
    }
    return out;
}

double dice_coefficient(const BinaryMask& a, const BinaryMask& b) {
    if (a.width() != b.width() || a.height() != b.height())
        throw std::invalid_argument("dice_coefficient: mask dimensions differ");
    std::size_t inter = 0, asz = 0, bsz = 0;
    const auto& ab = a.bits();
    const auto& bb = b.bits();
    for (std::size_t i = 0; i < ab.size(); ++i) {
        asz += ab[i] != 0;
        bsz += bb[i] != 0;
        inter += (ab[i] != 0) && (bb[i] != 0);
    }
    if (asz + bsz == 0)
        return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(asz + bsz);
}

bool is_subset(const BinaryMask& inner, const BinaryMask& outer) {
    if (inner.width() != outer.width() || inner.height() != outer.height())
        throw std::invalid_argument("is_subset: mask dimensions differ");
    const auto& in = inner.bits();
    const auto& out = outer.bits();
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (in[i] != 0 && out[i] == 0)
            return false;
    }
    return true;
}

} // namespace hemacv
