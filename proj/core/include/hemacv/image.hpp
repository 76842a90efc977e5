#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace hemacv {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    bool operator==(const Rgb&) const = default;
};

static_assert(sizeof(Rgb) == 3, "Rgb must be tightly packed for raster I/O");

// 8-bit three-channel raster, row-major, top-left origin.
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height, Rgb fill = {0, 0, 0});

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return pixels_.empty(); }
    std::size_t pixel_count() const { return pixels_.size(); }

    Rgb& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    const Rgb& at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

    std::vector<Rgb>& pixels() { return pixels_; }
    const std::vector<Rgb>& pixels() const { return pixels_; }

    bool operator==(const RgbImage&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<Rgb> pixels_;
};

// Single-channel 8-bit raster.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(int width, int height, std::uint8_t fill = 0);

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return pixels_.empty(); }

    std::uint8_t& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
    std::uint8_t at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

    std::vector<std::uint8_t>& pixels() { return pixels_; }
    const std::vector<std::uint8_t>& pixels() const { return pixels_; }

    bool operator==(const GrayImage&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

// h in [0, 360), s and v in [0, 1]. Achromatic pixels carry h == 0.
struct HsvPixel {
    double h = 0.0;
    double s = 0.0;
    double v = 0.0;
};

// Per-pixel foreground/background decision, dimensions matching the image
// it was derived from.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool fill = false);

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty() const { return bits_.empty(); }

    bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
    void set(int x, int y, bool fg) { bits_[static_cast<std::size_t>(y) * width_ + x] = fg ? 1 : 0; }

    std::size_t foreground_count() const;
    bool none() const { return foreground_count() == 0; }

    std::vector<std::uint8_t>& bits() { return bits_; }
    const std::vector<std::uint8_t>& bits() const { return bits_; }

    bool operator==(const BinaryMask&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_; // 0 = background, 1 = foreground
};

// Hexagonal-cone HSV conversion, total over all 24-bit inputs.
HsvPixel rgb_to_hsv(Rgb p);

// ITU-R BT.601 luma: round(0.299 r + 0.587 g + 0.114 b).
GrayImage to_gray(const RgbImage& img);

// Background pixels become (0,0,0); foreground pixels pass through.
// Throws std::invalid_argument on dimension mismatch.
RgbImage apply_mask(const RgbImage& img, const BinaryMask& mask);

// Bilinear resampling with half-pixel-center alignment. Resizing to the
// source dimensions returns a pixel-identical copy.
// Throws std::invalid_argument if a target dimension is < 1.
RgbImage resize(const RgbImage& img, int target_w, int target_h);

// 2|A∩B| / (|A|+|B|); both-empty pairs score 1. Throws on dimension mismatch.
double dice_coefficient(const BinaryMask& a, const BinaryMask& b);

// True when every foreground pixel of `inner` is also foreground in `outer`.
bool is_subset(const BinaryMask& inner, const BinaryMask& outer);

} // namespace hemacv
