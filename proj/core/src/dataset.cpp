#include "hemacv/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "hemacv/image_io.hpp"
#include "hemacv/rng.hpp"

namespace hemacv {

namespace fs = std::filesystem;

namespace {

const std::array<std::string, kClassCount> kClassNames = {
    "basophil", "erythroblast", "monocyte", "myeloblast", "seg_neutrophil"};

bool has_image_extension(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

} // namespace

std::string_view class_name(ClassLabel label) {
    return kClassNames[static_cast<int>(label)];
}

std::optional<ClassLabel> class_from_name(std::string_view name) {
    for (int i = 0; i < kClassCount; ++i)
        if (kClassNames[i] == name)
            return static_cast<ClassLabel>(i);
    return std::nullopt;
}

const std::vector<std::string>& class_names() {
    static const std::vector<std::string> names(kClassNames.begin(), kClassNames.end());
    return names;
}

std::string_view split_name(Split split) {
    switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    default: return "test";
    }
}

std::optional<Split> split_from_name(std::string_view name) {
    if (name == "train")
        return Split::train;
    if (name == "val")
        return Split::val;
    if (name == "test")
        return Split::test;
    return std::nullopt;
}

void validate_fractions(const SplitFractions& f) {
    if (f.train < 0.0 || f.val < 0.0 || f.test < 0.0)
        throw std::invalid_argument("split fractions must be non-negative");
    const double sum = f.train + f.val + f.test;
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("split fractions must sum to 1");
}

SplitCounts split_counts(std::uint64_t n, const SplitFractions& f) {
    validate_fractions(f);
    SplitCounts c;
    // The 1e-9 nudge keeps exact decimal fractions exact (0.70 * 1000 is
    // 700 even when the product lands an ulp low).
    c.train = static_cast<std::uint64_t>(std::floor(f.train * static_cast<double>(n) + 1e-9));
    c.train = std::min(c.train, n);
    const std::uint64_t rem = n - c.train;
    const double denom = f.val + f.test;
    if (rem == 0 || denom <= 0.0) {
        c.val = 0;
        c.test = rem;
        return c;
    }
    // Remainder goes to val/test proportionally, half rounding toward val.
    c.val = static_cast<std::uint64_t>(
        std::floor(static_cast<double>(rem) * (f.val / denom) + 0.5));
    c.val = std::min(c.val, rem);
    c.test = rem - c.val;
    return c;
}

std::vector<LabeledPath> scan(const fs::path& root) {
    if (!fs::exists(root))
        throw std::runtime_error("dataset root does not exist: " + root.string());
    if (!fs::is_directory(root))
        throw std::runtime_error("dataset root is not a directory: " + root.string());

    std::vector<fs::path> class_dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_directory())
            continue; // stray files next to the class dirs are ignored
        const std::string name = entry.path().filename().string();
        if (name == "masks")
            continue; // reserved for ground-truth/sidecar masks
        if (!class_from_name(name))
            throw std::runtime_error("unrecognized class directory: " + name);
        class_dirs.push_back(entry.path());
    }
    if (class_dirs.empty())
        throw std::runtime_error("no class directories under " + root.string());

    std::vector<LabeledPath> out;
    for (const auto& dir : class_dirs) {
        const std::string cls = dir.filename().string();
        const ClassLabel label = *class_from_name(cls);
        std::size_t before = out.size();
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file() || !has_image_extension(entry.path()))
                continue;
            out.push_back({cls + "/" + entry.path().filename().string(), label});
        }
        if (out.size() == before)
            throw std::runtime_error("class directory has no images: " + cls);
    }
    std::sort(out.begin(), out.end(),
              [](const LabeledPath& a, const LabeledPath& b) { return a.path < b.path; });
    return out;
}

SplitManifest stratified_split(const std::vector<LabeledPath>& samples,
                               const SplitFractions& fractions, std::uint64_t seed) {
    validate_fractions(fractions);

    std::map<ClassLabel, std::vector<std::string>> by_class;
    for (const auto& s : samples)
        by_class[s.label].push_back(s.path);

    SplitManifest manifest;
    manifest.seed = seed;
    manifest.fractions = fractions;

    for (auto& [label, paths] : by_class) {
        if (paths.size() < 3)
            throw std::invalid_argument("class " + std::string(class_name(label)) + " has " +
                                        std::to_string(paths.size()) +
                                        " samples; at least 3 are required");
        std::sort(paths.begin(), paths.end());
        SplitMix64 rng = seeded_stream(seed, static_cast<std::uint64_t>(label));
        shuffle(paths, rng);

        const SplitCounts counts = split_counts(paths.size(), fractions);
        for (std::size_t i = 0; i < paths.size(); ++i) {
            Split split = Split::test;
            if (i < counts.train)
                split = Split::train;
            else if (i < counts.train + counts.val)
                split = Split::val;
            manifest.records.push_back({std::move(paths[i]), label, split});
        }
    }

    std::sort(manifest.records.begin(), manifest.records.end(),
              [](const SampleRecord& a, const SampleRecord& b) { return a.path < b.path; });

    for (std::size_t i = 1; i < manifest.records.size(); ++i)
        if (manifest.records[i].path == manifest.records[i - 1].path)
            throw std::invalid_argument("duplicate sample path: " + manifest.records[i].path);

    return manifest;
}

void write_manifest(const fs::path& path, const SplitManifest& manifest) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write manifest: " + path.string());
    out << "path,label,split\n";
    for (const auto& rec : manifest.records) {
        if (rec.path.find_first_of(",\n\r") != std::string::npos)
            throw std::invalid_argument("manifest paths must not contain commas or newlines: " +
                                        rec.path);
        out << rec.path << ',' << class_name(rec.label) << ',' << split_name(rec.split) << '\n';
    }
    if (!out)
        throw std::runtime_error("failed writing manifest: " + path.string());
}

SplitManifest read_manifest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read manifest: " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("manifest is empty: " + path.string());
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    if (line != "path,label,split")
        throw std::runtime_error("manifest header mismatch in " + path.string());

    SplitManifest manifest;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw std::runtime_error("bad manifest row at line " + std::to_string(lineno));
        const std::string p = line.substr(0, c1);
        const auto label = class_from_name(line.substr(c1 + 1, c2 - c1 - 1));
        const auto split = split_from_name(line.substr(c2 + 1));
        if (p.empty() || !label || !split)
            throw std::runtime_error("bad manifest row at line " + std::to_string(lineno));
        manifest.records.push_back({p, *label, *split});
    }
    return manifest;
}

// ---------------------------------------------------------------------------
// Synthetic fixture generation

namespace {

struct Disc {
    double cx, cy, r;
    bool contains(double x, double y) const {
        const double dx = x - cx, dy = y - cy;
        return dx * dx + dy * dy <= r * r;
    }
};

struct Ellipse {
    double cx, cy, a, b;
    bool contains(double x, double y) const {
        const double dx = (x - cx) / a, dy = (y - cy) / b;
        return dx * dx + dy * dy <= 1.0;
    }
};

void hsv_to_unit_rgb(double h, double s, double v, double out[3]) {
    const double c = v * s;
    const double hp = h / 60.0;
    const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    if (hp < 1) {
        r = c; g = x;
    } else if (hp < 2) {
        r = x; g = c;
    } else if (hp < 3) {
        g = c; b = x;
    } else if (hp < 4) {
        g = x; b = c;
    } else if (hp < 5) {
        r = x; b = c;
    } else {
        r = c; b = x;
    }
    const double m = v - c;
    out[0] = r + m;
    out[1] = g + m;
    out[2] = b + m;
}

Rgb hsv_to_rgb_u8(double h, double s, double v) {
    double rgb[3];
    hsv_to_unit_rgb(h, s, v, rgb);
    auto q = [](double f) {
        return static_cast<std::uint8_t>(std::clamp(std::lround(f * 255.0), 0L, 255L));
    };
    return {q(rgb[0]), q(rgb[1]), q(rgb[2])};
}

// Luma of hsv(h, s, 1) on the 0..255 scale; luma is linear in v for fixed
// hue and saturation, so v = target_luma / unit_luma hits a luma target.
double unit_luma(double h, double s) {
    double rgb[3];
    hsv_to_unit_rgb(h, s, 1.0, rgb);
    return 255.0 * (0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2]);
}

// Class-distinctive nucleus geometry, all shapes 4-connected and contained
// in the cytoplasm ellipse.
struct NucleusShape {
    std::vector<Disc> lobes;        // unioned
    std::optional<Disc> bite;       // subtracted (monocyte kidney form)
    std::optional<Ellipse> ellipse; // used instead of lobes when set

    bool contains(double x, double y) const {
        if (bite && bite->contains(x, y))
            return false;
        if (ellipse)
            return ellipse->contains(x, y);
        for (const auto& d : lobes)
            if (d.contains(x, y))
                return true;
        return false;
    }
};

NucleusShape nucleus_shape(ClassLabel label, double cx, double cy, double s, double grow) {
    NucleusShape shape;
    switch (label) {
    case ClassLabel::basophil:
        shape.lobes.push_back({cx, cy, 0.14 * s * grow});
        break;
    case ClassLabel::erythroblast:
        shape.lobes.push_back({cx, cy, 0.10 * s * grow});
        break;
    case ClassLabel::monocyte:
        shape.lobes.push_back({cx, cy, 0.17 * s * grow});
        shape.bite = Disc{cx + 0.12 * s * grow, cy, 0.14 * s * grow};
        break;
    case ClassLabel::myeloblast:
        shape.ellipse = Ellipse{cx, cy, 0.19 * s * grow, 0.13 * s * grow};
        break;
    case ClassLabel::seg_neutrophil:
        shape.lobes.push_back({cx - 0.13 * s * grow, cy - 0.02 * s * grow, 0.09 * s * grow});
        shape.lobes.push_back({cx, cy + 0.06 * s * grow, 0.09 * s * grow});
        shape.lobes.push_back({cx + 0.13 * s * grow, cy - 0.02 * s * grow, 0.09 * s * grow});
        break;
    }
    return shape;
}

} // namespace

void make_fixture(const fs::path& out, const FixtureConfig& cfg) {
    if (cfg.per_class < 3)
        throw std::invalid_argument("make_fixture: per_class must be at least 3");
    if (cfg.size < 32)
        throw std::invalid_argument("make_fixture: size must be at least 32");

    const double s = cfg.size;
    // Nucleus hues sit inside the default nucleus band [220, 340]; cytoplasm
    // hues sit past it but inside the default cell band.
    const std::array<double, kClassCount> nucleus_hue = {228, 253, 278, 303, 328};

    for (int c = 0; c < kClassCount; ++c) {
        const ClassLabel label = static_cast<ClassLabel>(c);
        const std::string cls(class_name(label));
        std::error_code ec;
        fs::create_directories(out / cls, ec);
        fs::create_directories(out / "masks" / cls, ec);
        if (!fs::is_directory(out / cls) || !fs::is_directory(out / "masks" / cls))
            throw std::runtime_error("cannot create fixture directories under " + out.string());

        for (int i = 0; i < cfg.per_class; ++i) {
            SplitMix64 rng = seeded_stream(
                cfg.seed, static_cast<std::uint64_t>(c) * cfg.per_class + i);

            const double cx = s * (0.5 + rng.next_in(-0.03, 0.03));
            const double cy = s * (0.5 + rng.next_in(-0.03, 0.03));
            const Ellipse cyto{cx, cy, s * rng.next_in(0.30, 0.36), s * rng.next_in(0.28, 0.34)};
            const double grow = rng.next_in(0.92, 1.08);
            const double nx = cx + s * rng.next_in(-0.02, 0.02);
            const double ny = cy + s * rng.next_in(-0.02, 0.02);
            const NucleusShape nucleus = nucleus_shape(label, nx, ny, s, grow);

            // Luma-targeted colors: cytoplasm and nucleus stay close in luma
            // and well below the white background, so the global Otsu split
            // lands between background and cell for every class, while the
            // nucleus is always the strictly darker compartment within the
            // cell. Per-class cytoplasm saturation adds a second linear cue
            // for the classifier next to the nucleus hue.
            const double cyto_h = 344.0 + 3.0 * c + rng.next_in(-1.5, 1.5);
            const double cyto_s = 0.285 + 0.025 * c + rng.next_in(-0.012, 0.012);
            const double cyto_v = rng.next_in(0.95, 0.99);
            const double cyto_luma = cyto_v * unit_luma(cyto_h, cyto_s);

            const double nuc_h = nucleus_hue[c] + rng.next_in(-5.0, 5.0);
            const double nuc_s = 0.38 + rng.next_in(-0.04, 0.04);
            const double nuc_luma_target = cyto_luma - rng.next_in(18.0, 30.0);
            const double nuc_v =
                std::clamp(nuc_luma_target / unit_luma(nuc_h, nuc_s), 0.30, 0.92);

            const Rgb nucleus_color = hsv_to_rgb_u8(nuc_h, nuc_s, nuc_v);
            const Rgb cyto_color = hsv_to_rgb_u8(cyto_h, cyto_s, cyto_v);
            const Rgb speckle_color = hsv_to_rgb_u8(215.0 + rng.next_in(-10.0, 10.0), 0.5, 0.45);

            // A couple of debris speckles well away from the cell; the
            // pipeline is expected to drop them as non-largest components.
            std::vector<Disc> speckles;
            for (int k = 0; k < 2; ++k) {
                Disc d{6.0, 6.0, 2.0};
                for (int attempt = 0; attempt < 100; ++attempt) {
                    const double x = rng.next_in(5.0, s - 6.0);
                    const double y = rng.next_in(5.0, s - 6.0);
                    const double dx = x - s * 0.5, dy = y - s * 0.5;
                    if (std::sqrt(dx * dx + dy * dy) >= 0.45 * s) {
                        d.cx = x;
                        d.cy = y;
                        break;
                    }
                }
                speckles.push_back(d);
            }

            RgbImage img(cfg.size, cfg.size, {255, 255, 255});
            GrayImage truth(cfg.size, cfg.size, 0);
            for (int y = 0; y < cfg.size; ++y) {
                for (int x = 0; x < cfg.size; ++x) {
                    const double px = x + 0.5, py = y + 0.5;
                    if (nucleus.contains(px, py)) {
                        img.at(x, y) = nucleus_color;
                        truth.at(x, y) = 255;
                    } else if (cyto.contains(px, py)) {
                        img.at(x, y) = cyto_color;
                        truth.at(x, y) = 128;
                    } else {
                        for (const auto& d : speckles) {
                            if (d.contains(px, py)) {
                                img.at(x, y) = speckle_color;
                                break;
                            }
                        }
                    }
                }
            }

            char name[64];
            std::snprintf(name, sizeof name, "%s_%04d.png", cls.c_str(), i);
            write_png(out / cls / name, img);
            write_gray_png(out / "masks" / cls / name, truth);
        }
    }
}

std::optional<BinaryMask> load_fixture_truth(const fs::path& root,
                                             const std::string& image_rel_path, bool nucleus) {
    const fs::path mask_path = root / "masks" / image_rel_path;
    if (!fs::exists(mask_path))
        return std::nullopt;
    const GrayImage labels = read_gray_png(mask_path);
    BinaryMask mask(labels.width(), labels.height());
    for (std::size_t i = 0; i < labels.pixels().size(); ++i) {
        const std::uint8_t v = labels.pixels()[i];
        mask.bits()[i] = (nucleus ? v == 255 : v >= 128) ? 1 : 0;
    }
    return mask;
}

} // namespace hemacv
