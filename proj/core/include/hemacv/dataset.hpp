#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hemacv/image.hpp"

namespace hemacv {

// The five leukemia-relevant cell types, ordinals fixed across runs.
enum class ClassLabel : int {
    basophil = 0,
    erythroblast = 1,
    monocyte = 2,
    myeloblast = 3,
    seg_neutrophil = 4,
};

inline constexpr int kClassCount = 5;

std::string_view class_name(ClassLabel label);
std::optional<ClassLabel> class_from_name(std::string_view name);
const std::vector<std::string>& class_names();

enum class Split : int { train = 0, val = 1, test = 2 };

std::string_view split_name(Split split);
std::optional<Split> split_from_name(std::string_view name);

struct LabeledPath {
    std::string path; // relative to the dataset root, '/'-separated
    ClassLabel label;
};

struct SampleRecord {
    std::string path;
    ClassLabel label;
    Split split;

    bool operator==(const SampleRecord&) const = default;
};

struct SplitFractions {
    double train = 0.70;
    double val = 0.15;
    double test = 0.15;
};

// Throws std::invalid_argument unless all fractions are >= 0 and they sum to
// 1 within 1e-9.
void validate_fractions(const SplitFractions& f);

struct SplitManifest {
    std::vector<SampleRecord> records; // sorted by path
    std::uint64_t seed = 0;
    SplitFractions fractions;
};

// Per-class split sizes. train = floor(f_train * n); the remainder goes to
// val and test proportionally, rounding half toward val (for the common
// 15/15 split that is "val takes the ceiling of half"). Depends only on n
// and the fractions, never on the seed.
struct SplitCounts {
    std::uint64_t train = 0;
    std::uint64_t val = 0;
    std::uint64_t test = 0;
};
SplitCounts split_counts(std::uint64_t n, const SplitFractions& f);

// Walks root/<class>/<image> and returns records in lexicographic path
// order. Accepts .png/.jpg/.jpeg (case-insensitive). A subdirectory named
// "masks" is reserved for ground-truth/sidecar masks and skipped; any other
// unrecognized subdirectory is an error. Regular files directly under root
// are ignored.
// Throws std::runtime_error on a missing root, an unknown class directory,
// or a class directory with zero images.
std::vector<LabeledPath> scan(const std::filesystem::path& root);

// Deterministic per-class stratified split. Within each class the
// lexicographically sorted sample list is shuffled by a SplitMix64 stream
// derived from (seed, class ordinal), then cut according to split_counts.
// Requires every class present to have at least 3 samples.
SplitManifest stratified_split(const std::vector<LabeledPath>& samples,
                               const SplitFractions& fractions,
                               std::uint64_t seed);

// Manifest CSV: header "path,label,split", UTF-8, LF line endings, records
// sorted by path. Byte-exact reproducibility is part of the contract.
void write_manifest(const std::filesystem::path& path, const SplitManifest& manifest);

// Reads records back from the CSV (the file does not carry seed/fractions).
SplitManifest read_manifest(const std::filesystem::path& path);

struct FixtureConfig {
    int per_class = 10;
    std::uint64_t seed = 0;
    int size = 128; // square image edge in pixels
};

// Generates a synthetic desk-scale stand-in for the smear corpus:
//
//   out/<class>/<class>_NNNN.png   white background, pink cytoplasm blob,
//                                  class-distinctive nucleus geometry and
//                                  hue, plus tiny off-cell debris speckles
//   out/masks/<class>/<class>_NNNN.png
//                                  ground-truth label map: 0 background,
//                                  128 cytoplasm, 255 nucleus
//
// Nucleus hues sit inside the default nucleus band, cytoplasm hues inside
// the default cell band only, and the nucleus is the darkest compartment,
// so all four default segmentation variants recover the generator geometry.
// Same config => byte-identical trees.
void make_fixture(const std::filesystem::path& out, const FixtureConfig& cfg);

// Loads the ground-truth mask for one fixture image (see make_fixture
// layout): cell = label >= 128, nucleus = label == 255. Returns nullopt when
// no ground truth exists for the image.
std::optional<BinaryMask> load_fixture_truth(const std::filesystem::path& root,
                                             const std::string& image_rel_path,
                                             bool nucleus);

} // namespace hemacv
