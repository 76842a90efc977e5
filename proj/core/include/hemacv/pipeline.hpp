#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hemacv/attention.hpp"
#include "hemacv/dataset.hpp"
#include "hemacv/segmentation.hpp"
#include "hemacv/trainer.hpp"

namespace hemacv {

// Batch drivers behind the CLI subcommands. Everything here is a pure
// function of its inputs plus the filesystem, so runs with identical inputs
// and flags produce byte-identical artifacts.

struct SegmentTreeOptions {
    SegMethod method;
    SegmentationConfig seg;
    bool write_masks = false;
    std::optional<std::pair<int, int>> resize_to; // (w, h) applied after masking
    int jobs = 1;
};

struct ClassSegStats {
    std::string class_name;
    int images = 0;
    double mean_fg_fraction = 0.0;
    // Dice against fixture ground truth; only images with ground truth
    // contribute.
    double mean_dice = 0.0;
    double min_dice = 1.0;
    int dice_images = 0;
    // For nucleus targets: images whose nucleus mask is a subset of the
    // same-method cell mask.
    int subset_ok = 0;
    int subset_checked = 0;
};

// Mirrors root/<class>/<name> to out_root/<class>/<name> through segment();
// sidecar masks go to out_root/masks/<class>/<name> when write_masks is on.
// Distinct images may be processed concurrently (options.jobs); outputs are
// independent of the schedule.
std::vector<ClassSegStats> segment_tree(const std::filesystem::path& root,
                                        const std::filesystem::path& out_root,
                                        const SegmentTreeOptions& options);

struct VariantSpec {
    std::string name;             // e.g. "cell-otsu"
    std::filesystem::path root;   // segmented tree mirroring the manifest paths
};

struct TrainEvalOutcome {
    std::string variant;
    double val_accuracy = 0.0;
    double test_accuracy = 0.0;
};

// For each variant: loads the manifest samples from the variant root,
// trains on the train split, and evaluates on val and test (test is read
// once, after training, and influences nothing). Emits, under out_dir:
//   loss_<variant>.csv
//   confusion_<variant>_val.csv / confusion_<variant>_test.csv
//   metrics_<variant>_val.json / metrics_<variant>_test.json
//   model_<variant>.bin
//   summary.csv   one "variant,val_accuracy,test_accuracy" row per variant
std::vector<TrainEvalOutcome> train_eval(const SplitManifest& manifest,
                                         const std::vector<VariantSpec>& variants,
                                         const TrainConfig& cfg,
                                         const std::filesystem::path& out_dir);

struct BenchPoint {
    int n = 0;
    int h = 0;
    int d = 0;
    int l = 0;
    SplitAxis axis = SplitAxis::token;
    std::uint64_t macs_full = 0;
    std::uint64_t macs_area = 0;
    std::uint64_t wall_ns_full = 0;
    std::uint64_t wall_ns_area = 0;
};

// Runs full and area attention on seeded random tensors for every grid
// combination where l divides n (token axis) or the derived spatial
// dimension; indivisible combinations are skipped and reported in
// `skipped` when non-null.
std::vector<BenchPoint> attention_bench(const std::vector<int>& ns, const std::vector<int>& hs,
                                        const std::vector<int>& ds, const std::vector<int>& ls,
                                        SplitAxis axis, std::uint64_t seed,
                                        std::vector<std::string>* skipped = nullptr);

// CSV "n,h,d,l,axis,macs_full,macs_area,wall_ns_full,wall_ns_area".
void write_bench_csv(const std::filesystem::path& path, const std::vector<BenchPoint>& rows);

} // namespace hemacv
