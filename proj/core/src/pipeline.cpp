#include "hemacv/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "hemacv/image_io.hpp"
#include "hemacv/metrics.hpp"
#include "hemacv/rng.hpp"

namespace hemacv {

namespace fs = std::filesystem;

namespace {

struct PerImageSeg {
    int class_ordinal = 0;
    double fg_fraction = 0.0;
    std::optional<double> dice;
    std::optional<bool> subset_ok;
};

PerImageSeg segment_one(const fs::path& root, const fs::path& out_root,
                        const LabeledPath& sample, const SegmentTreeOptions& options) {
    const RgbImage img = read_image(root / sample.path);
    const SegmentResult seg = segment(img, options.method, options.seg);

    PerImageSeg res;
    res.class_ordinal = static_cast<int>(sample.label);
    res.fg_fraction =
        static_cast<double>(seg.mask.foreground_count()) / static_cast<double>(img.pixel_count());

    const bool nucleus = options.method.target == SegTarget::nucleus;
    if (auto truth = load_fixture_truth(root, sample.path, nucleus))
        res.dice = dice_coefficient(seg.mask, *truth);
    if (nucleus) {
        SegMethod cell_method{options.method.method, SegTarget::cell};
        const SegmentResult cell = segment(img, cell_method, options.seg);
        res.subset_ok = is_subset(seg.mask, cell.mask);
    }

    RgbImage out_img = std::move(seg.image);
    if (options.resize_to)
        out_img = resize(out_img, options.resize_to->first, options.resize_to->second);
    write_png(out_root / sample.path, out_img);
    if (options.write_masks)
        write_mask_png(out_root / "masks" / sample.path, seg.mask);
    return res;
}

} // namespace

std::vector<ClassSegStats> segment_tree(const fs::path& root, const fs::path& out_root,
                                        const SegmentTreeOptions& options) {
    const std::vector<LabeledPath> samples = scan(root);

    // Create all output directories up front; workers only write files.
    for (const auto& sample : samples) {
        const fs::path rel = fs::path(sample.path).parent_path();
        fs::create_directories(out_root / rel);
        if (options.write_masks)
            fs::create_directories(out_root / "masks" / rel);
    }

    std::vector<PerImageSeg> per_image(samples.size());
    const int jobs = std::max(1, options.jobs);
    if (jobs == 1) {
        for (std::size_t i = 0; i < samples.size(); ++i)
            per_image[i] = segment_one(root, out_root, samples[i], options);
    } else {
        std::atomic<std::size_t> next{0};
        std::atomic<bool> failed{false};
        std::string error_message;
        std::mutex error_mutex;
        auto worker = [&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= samples.size() || failed.load())
                    return;
                try {
                    per_image[i] = segment_one(root, out_root, samples[i], options);
                } catch (const std::exception& e) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!failed.exchange(true))
                        error_message = e.what();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
        if (failed.load())
            throw std::runtime_error(error_message);
    }

    std::map<int, ClassSegStats> by_class;
    for (const auto& img : per_image) {
        ClassSegStats& st = by_class[img.class_ordinal];
        if (st.images == 0)
            st.class_name = class_name(static_cast<ClassLabel>(img.class_ordinal));
        ++st.images;
        st.mean_fg_fraction += img.fg_fraction;
        if (img.dice) {
            st.mean_dice += *img.dice;
            st.min_dice = std::min(st.min_dice, *img.dice);
            ++st.dice_images;
        }
        if (img.subset_ok) {
            ++st.subset_checked;
            st.subset_ok += *img.subset_ok;
        }
    }

    std::vector<ClassSegStats> stats;
    for (auto& [ordinal, st] : by_class) {
        st.mean_fg_fraction /= st.images;
        if (st.dice_images > 0)
            st.mean_dice /= st.dice_images;
        stats.push_back(std::move(st));
    }
    return stats;
}

namespace {

TrainData load_split(const SplitManifest& manifest, const fs::path& root, Split split) {
    TrainData data;
    for (const auto& rec : manifest.records) {
        if (rec.split != split)
            continue;
        const fs::path p = root / rec.path;
        data.x.push_back(featurize(read_image(p)));
        data.y.push_back(static_cast<int>(rec.label));
    }
    return data;
}

ConfusionMatrix evaluate(const ModelParams& params, const TrainData& data) {
    ConfusionMatrix cm(kClassCount);
    for (std::size_t i = 0; i < data.size(); ++i)
        cm.add(data.y[i], predict(params, data.x[i]));
    return cm;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out)
        throw std::runtime_error("failed writing " + path.string());
}

} // namespace

std::vector<TrainEvalOutcome> train_eval(const SplitManifest& manifest,
                                         const std::vector<VariantSpec>& variants,
                                         const TrainConfig& cfg, const fs::path& out_dir) {
    if (variants.empty())
        throw std::invalid_argument("train_eval: no variants given");
    fs::create_directories(out_dir);

    std::vector<TrainEvalOutcome> outcomes;
    for (const auto& variant : variants) {
        const TrainData train_data = load_split(manifest, variant.root, Split::train);
        const TrainData val_data = load_split(manifest, variant.root, Split::val);

        TrainResult trained = train(train_data, val_data, cfg);
        write_loss_curve_csv(out_dir / ("loss_" + variant.name + ".csv"), trained.curve);
        save_params(out_dir / ("model_" + variant.name + ".bin"), trained.params);

        // Test images are read here, once, after training; nothing is
        // selected from them.
        const TrainData test_data = load_split(manifest, variant.root, Split::test);

        const ConfusionMatrix cm_val = evaluate(trained.params, val_data);
        const ConfusionMatrix cm_test = evaluate(trained.params, test_data);
        write_confusion_csv(out_dir / ("confusion_" + variant.name + "_val.csv"), cm_val,
                            class_names());
        write_confusion_csv(out_dir / ("confusion_" + variant.name + "_test.csv"), cm_test,
                            class_names());
        const MetricsReport rep_val = report(cm_val);
        const MetricsReport rep_test = report(cm_test);
        write_text_file(out_dir / ("metrics_" + variant.name + "_val.json"),
                        report_to_json(rep_val, class_names()));
        write_text_file(out_dir / ("metrics_" + variant.name + "_test.json"),
                        report_to_json(rep_test, class_names()));

        outcomes.push_back(
            {variant.name, rep_val.overall_accuracy, rep_test.overall_accuracy});
    }

    std::string summary = "variant,val_accuracy,test_accuracy\n";
    char buf[160];
    for (const auto& o : outcomes) {
        std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f\n", o.variant.c_str(), o.val_accuracy,
                      o.test_accuracy);
        summary += buf;
    }
    write_text_file(out_dir / "summary.csv", summary);
    return outcomes;
}

namespace {

FeatureMap random_feature_map(int n, int h, int d, SplitMix64& rng,
                              std::optional<std::pair<int, int>> spatial) {
    FeatureMap fm = FeatureMap::zeros(n, h, d);
    for (double& v : fm.values)
        v = rng.next_in(-1.0, 1.0);
    fm.spatial = spatial;
    return fm;
}

// Smallest H >= sqrt(n) that divides n, so spatial axes stay exercisable.
std::optional<std::pair<int, int>> derive_spatial(int n) {
    for (int hdim = static_cast<int>(std::sqrt(static_cast<double>(n))); hdim >= 1; --hdim)
        if (n % hdim == 0)
            return std::make_pair(hdim, n / hdim);
    return std::nullopt;
}

} // namespace

std::vector<BenchPoint> attention_bench(const std::vector<int>& ns, const std::vector<int>& hs,
                                        const std::vector<int>& ds, const std::vector<int>& ls,
                                        SplitAxis axis, std::uint64_t seed,
                                        std::vector<std::string>* skipped) {
    using clock = std::chrono::steady_clock;
    std::vector<BenchPoint> rows;
    std::uint64_t stream = 0;
    for (const int n : ns) {
        for (const int h : hs) {
            for (const int d : ds) {
                for (const int l : ls) {
                    AttentionConfig cfg;
                    cfg.l = l;
                    cfg.axis = axis;
                    std::optional<std::pair<int, int>> spatial;
                    if (axis != SplitAxis::token)
                        spatial = derive_spatial(n);

                    SplitMix64 rng = seeded_stream(seed, stream++);
                    const FeatureMap q = random_feature_map(n, h, d, rng, spatial);
                    const FeatureMap k = random_feature_map(n, h, d, rng, spatial);
                    const FeatureMap v = random_feature_map(n, h, d, rng, spatial);

                    BenchPoint row;
                    row.n = n;
                    row.h = h;
                    row.d = d;
                    row.l = l;
                    row.axis = axis;

                    const auto t0 = clock::now();
                    const AttentionResult full = full_attention(q, k, v);
                    const auto t1 = clock::now();
                    AttentionResult area;
                    try {
                        area = area_attention(q, k, v, cfg);
                    } catch (const std::invalid_argument& e) {
                        if (skipped)
                            skipped->push_back(e.what());
                        continue;
                    }
                    const auto t2 = clock::now();

                    row.macs_full = full.flops.macs;
                    row.macs_area = area.flops.macs;
                    row.wall_ns_full = static_cast<std::uint64_t>(
                        std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count());
                    row.wall_ns_area = static_cast<std::uint64_t>(
                        std::chrono::duration_cast<std::chrono::nanoseconds>(t2 - t1).count());
                    rows.push_back(row);
                }
            }
        }
    }
    return rows;
}

void write_bench_csv(const fs::path& path, const std::vector<BenchPoint>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << "n,h,d,l,axis,macs_full,macs_area,wall_ns_full,wall_ns_area\n";
    for (const auto& r : rows) {
        out << r.n << ',' << r.h << ',' << r.d << ',' << r.l << ',' << axis_name(r.axis) << ','
            << r.macs_full << ',' << r.macs_area << ',' << r.wall_ns_full << ','
            << r.wall_ns_area << '\n';
    }
    if (!out)
        throw std::runtime_error("failed writing " + path.string());
}

} // namespace hemacv
