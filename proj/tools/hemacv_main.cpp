// hemacv: blood-cell segmentation / classification pipeline driver.
//
// Subcommands: fixture, segment, split, train-eval, attn-bench, report.
// Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.
// Logs go to stderr, artifacts to files; --json prints a machine-readable
// summary of the run to stdout.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hemacv/dataset.hpp"
#include "hemacv/image_io.hpp"
#include "hemacv/metrics.hpp"
#include "hemacv/pipeline.hpp"
#include "hemacv/segmentation.hpp"
#include "hemacv/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Validation problems the user can fix on the command line (exit 2), as
// opposed to runtime failures (exit 1).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat JSON config: {"<subcommand>": {"<long-option-name>": value, ...}}.
// CLI11 applies it below flag precedence, so CLI flags always win.
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App*, bool, bool, std::string) const override {
        return "{}\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j;
        try {
            j = json::parse(input);
        } catch (const json::parse_error& e) {
            throw CLI::FileError(std::string("config is not valid JSON: ") + e.what());
        }
        std::vector<CLI::ConfigItem> out;
        flatten({}, j, out);
        return out;
    }

private:
    static void flatten(std::vector<std::string> parents, const json& j,
                        std::vector<CLI::ConfigItem>& out) {
        for (const auto& [key, value] : j.items()) {
            if (value.is_object()) {
                auto nested = parents;
                nested.push_back(key);
                flatten(std::move(nested), value, out);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array()) {
                for (const auto& e : value)
                    item.inputs.push_back(e.is_string() ? e.get<std::string>() : e.dump());
            } else {
                item.inputs.push_back(value.is_string() ? value.get<std::string>() : value.dump());
            }
            out.push_back(std::move(item));
        }
    }
};

hemacv::SplitFractions parse_fractions(const std::string& text) {
    std::stringstream ss(text);
    std::string cell;
    std::vector<double> parts;
    while (std::getline(ss, cell, ',')) {
        try {
            parts.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw UsageError("cannot parse fraction '" + cell + "' in '" + text + "'");
        }
    }
    if (parts.size() != 3)
        throw UsageError("--fractions expects three comma-separated values, got '" + text + "'");
    hemacv::SplitFractions f{parts[0], parts[1], parts[2]};
    try {
        hemacv::validate_fractions(f);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return f;
}

void require_directory(const fs::path& p, const std::string& what) {
    if (!fs::is_directory(p))
        throw UsageError(what + " does not exist or is not a directory: " + p.string());
}

void require_file(const fs::path& p, const std::string& what) {
    if (!fs::is_regular_file(p))
        throw UsageError(what + " does not exist: " + p.string());
}

void emit(const json& summary, bool as_json) {
    if (as_json)
        std::cout << summary.dump() << "\n";
}

struct Cli {
    CLI::App app{"Blood-cell smear segmentation, splitting, training and "
                 "evaluation pipeline",
                 "hemacv"};
    bool json_out = false;

    // fixture
    std::string fixture_out;
    hemacv::FixtureConfig fixture_cfg;

    // segment
    std::string seg_root, seg_out;
    std::string seg_method, seg_target;
    hemacv::SegmentationConfig seg_cfg;
    bool seg_masks = false;
    std::vector<int> seg_resize;
    int seg_jobs = 1;

    // split
    std::string split_root, split_out;
    std::string split_fractions = "0.7,0.15,0.15";
    std::uint64_t split_seed = 0;

    // train-eval
    std::string te_manifest, te_out, te_root;
    std::vector<std::string> te_variants;
    hemacv::TrainConfig te_cfg;

    // attn-bench
    std::vector<int> ab_n{64, 128, 256};
    std::vector<int> ab_h{2};
    std::vector<int> ab_d{16};
    std::vector<int> ab_l{1, 2, 4, 8};
    std::string ab_axis = "token";
    std::uint64_t ab_seed = 0;
    std::string ab_out;

    // report
    std::string rp_cm, rp_out;
};

void setup_fixture(Cli& c) {
    auto* cmd = c.app.add_subcommand("fixture", "Generate a synthetic labeled image tree");
    cmd->add_option("--out", c.fixture_out, "Output directory")->required();
    cmd->add_option("--per-class", c.fixture_cfg.per_class, "Images per class (>= 3)")
        ->capture_default_str();
    cmd->add_option("--seed", c.fixture_cfg.seed, "RNG seed")->capture_default_str();
    cmd->add_option("--size", c.fixture_cfg.size, "Square image edge in pixels")
        ->capture_default_str();
    cmd->callback([&c] {
        if (c.fixture_cfg.per_class < 3)
            throw UsageError("--per-class must be at least 3");
        if (c.fixture_cfg.size < 32)
            throw UsageError("--size must be at least 32");
        hemacv::make_fixture(c.fixture_out, c.fixture_cfg);
        const int images = c.fixture_cfg.per_class * hemacv::kClassCount;
        std::cerr << "fixture: wrote " << images << " images + " << images << " masks under "
                  << c.fixture_out << "\n";
        emit({{"command", "fixture"},
              {"out", c.fixture_out},
              {"images", images},
              {"classes", hemacv::kClassCount}},
             c.json_out);
    });
}

void setup_segment(Cli& c) {
    auto* cmd = c.app.add_subcommand("segment", "Mirror an image tree through one segmentation variant");
    cmd->add_option("--root", c.seg_root, "Input tree root/<class>/<image>")->required();
    cmd->add_option("--out", c.seg_out, "Output tree root")->required();
    cmd->add_option("--method", c.seg_method, "Segmentation method")
        ->required()
        ->check(CLI::IsMember({"hue", "otsu"}));
    cmd->add_option("--target", c.seg_target, "Segmentation target")
        ->required()
        ->check(CLI::IsMember({"cell", "nucleus"}));
    cmd->add_option("--cell-hue-lo", c.seg_cfg.cell_band.lo, "Cell hue band low edge (deg)")
        ->capture_default_str();
    cmd->add_option("--cell-hue-hi", c.seg_cfg.cell_band.hi, "Cell hue band high edge (deg)")
        ->capture_default_str();
    cmd->add_option("--cell-min-sat", c.seg_cfg.cell_band.min_saturation,
                    "Cell minimum saturation")
        ->capture_default_str();
    cmd->add_option("--nucleus-hue-lo", c.seg_cfg.nucleus_band.lo,
                    "Nucleus hue band low edge (deg)")
        ->capture_default_str();
    cmd->add_option("--nucleus-hue-hi", c.seg_cfg.nucleus_band.hi,
                    "Nucleus hue band high edge (deg)")
        ->capture_default_str();
    cmd->add_option("--nucleus-min-sat", c.seg_cfg.nucleus_band.min_saturation,
                    "Nucleus minimum saturation")
        ->capture_default_str();
    cmd->add_flag("--masks", c.seg_masks, "Also write sidecar mask PNGs under masks/");
    cmd->add_option("--resize", c.seg_resize,
                    "Rescale segmented images to W H (no default; source size kept)")
        ->expected(2);
    cmd->add_option("--jobs", c.seg_jobs, "Worker threads")->capture_default_str();
    cmd->callback([&c] {
        require_directory(c.seg_root, "--root");
        if (c.seg_jobs < 1)
            throw UsageError("--jobs must be at least 1");

        hemacv::SegmentTreeOptions opt;
        opt.method.method = c.seg_method == "hue" ? hemacv::SegMethodKind::hue
                                                  : hemacv::SegMethodKind::otsu;
        opt.method.target = c.seg_target == "cell" ? hemacv::SegTarget::cell
                                                   : hemacv::SegTarget::nucleus;
        opt.seg = c.seg_cfg;
        opt.write_masks = c.seg_masks;
        opt.jobs = c.seg_jobs;
        if (!c.seg_resize.empty()) {
            if (c.seg_resize[0] < 1 || c.seg_resize[1] < 1)
                throw UsageError("--resize dimensions must be at least 1");
            opt.resize_to = {c.seg_resize[0], c.seg_resize[1]};
        }

        try {
            hemacv::scan(c.seg_root);
        } catch (const std::runtime_error& e) {
            throw UsageError(e.what());
        }

        const auto stats = hemacv::segment_tree(c.seg_root, c.seg_out, opt);

        json jstats = json::array();
        for (const auto& st : stats) {
            char line[256];
            std::snprintf(line, sizeof line, "%s: images=%d fg=%.4f", st.class_name.c_str(),
                          st.images, st.mean_fg_fraction);
            std::string text = line;
            if (st.dice_images > 0) {
                std::snprintf(line, sizeof line, " dice=%.4f (%d images)", st.mean_dice,
                              st.dice_images);
                text += line;
            }
            if (st.subset_checked > 0) {
                std::snprintf(line, sizeof line, " nucleus_in_cell=%d/%d", st.subset_ok,
                              st.subset_checked);
                text += line;
            }
            std::cerr << text << "\n";
            json row = {{"class", st.class_name},
                        {"images", st.images},
                        {"mean_fg_fraction", st.mean_fg_fraction}};
            if (st.dice_images > 0)
                row["mean_dice"] = st.mean_dice;
            if (st.subset_checked > 0) {
                row["subset_ok"] = st.subset_ok;
                row["subset_checked"] = st.subset_checked;
            }
            jstats.push_back(row);
        }
        emit({{"command", "segment"},
              {"method", c.seg_method},
              {"target", c.seg_target},
              {"out", c.seg_out},
              {"classes", jstats}},
             c.json_out);
    });
}

void setup_split(Cli& c) {
    auto* cmd = c.app.add_subcommand("split", "Write a stratified train/val/test manifest");
    cmd->add_option("--root", c.split_root, "Dataset tree root")->required();
    cmd->add_option("--out", c.split_out, "Manifest CSV path")->required();
    cmd->add_option("--fractions", c.split_fractions, "train,val,test fractions")
        ->capture_default_str();
    cmd->add_option("--seed", c.split_seed, "Shuffle seed")->capture_default_str();
    cmd->callback([&c] {
        require_directory(c.split_root, "--root");
        const hemacv::SplitFractions fractions = parse_fractions(c.split_fractions);
        std::vector<hemacv::LabeledPath> samples;
        try {
            samples = hemacv::scan(c.split_root);
        } catch (const std::runtime_error& e) {
            throw UsageError(e.what());
        }
        hemacv::SplitManifest manifest;
        try {
            manifest = hemacv::stratified_split(samples, fractions, c.split_seed);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        hemacv::write_manifest(c.split_out, manifest);

        std::map<hemacv::Split, int> counts;
        for (const auto& rec : manifest.records)
            ++counts[rec.split];
        std::cerr << "split: " << manifest.records.size() << " samples -> train "
                  << counts[hemacv::Split::train] << ", val " << counts[hemacv::Split::val]
                  << ", test " << counts[hemacv::Split::test] << " (" << c.split_out << ")\n";
        emit({{"command", "split"},
              {"out", c.split_out},
              {"total", manifest.records.size()},
              {"train", counts[hemacv::Split::train]},
              {"val", counts[hemacv::Split::val]},
              {"test", counts[hemacv::Split::test]}},
             c.json_out);
    });
}

void setup_train_eval(Cli& c) {
    auto* cmd = c.app.add_subcommand(
        "train-eval", "Train the classifier per variant and evaluate on val and test");
    cmd->add_option("--manifest", c.te_manifest, "Split manifest CSV")->required();
    cmd->add_option("--out", c.te_out, "Output directory for reports")->required();
    cmd->add_option("--root", c.te_root, "Single dataset root (variant name 'default')");
    cmd->add_option("--variant", c.te_variants,
                    "Named variant root as name=path (repeatable)");
    cmd->add_option("--epochs", c.te_cfg.epochs, "Training epochs")->capture_default_str();
    cmd->add_option("--lr", c.te_cfg.learning_rate, "Learning rate")->capture_default_str();
    cmd->add_option("--batch-size", c.te_cfg.batch_size, "Mini-batch size")
        ->capture_default_str();
    cmd->add_option("--l2", c.te_cfg.l2, "L2 penalty")->capture_default_str();
    cmd->add_option("--seed", c.te_cfg.seed, "Training seed")->capture_default_str();
    cmd->callback([&c] {
        require_file(c.te_manifest, "--manifest");

        std::vector<hemacv::VariantSpec> variants;
        if (!c.te_root.empty())
            variants.push_back({"default", c.te_root});
        for (const auto& spec : c.te_variants) {
            const auto eq = spec.find('=');
            if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size())
                throw UsageError("--variant expects name=path, got '" + spec + "'");
            variants.push_back({spec.substr(0, eq), spec.substr(eq + 1)});
        }
        if (variants.empty())
            throw UsageError("give --root or at least one --variant name=path");
        for (const auto& v : variants)
            require_directory(v.root, "variant '" + v.name + "' root");
        if (c.te_cfg.epochs < 1)
            throw UsageError("--epochs must be at least 1");
        if (c.te_cfg.batch_size < 1)
            throw UsageError("--batch-size must be at least 1");
        if (c.te_cfg.learning_rate < 0)
            throw UsageError("--lr must be non-negative");

        const hemacv::SplitManifest manifest = hemacv::read_manifest(c.te_manifest);
        // Fail on a missing image before any training starts.
        for (const auto& v : variants)
            for (const auto& rec : manifest.records)
                if (!fs::is_regular_file(v.root / rec.path))
                    throw UsageError("variant '" + v.name + "' is missing " + rec.path +
                                     " under " + v.root.string());

        const auto outcomes = hemacv::train_eval(manifest, variants, c.te_cfg, c.te_out);

        json jout = json::array();
        for (const auto& o : outcomes) {
            char line[160];
            std::snprintf(line, sizeof line, "%s: val_accuracy=%.6f test_accuracy=%.6f",
                          o.variant.c_str(), o.val_accuracy, o.test_accuracy);
            std::cerr << line << "\n";
            jout.push_back({{"variant", o.variant},
                            {"val_accuracy", o.val_accuracy},
                            {"test_accuracy", o.test_accuracy}});
        }
        std::cerr << "train-eval: reports under " << c.te_out << "\n";
        emit({{"command", "train-eval"}, {"out", c.te_out}, {"variants", jout}}, c.json_out);
    });
}

void setup_attn_bench(Cli& c) {
    auto* cmd = c.app.add_subcommand(
        "attn-bench", "Compare full vs area attention cost over a shape grid");
    cmd->add_option("--n", c.ab_n, "Token counts")->capture_default_str();
    cmd->add_option("--heads", c.ab_h, "Head counts")->capture_default_str();
    cmd->add_option("--dim", c.ab_d, "Per-head dims")->capture_default_str();
    cmd->add_option("--l", c.ab_l, "Segment counts")->capture_default_str();
    cmd->add_option("--axis", c.ab_axis, "Split axis")
        ->check(CLI::IsMember({"horizontal", "vertical", "token"}))
        ->capture_default_str();
    cmd->add_option("--seed", c.ab_seed, "Tensor seed")->capture_default_str();
    cmd->add_option("--out", c.ab_out, "CSV path (stdout when omitted)");
    cmd->callback([&c] {
        for (const int v : c.ab_n)
            if (v < 1)
                throw UsageError("--n entries must be at least 1");
        std::vector<std::string> skipped;
        const auto rows = hemacv::attention_bench(c.ab_n, c.ab_h, c.ab_d, c.ab_l,
                                                  *hemacv::axis_from_name(c.ab_axis), c.ab_seed,
                                                  &skipped);
        for (const auto& why : skipped)
            std::cerr << "attn-bench: skipped: " << why << "\n";
        if (!c.ab_out.empty()) {
            hemacv::write_bench_csv(c.ab_out, rows);
            std::cerr << "attn-bench: " << rows.size() << " rows -> " << c.ab_out << "\n";
        } else {
            std::cout << "n,h,d,l,axis,macs_full,macs_area,wall_ns_full,wall_ns_area\n";
            for (const auto& r : rows)
                std::cout << r.n << ',' << r.h << ',' << r.d << ',' << r.l << ','
                          << hemacv::axis_name(r.axis) << ',' << r.macs_full << ','
                          << r.macs_area << ',' << r.wall_ns_full << ',' << r.wall_ns_area
                          << "\n";
        }
        if (c.json_out) {
            json jrows = json::array();
            for (const auto& r : rows)
                jrows.push_back({{"n", r.n},
                                 {"h", r.h},
                                 {"d", r.d},
                                 {"l", r.l},
                                 {"axis", hemacv::axis_name(r.axis)},
                                 {"macs_full", r.macs_full},
                                 {"macs_area", r.macs_area}});
            emit({{"command", "attn-bench"}, {"rows", jrows}, {"skipped", skipped.size()}},
                 true);
        }
    });
}

void setup_report(Cli& c) {
    auto* cmd = c.app.add_subcommand(
        "report", "Compute the metrics report for a confusion-matrix CSV");
    cmd->add_option("--cm", c.rp_cm, "Confusion matrix CSV")->required();
    cmd->add_option("--out", c.rp_out, "Metrics JSON path (stdout when omitted)");
    cmd->callback([&c] {
        require_file(c.rp_cm, "--cm");
        std::vector<std::string> labels;
        hemacv::ConfusionMatrix cm = [&] {
            try {
                return hemacv::read_confusion_csv(c.rp_cm, &labels);
            } catch (const std::exception& e) {
                throw UsageError(e.what());
            }
        }();
        const hemacv::MetricsReport rep = hemacv::report(cm);
        const std::string doc = hemacv::report_to_json(rep, labels);
        if (!c.rp_out.empty()) {
            std::ofstream out(c.rp_out, std::ios::binary);
            if (!out)
                throw std::runtime_error("cannot write " + c.rp_out);
            out << doc;
            std::cerr << "report: wrote " << c.rp_out << "\n";
        } else {
            std::cout << doc;
        }
        emit({{"command", "report"},
              {"overall_accuracy", rep.overall_accuracy},
              {"total", rep.total},
              {"undefined_count", rep.undefined_count}},
             c.json_out);
    });
}

} // namespace

int main(int argc, char** argv) {
    Cli cli;
    cli.app.require_subcommand(1);
    cli.app.add_flag("--json", cli.json_out, "Print a machine-readable summary to stdout");
    cli.app.set_config("--config", "", "JSON config file (flags take precedence)");
    cli.app.config_formatter(std::make_shared<JsonConfig>());

    setup_fixture(cli);
    setup_segment(cli);
    setup_split(cli);
    setup_train_eval(cli);
    setup_attn_bench(cli);
    setup_report(cli);

    try {
        cli.app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return cli.app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return cli.app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return cli.app.exit(e);
    } catch (const CLI::ParseError& e) {
        cli.app.exit(e);
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
