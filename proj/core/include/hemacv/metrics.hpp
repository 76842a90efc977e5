#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hemacv {

// K x K count table, rows = actual class, columns = predicted class.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(int k);

    int k() const { return k_; }
    std::uint64_t at(int actual, int predicted) const;
    void add(int actual, int predicted, std::uint64_t count = 1);
    // Elementwise sum; the merge of two partial accumulations equals the
    // accumulation of the concatenated streams.
    void merge(const ConfusionMatrix& other);

    std::uint64_t total() const;
    std::uint64_t trace() const;
    std::uint64_t row_total(int actual) const;
    std::uint64_t col_total(int predicted) const;

    bool operator==(const ConfusionMatrix&) const = default;

private:
    void check_label(int label) const;

    int k_ = 0;
    std::vector<std::uint64_t> counts_; // row-major k*k
};

struct BinaryCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    std::uint64_t total() const { return tp + fp + tn + fn; }
};

// One-vs-rest reduction for class c: tp = cm[c][c], fn = row c minus tp,
// fp = column c minus tp, tn = the rest.
BinaryCounts one_vs_rest(const ConfusionMatrix& cm, int c);

// A metric whose denominator is zero is undefined, which is distinct from 0.
struct BinaryMetrics {
    std::optional<double> accuracy;
    std::optional<double> sensitivity; // recall, TP / (TP + FN)
    std::optional<double> specificity; // TN / (TN + FP)
    std::optional<double> precision;   // TP / (TP + FP)
    std::optional<double> f1;          // 2 P R / (P + R)
};

BinaryMetrics binary_metrics(const BinaryCounts& b);

struct PerClassMetrics {
    std::optional<double> sensitivity;
    std::optional<double> specificity;
    std::optional<double> precision;
    std::optional<double> f1;
};

struct MetricsReport {
    double overall_accuracy = 0.0;        // trace / total
    std::vector<PerClassMetrics> per_class; // indexed by class ordinal
    // Unweighted mean over the classes where the metric is defined.
    PerClassMetrics macro;
    // Number of undefined entries among the 4*k per-class values.
    int undefined_count = 0;
    std::uint64_t total = 0;
};

// Throws std::invalid_argument when cm.total() == 0.
MetricsReport report(const ConfusionMatrix& cm);

// JSON document {overall_accuracy, per_class: {<label>: {sensitivity,
// specificity, precision, f1}}, macro: {...}, undefined_count, total}.
// Values are rounded to 6 decimal places; undefined serializes as null.
// labels.size() must equal the class count.
std::string report_to_json(const MetricsReport& rep, const std::vector<std::string>& labels);

// CSV with a header row/column of class labels; the top-left cell is
// "actual\predicted".
void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& cm,
                         const std::vector<std::string>& labels);
ConfusionMatrix read_confusion_csv(const std::filesystem::path& path,
                                   std::vector<std::string>* labels = nullptr);

} // namespace hemacv
