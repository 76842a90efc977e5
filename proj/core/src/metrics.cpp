#include "hemacv/metrics.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace hemacv {

ConfusionMatrix::ConfusionMatrix(int k) : k_(k) {
    if (k < 1)
        throw std::invalid_argument("ConfusionMatrix: class count must be at least 1");
    counts_.assign(static_cast<std::size_t>(k) * k, 0);
}

void ConfusionMatrix::check_label(int label) const {
    if (label < 0 || label >= k_)
        throw std::invalid_argument("ConfusionMatrix: label " + std::to_string(label) +
                                    " out of range [0, " + std::to_string(k_) + ")");
}

std::uint64_t ConfusionMatrix::at(int actual, int predicted) const {
    check_label(actual);
    check_label(predicted);
    return counts_[static_cast<std::size_t>(actual) * k_ + predicted];
}

void ConfusionMatrix::add(int actual, int predicted, std::uint64_t count) {
    check_label(actual);
    check_label(predicted);
    counts_[static_cast<std::size_t>(actual) * k_ + predicted] += count;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
    if (other.k_ != k_)
        throw std::invalid_argument("ConfusionMatrix::merge: class counts differ");
    for (std::size_t i = 0; i < counts_.size(); ++i)
        counts_[i] += other.counts_[i];
}

std::uint64_t ConfusionMatrix::total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::trace() const {
    std::uint64_t t = 0;
    for (int i = 0; i < k_; ++i)
        t += counts_[static_cast<std::size_t>(i) * k_ + i];
    return t;
}

std::uint64_t ConfusionMatrix::row_total(int actual) const {
    check_label(actual);
    std::uint64_t t = 0;
    for (int j = 0; j < k_; ++j)
        t += counts_[static_cast<std::size_t>(actual) * k_ + j];
    return t;
}

std::uint64_t ConfusionMatrix::col_total(int predicted) const {
    check_label(predicted);
    std::uint64_t t = 0;
    for (int i = 0; i < k_; ++i)
        t += counts_[static_cast<std::size_t>(i) * k_ + predicted];
    return t;
}

BinaryCounts one_vs_rest(const ConfusionMatrix& cm, int c) {
    BinaryCounts b;
    b.tp = cm.at(c, c);
    b.fn = cm.row_total(c) - b.tp;
    b.fp = cm.col_total(c) - b.tp;
    b.tn = cm.total() - b.tp - b.fp - b.fn;
    return b;
}

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0)
        return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

BinaryMetrics binary_metrics(const BinaryCounts& b) {
    BinaryMetrics m;
    m.accuracy = ratio(b.tp + b.tn, b.total());
    m.sensitivity = ratio(b.tp, b.tp + b.fn);
    m.specificity = ratio(b.tn, b.tn + b.fp);
    m.precision = ratio(b.tp, b.tp + b.fp);
    if (m.precision && m.sensitivity && (*m.precision + *m.sensitivity) > 0.0)
        m.f1 = 2.0 * *m.precision * *m.sensitivity / (*m.precision + *m.sensitivity);
    return m;
}

MetricsReport report(const ConfusionMatrix& cm) {
    const std::uint64_t total = cm.total();
    if (total == 0)
        throw std::invalid_argument("report: empty confusion matrix");

    MetricsReport rep;
    rep.total = total;
    rep.overall_accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);

    struct Acc {
        double sum = 0.0;
        int n = 0;
        void feed(const std::optional<double>& v) {
            if (v) {
                sum += *v;
                ++n;
            }
        }
        std::optional<double> mean() const {
            if (n == 0)
                return std::nullopt;
            return sum / n;
        }
    };
    Acc sens, spec, prec, f1;

    for (int c = 0; c < cm.k(); ++c) {
        const BinaryMetrics m = binary_metrics(one_vs_rest(cm, c));
        rep.per_class.push_back({m.sensitivity, m.specificity, m.precision, m.f1});
        sens.feed(m.sensitivity);
        spec.feed(m.specificity);
        prec.feed(m.precision);
        f1.feed(m.f1);
        rep.undefined_count += !m.sensitivity + !m.specificity + !m.precision + !m.f1;
    }
    rep.macro = {sens.mean(), spec.mean(), prec.mean(), f1.mean()};
    return rep;
}

namespace {

nlohmann::json metric_json(const std::optional<double>& v) {
    if (!v)
        return nullptr;
    return std::round(*v * 1e6) / 1e6;
}

nlohmann::json per_class_json(const PerClassMetrics& m) {
    return {{"sensitivity", metric_json(m.sensitivity)},
            {"specificity", metric_json(m.specificity)},
            {"precision", metric_json(m.precision)},
            {"f1", metric_json(m.f1)}};
}

} // namespace

std::string report_to_json(const MetricsReport& rep, const std::vector<std::string>& labels) {
    if (labels.size() != rep.per_class.size())
        throw std::invalid_argument("report_to_json: label count mismatch");
    nlohmann::json j;
    j["overall_accuracy"] = std::round(rep.overall_accuracy * 1e6) / 1e6;
    nlohmann::json pc = nlohmann::json::object();
    for (std::size_t c = 0; c < labels.size(); ++c)
        pc[labels[c]] = per_class_json(rep.per_class[c]);
    j["per_class"] = pc;
    j["macro"] = per_class_json(rep.macro);
    j["undefined_count"] = rep.undefined_count;
    j["total"] = rep.total;
    return j.dump(2) + "\n";
}

void write_confusion_csv(const std::filesystem::path& path, const ConfusionMatrix& cm,
                         const std::vector<std::string>& labels) {
    if (static_cast<int>(labels.size()) != cm.k())
        throw std::invalid_argument("write_confusion_csv: label count mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << "actual\\predicted";
    for (const auto& l : labels)
        out << ',' << l;
    out << '\n';
    for (int i = 0; i < cm.k(); ++i) {
        out << labels[i];
        for (int j = 0; j < cm.k(); ++j)
            out << ',' << cm.at(i, j);
        out << '\n';
    }
    if (!out)
        throw std::runtime_error("failed writing " + path.string());
}

ConfusionMatrix read_confusion_csv(const std::filesystem::path& path,
                                   std::vector<std::string>* labels) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());

    auto split_row = [](const std::string& line) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        return cells;
    };

    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("empty confusion CSV: " + path.string());
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    const auto header = split_row(line);
    if (header.size() < 2)
        throw std::runtime_error("bad confusion CSV header in " + path.string());
    const int k = static_cast<int>(header.size()) - 1;
    if (labels)
        labels->assign(header.begin() + 1, header.end());

    ConfusionMatrix cm(k);
    for (int i = 0; i < k; ++i) {
        if (!std::getline(in, line))
            throw std::runtime_error("truncated confusion CSV: " + path.string());
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        const auto cells = split_row(line);
        if (static_cast<int>(cells.size()) != k + 1)
            throw std::runtime_error("bad confusion CSV row in " + path.string());
        if (cells[0] != header[i + 1])
            throw std::runtime_error("confusion CSV row/column label mismatch in " +
                                     path.string());
        for (int j = 0; j < k; ++j)
            cm.add(i, j, std::stoull(cells[j + 1]));
    }
    return cm;
}

} // namespace hemacv
