#include <doctest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "hemacv/dataset.hpp"
#include "hemacv/metrics.hpp"
#include "hemacv/rng.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace hemacv;

namespace {

ConfusionMatrix random_cm(SplitMix64& rng, int k = 5, std::uint64_t max_cell = 60) {
    ConfusionMatrix cm(k);
    for (int a = 0; a < k; ++a)
        for (int p = 0; p < k; ++p)
            cm.add(a, p, rng.next_below(max_cell + 1));
    return cm;
}

} // namespace

TEST_CASE("accumulate counts and merge equals concatenation") {
    ConfusionMatrix cm(5);
    cm.add(static_cast<int>(ClassLabel::myeloblast), static_cast<int>(ClassLabel::myeloblast));
    CHECK(cm.at(3, 3) == 1);
    CHECK(cm.total() == 1);
    CHECK(cm.trace() == 1);

    SplitMix64 rng(8);
    ConfusionMatrix a = random_cm(rng), b = random_cm(rng);
    ConfusionMatrix merged = a;
    merged.merge(b);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            CHECK(merged.at(i, j) == a.at(i, j) + b.at(i, j));

    ConfusionMatrix conserve(5);
    for (int i = 0; i < 750; ++i)
        conserve.add(i % 5, (i * 7) % 5);
    CHECK(conserve.total() == 750);

    CHECK_THROWS_AS(cm.add(5, 0), std::invalid_argument);
    CHECK_THROWS_AS(cm.add(0, -1), std::invalid_argument);
}

TEST_CASE("one_vs_rest matches hand counts and the relabeling oracle") {
    ConfusionMatrix diag(5);
    for (int c = 0; c < 5; ++c)
        diag.add(c, c, 10);
    for (int c = 0; c < 5; ++c) {
        const BinaryCounts b = one_vs_rest(diag, c);
        CHECK(b.fp == 0);
        CHECK(b.fn == 0);
        CHECK(b.tp == 10);
        CHECK(b.tn == 40);
    }

    ConfusionMatrix two(2);
    two.add(0, 0, 40);
    two.add(0, 1, 10);
    two.add(1, 0, 5);
    two.add(1, 1, 95);
    const BinaryCounts b = one_vs_rest(two, 0);
    CHECK(b.tp == 40);
    CHECK(b.fn == 10);
    CHECK(b.fp == 5);
    CHECK(b.tn == 95);

    // mirrored counts for the other class of a 2x2 matrix
    const BinaryCounts m = one_vs_rest(two, 1);
    CHECK(m.tp == b.tn);
    CHECK(m.tn == b.tp);
    CHECK(m.fp == b.fn);
    CHECK(m.fn == b.fp);

    SplitMix64 rng(77);
    for (int trial = 0; trial < 25; ++trial) {
        const ConfusionMatrix cm = random_cm(rng);
        for (int c = 0; c < 5; ++c) {
            const BinaryCounts got = one_vs_rest(cm, c);
            const oracles::BinaryTally want = oracles::tally_one_vs_rest(cm, c);
            CHECK(got.tp == want.tp);
            CHECK(got.fp == want.fp);
            CHECK(got.tn == want.tn);
            CHECK(got.fn == want.fn);
        }
    }
}

TEST_CASE("binary_metrics reproduces the worked example") {
    const BinaryMetrics m = binary_metrics({40, 5, 95, 10}); // tp, fp, tn, fn
    REQUIRE(m.accuracy.has_value());
    CHECK(*m.accuracy == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(*m.sensitivity == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(*m.specificity == doctest::Approx(0.95).epsilon(1e-12));
    CHECK(*m.precision == doctest::Approx(8.0 / 9.0).epsilon(1e-12));
    CHECK(*m.f1 == doctest::Approx(0.8421052631578948).epsilon(1e-12));
}

TEST_CASE("binary_metrics reports zero-denominator metrics as undefined") {
    const BinaryMetrics m = binary_metrics({0, 0, 100, 0}); // no positives anywhere
    CHECK_FALSE(m.sensitivity.has_value());
    CHECK_FALSE(m.precision.has_value());
    CHECK_FALSE(m.f1.has_value());
    CHECK(m.specificity.has_value());

    const BinaryMetrics perfect = binary_metrics({42, 0, 0, 0});
    CHECK(*perfect.accuracy == 1.0);
    CHECK(*perfect.sensitivity == 1.0);
    CHECK_FALSE(perfect.specificity.has_value()); // tn + fp == 0
    CHECK(*perfect.precision == 1.0);
    CHECK(*perfect.f1 == 1.0);
}

TEST_CASE("binary_metrics values stay in [0, 1]") {
    SplitMix64 rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const BinaryCounts b{rng.next_below(50), rng.next_below(50), rng.next_below(50),
                             rng.next_below(50)};
        if (b.total() == 0)
            continue;
        const BinaryMetrics m = binary_metrics(b);
        for (const auto& v : {m.accuracy, m.sensitivity, m.specificity, m.precision, m.f1}) {
            if (v) {
                CHECK(*v >= 0.0);
                CHECK(*v <= 1.0);
            }
        }
    }
}

TEST_CASE("report on a perfect diagonal matrix") {
    ConfusionMatrix cm(5);
    for (int c = 0; c < 5; ++c)
        cm.add(c, c, 150);
    const MetricsReport rep = report(cm);
    CHECK(rep.overall_accuracy == 1.0);
    CHECK(*rep.macro.sensitivity == 1.0);
    CHECK(*rep.macro.specificity == 1.0);
    CHECK(*rep.macro.precision == 1.0);
    CHECK(*rep.macro.f1 == 1.0);
    CHECK(rep.undefined_count == 0);
    CHECK(rep.total == 750);
}

TEST_CASE("report with five errors among 750 lands at 745/750") {
    ConfusionMatrix cm(5);
    for (int c = 0; c < 5; ++c)
        cm.add(c, c, c == 0 ? 145 : 150);
    cm.add(0, 1, 5);
    const MetricsReport rep = report(cm);
    CHECK(rep.overall_accuracy == doctest::Approx(745.0 / 750.0).epsilon(1e-12));
}

TEST_CASE("report agrees with the per-sample oracle on random matrices") {
    SplitMix64 rng(0xCAFE);
    for (int trial = 0; trial < 50; ++trial) {
        const ConfusionMatrix cm = random_cm(rng);
        if (cm.total() == 0)
            continue;
        const MetricsReport rep = report(cm);

        std::uint64_t correct = 0;
        for (int c = 0; c < 5; ++c)
            correct += cm.at(c, c);
        CHECK(rep.overall_accuracy ==
              doctest::Approx(static_cast<double>(correct) / cm.total()).epsilon(1e-12));

        for (int c = 0; c < 5; ++c) {
            const auto t = oracles::tally_one_vs_rest(cm, c);
            if (t.tp + t.fn > 0)
                CHECK(*rep.per_class[c].sensitivity ==
                      doctest::Approx(static_cast<double>(t.tp) / (t.tp + t.fn)).epsilon(1e-12));
            if (t.tn + t.fp > 0)
                CHECK(*rep.per_class[c].specificity ==
                      doctest::Approx(static_cast<double>(t.tn) / (t.tn + t.fp)).epsilon(1e-12));
            if (t.tp + t.fp > 0)
                CHECK(*rep.per_class[c].precision ==
                      doctest::Approx(static_cast<double>(t.tp) / (t.tp + t.fp)).epsilon(1e-12));
        }
    }
}

TEST_CASE("overall accuracy equals support-weighted mean one-vs-rest recall") {
    SplitMix64 rng(0xDEAD);
    for (int trial = 0; trial < 20; ++trial) {
        const ConfusionMatrix cm = random_cm(rng);
        if (cm.total() == 0)
            continue;
        double weighted = 0.0;
        for (int c = 0; c < 5; ++c) {
            const auto b = one_vs_rest(cm, c);
            if (b.tp + b.fn > 0)
                weighted += (static_cast<double>(b.tp) / (b.tp + b.fn)) *
                            (static_cast<double>(b.tp + b.fn) / cm.total());
        }
        CHECK(report(cm).overall_accuracy == doctest::Approx(weighted).epsilon(1e-9));
    }
}

TEST_CASE("permuting class order permutes per-class metrics and keeps accuracy") {
    SplitMix64 rng(0x77);
    const ConfusionMatrix cm = random_cm(rng);
    const int perm[5] = {3, 0, 4, 1, 2};
    ConfusionMatrix permuted(5);
    for (int a = 0; a < 5; ++a)
        for (int p = 0; p < 5; ++p)
            permuted.add(perm[a], perm[p], cm.at(a, p));

    const MetricsReport r1 = report(cm);
    const MetricsReport r2 = report(permuted);
    CHECK(r1.overall_accuracy == r2.overall_accuracy);
    for (int c = 0; c < 5; ++c) {
        CHECK(r1.per_class[c].sensitivity == r2.per_class[perm[c]].sensitivity);
        CHECK(r1.per_class[c].precision == r2.per_class[perm[c]].precision);
        CHECK(r1.per_class[c].specificity == r2.per_class[perm[c]].specificity);
        CHECK(r1.per_class[c].f1 == r2.per_class[perm[c]].f1);
    }
}

TEST_CASE("report rejects an empty matrix") {
    CHECK_THROWS_AS(static_cast<void>(report(ConfusionMatrix(3))), std::invalid_argument);
}

TEST_CASE("report JSON schema, rounding, and null for undefined") {
    ConfusionMatrix cm(2);
    cm.add(0, 0, 40);
    cm.add(0, 1, 10);
    cm.add(1, 0, 5);
    cm.add(1, 1, 95);
    const std::string doc = report_to_json(report(cm), {"neg", "pos"});
    const auto j = nlohmann::json::parse(doc);
    CHECK(j["overall_accuracy"] == doctest::Approx(0.9));
    CHECK(j["per_class"]["neg"]["sensitivity"] == doctest::Approx(0.8));
    CHECK(j["per_class"]["neg"]["precision"] == doctest::Approx(0.888889));
    CHECK(j["per_class"]["neg"]["f1"] == doctest::Approx(0.842105));
    CHECK(j["total"] == 150);
    CHECK(j["undefined_count"] == 0);
    CHECK(j.contains("macro"));

    // all-mass-on-one-class: the absent class has undefined sensitivity etc.
    ConfusionMatrix lop(2);
    lop.add(0, 0, 10);
    const auto j2 = nlohmann::json::parse(report_to_json(report(lop), {"a", "b"}));
    CHECK(j2["per_class"]["b"]["sensitivity"].is_null());
    CHECK(j2["undefined_count"].get<int>() > 0);
}

TEST_CASE("confusion CSV round-trips with labels") {
    helpers::TempDir tmp("cmcsv");
    SplitMix64 rng(12);
    const ConfusionMatrix cm = random_cm(rng);
    const auto path = tmp.path() / "cm.csv";
    write_confusion_csv(path, cm, class_names());

    std::vector<std::string> labels;
    const ConfusionMatrix back = read_confusion_csv(path, &labels);
    CHECK(back == cm);
    CHECK(labels == class_names());

    const std::string text = helpers::read_file(path);
    CHECK(text.rfind("actual\\predicted,basophil,", 0) == 0);
}
