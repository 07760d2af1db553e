#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "hmmfuse/error.hpp"
#include "hmmfuse/metrics.hpp"
#include "hmmfuse/report.hpp"

using namespace hmmfuse;
using doctest::Approx;

TEST_CASE("metrics_from_counts basic arithmetic") {
    Prf m = metrics_from_counts({5, 5, 0, 10});
    CHECK(m.precision == Approx(0.5));
    CHECK(m.recall == Approx(1.0));
    CHECK(m.f == Approx(2.0 / 3.0));
}

TEST_CASE("harmonic mean reproduces a published accuracy row") {
    ConfusionCounts counts;
    counts.tp = 8015;
    counts.fp = 10000 - 8015;  // precision 0.8015
    counts.fn = 238;           // recall 8015/8253 ~ 0.97116
    Prf m = metrics_from_counts(counts);
    CHECK(m.precision == Approx(0.8015).epsilon(1e-12));
    CHECK(std::fabs(m.recall - 0.9712) < 5e-5);
    CHECK(std::fabs(m.f - 0.8782) < 1e-4);
}

TEST_CASE("zero-division policy returns zeros") {
    Prf m = metrics_from_counts({0, 0, 0, 0});
    CHECK(m.precision == 0.0);
    CHECK(m.recall == 0.0);
    CHECK(m.f == 0.0);
}

TEST_CASE("point_to_metrics reconstructs integer counts") {
    Prf m = point_to_metrics(0.1, 0.8, 100, 900);
    CHECK(m.precision == Approx(80.0 / 170.0).epsilon(1e-12));
    CHECK(m.recall == Approx(0.8).epsilon(1e-12));
    CHECK(m.f == Approx(0.592592592592).epsilon(1e-9));

    Prf perfect = point_to_metrics(0.0, 1.0, 17, 400);
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.f == 1.0);

    Prf all_positive = point_to_metrics(1.0, 1.0, 50, 50);
    CHECK(all_positive.precision == Approx(0.5));
    CHECK(all_positive.recall == Approx(1.0));
    CHECK(all_positive.f == Approx(2.0 / 3.0));
}

TEST_CASE("best_f_point picks the maximum-F operating point") {
    SUBCASE("perfect curve") {
        RocCurve curve = curve_from_points({{0, 1, 1.0}});
        BestFPoint best = best_f_point(curve, 10, 10);
        CHECK(best.point.fpr == 0.0);
        CHECK(best.point.tpr == 1.0);
        CHECK(best.metrics.f == 1.0);
    }
    SUBCASE("degenerate two-point curve settles for all-positive") {
        RocCurve curve = curve_from_points({});
        REQUIRE(curve.points.size() == 2);
        BestFPoint best = best_f_point(curve, 10, 10);
        CHECK(best.point.fpr == 1.0);
        CHECK(best.point.tpr == 1.0);
        CHECK(best.metrics.f == Approx(2.0 / 3.0));
    }
    SUBCASE("four-sample staircase, balanced classes") {
        std::vector<double> scores{0.9, 0.4, 0.6, 0.1};
        std::vector<std::uint8_t> labels{1, 1, 0, 0};
        BestFPoint best = best_f_point(roc_curve(scores, labels), 2, 2);
        CHECK(best.point.fpr == Approx(0.5));
        CHECK(best.point.tpr == Approx(1.0));
        CHECK(best.metrics.f == Approx(0.8));
    }
}

TEST_CASE("best_f_point equals the exhaustive maximum") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed * 131);
        std::size_t n = 10 + rng.next_below(40);
        std::vector<double> scores(n);
        std::vector<std::uint8_t> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = rng.next_double();
            labels[i] = rng.next_below(2) ? 1 : 0;
        }
        labels[0] = 1;
        labels[1] = 0;
        long long n_pos = 0, n_neg = 0;
        for (auto l : labels) (l ? n_pos : n_neg) += 1;
        RocCurve curve = roc_curve(scores, labels);
        BestFPoint best = best_f_point(curve, n_pos, n_neg);
        double brute = 0;
        for (const auto& p : curve.points)
            brute = std::max(brute, point_to_metrics(p.fpr, p.tpr, n_pos, n_neg).f);
        CHECK(best.metrics.f == Approx(brute).epsilon(1e-15));
    }
}

TEST_CASE("mtfpr improvement reproduces the published assignee example") {
    // Ensemble reaches tpr 0.32 and the single model 0.26 within fpr <= 0.12.
    RocCurve ensemble = curve_from_points({{0.10, 0.32, 0}, {0.5, 0.8, 1}});
    RocCurve single = curve_from_points({{0.12, 0.26, 0}, {0.6, 0.7, 1}});
    MtfprImprovement result = mtfpr_improvement(ensemble, single, 0.12);
    CHECK(result.tpr_ensemble == Approx(0.32));
    CHECK(result.tpr_single == Approx(0.26));
    REQUIRE(result.improvement.has_value());
    CHECK(std::fabs(*result.improvement - 0.2308) < 5e-5);
}

TEST_CASE("mtfpr improvement edge policies") {
    RocCurve same = curve_from_points({{0.05, 0.4, 0}});
    MtfprImprovement equal = mtfpr_improvement(same, same, 0.1);
    REQUIRE(equal.improvement.has_value());
    CHECK(*equal.improvement == 0.0);

    RocCurve useless = curve_from_points({{0.9, 0.95, 0}});  // nothing under the budget
    MtfprImprovement none = mtfpr_improvement(same, useless, 0.1);
    CHECK(none.tpr_single == 0.0);
    CHECK_FALSE(none.improvement.has_value());  // reported as n/a
}

TEST_CASE("mtfpr tpr is monotone in the fpr budget") {
    Rng rng(12);
    std::vector<double> scores(30);
    std::vector<std::uint8_t> labels(30);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        scores[i] = rng.next_double();
        labels[i] = rng.next_below(2) ? 1 : 0;
    }
    labels[0] = 1;
    labels[1] = 0;
    RocCurve curve = roc_curve(scores, labels);
    double prev = -1;
    for (double budget = 0.0; budget <= 1.0; budget += 0.05) {
        MtfprImprovement r = mtfpr_improvement(curve, curve, budget);
        CHECK(r.tpr_ensemble >= prev);
        prev = r.tpr_ensemble;
    }
}

TEST_CASE("emit_report writes json, summary csv, and per-field roc csv") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "hmmfuse_report_test";
    fs::remove_all(dir);

    std::vector<FieldReport> reports;
    for (const char* field :
         {"assignee", "product", "component", "version", "os", "priority", "severity"}) {
        FieldReport r;
        r.field = field;
        r.method = "wpibc";
        r.auc = 0.91234567;
        r.best_fpr = 0.1;
        r.best_tpr = 0.8;
        r.best_rule = 3;
        r.best_metrics = point_to_metrics(0.1, 0.8, 100, 900);
        r.mtfpr = 0.1;
        r.tpr_ensemble = 0.5;
        r.tpr_single = 0.4;
        r.improvement = 0.25;
        r.roc = curve_from_points({{0.1, 0.8, 0}});
        reports.push_back(std::move(r));
    }
    reports[2].improvement.reset();  // "n/a" row

    emit_report(reports, dir.string());
    CHECK(fs::exists(dir / "report.json"));
    CHECK(fs::exists(dir / "summary.csv"));
    // one ROC csv per field
    for (const auto& r : reports) CHECK(fs::exists(dir / ("roc_" + r.field + ".csv")));

    std::ifstream csv(dir / "summary.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header ==
          "field,method,auc,precision,recall,f_measure,mtfpr,tpr_ensemble,tpr_single,improvement");
    std::string row;
    std::getline(csv, row);
    CHECK(row == "assignee,wpibc,0.9123,0.4706,0.8000,0.5926,0.1000,0.5000,0.4000,0.2500");
    std::getline(csv, row);
    std::getline(csv, row);
    CHECK(row.find("n/a") != std::string::npos);
    int remaining = 0;
    while (std::getline(csv, row))
        if (!row.empty()) ++remaining;
    CHECK(remaining == 4);  // 7 field rows total, 3 consumed above

    // Every emitted row keeps F consistent with its own precision and recall.
    for (const auto& r : reports) {
        double f = 2 * r.best_metrics.precision * r.best_metrics.recall /
                   (r.best_metrics.precision + r.best_metrics.recall);
        CHECK(r.best_metrics.f == Approx(f).epsilon(1e-9));
    }
    fs::remove_all(dir);
}

TEST_CASE("emit_report refuses an empty report and an unwritable target") {
    CHECK_THROWS_AS(emit_report({}, "/tmp/hmmfuse_empty"), DataError);
    FieldReport r;
    r.field = "x";
    r.method = "ibc";
    r.roc = curve_from_points({});
    CHECK_THROWS_AS(emit_report({r}, "/proc/hmmfuse_nowrite"), IoError);
}
