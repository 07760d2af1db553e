#include "hmmfuse/roc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hmmfuse/error.hpp"
#include "hmmfuse/io.hpp"

namespace hmmfuse {

namespace {

void check_two_classes(std::span<const std::uint8_t> labels) {
    bool has_pos = false, has_neg = false;
    for (std::uint8_t l : labels) (l ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg)
        throw SingleClassValidation("need both classes to build a ROC curve");
}

}  // namespace

RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw LengthMismatch("scores/labels size mismatch");
    if (scores.empty()) throw SingleClassValidation("empty score set");
    check_two_classes(labels);

    long long n_pos = 0, n_neg = 0;
    for (std::uint8_t l : labels) (l ? n_pos : n_neg) += 1;

    std::vector<std::size_t> order(scores.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    long long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        // All samples tied at one score flip together.
        double threshold = scores[order[i]];
        for (; i < order.size() && scores[order[i]] == threshold; ++i)
            (labels[order[i]] ? tp : fp) += 1;
        curve.points.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                                static_cast<double>(tp) / static_cast<double>(n_pos), threshold});
    }
    return curve;
}

RocCurve curve_from_points(std::vector<RocPoint> points) {
    std::stable_sort(points.begin(), points.end(), [](const RocPoint& a, const RocPoint& b) {
        if (a.fpr != b.fpr) return a.fpr < b.fpr;
        return a.tpr < b.tpr;
    });
    // Points from rule replay are arbitrary operating points; keep the
    // dominating staircase so the curve stays monotone.
    RocCurve curve;
    curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    double best_tpr = 0.0;
    for (const auto& p : points) {
        if (p.tpr > best_tpr || (p.fpr == 0.0 && p.tpr == 0.0)) {
            if (p.fpr == 0.0 && p.tpr == 0.0)
                curve.points.front() = p;  // keep the caller's threshold tag
            else
                curve.points.push_back(p);
            best_tpr = std::max(best_tpr, p.tpr);
        }
    }
    const auto& back = curve.points.back();
    if (back.fpr != 1.0 || back.tpr != 1.0)
        curve.points.push_back({1.0, 1.0, -std::numeric_limits<double>::infinity()});
    return curve;
}

double auc(const RocCurve& curve) {
    double area = 0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    return area;
}

double auc_from_scores(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    return auc(roc_curve(scores, labels));
}

int detect_orientation(std::span<const double> raw_scores, std::span<const std::uint8_t> labels) {
    return auc_from_scores(raw_scores, labels) < 0.5 ? -1 : +1;
}

void write_roc_csv(const RocCurve& curve, const std::string& path) {
    std::ostringstream out;
    out << "fpr,tpr,threshold\n";
    out.precision(17);
    for (const auto& p : curve.points) {
        out << p.fpr << ',' << p.tpr << ',';
        if (std::isinf(p.threshold))
            out << (p.threshold > 0 ? "inf" : "-inf");
        else
            out << p.threshold;
        out << '\n';
    }
    write_file_atomic(path, out.str());
}

}  // namespace hmmfuse
