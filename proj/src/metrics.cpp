#include "hmmfuse/metrics.hpp"

#include <cmath>

#include "hmmfuse/error.hpp"

namespace hmmfuse {

Prf metrics_from_counts(const ConfusionCounts& counts) {
    Prf out;
    const double tp = static_cast<double>(counts.tp);
    if (counts.tp + counts.fp > 0) out.precision = tp / static_cast<double>(counts.tp + counts.fp);
    if (counts.tp + counts.fn > 0) out.recall = tp / static_cast<double>(counts.tp + counts.fn);
    if (out.precision + out.recall > 0)
        out.f = 2.0 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

Prf point_to_metrics(double fpr, double tpr, long long n_pos, long long n_neg) {
    if (n_pos < 1 || n_neg < 1) throw DataError("need at least one sample of each class");
    ConfusionCounts counts;
    counts.tp = std::llround(tpr * static_cast<double>(n_pos));
    counts.fp = std::llround(fpr * static_cast<double>(n_neg));
    counts.fn = n_pos - counts.tp;
    counts.tn = n_neg - counts.fp;
    return metrics_from_counts(counts);
}

BestFPoint best_f_point(const RocCurve& curve, long long n_pos, long long n_neg) {
    if (curve.points.empty()) throw DataError("empty ROC curve");
    BestFPoint best;
    bool have = false;
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const auto& p = curve.points[i];
        Prf m = point_to_metrics(p.fpr, p.tpr, n_pos, n_neg);
        // Points are swept in (fpr, tpr) order, so strict improvement keeps
        // the lowest-fpr, lowest-tpr point among F ties.
        if (!have || m.f > best.metrics.f) {
            best = {p, i, m};
            have = true;
        }
    }
    return best;
}

MtfprImprovement mtfpr_improvement(const RocCurve& ensemble, const RocCurve& single,
                                   double max_tolerable_fpr) {
    if (max_tolerable_fpr < 0 || max_tolerable_fpr > 1)
        throw DataError("maximum tolerable fpr must be in [0, 1]");
    auto best_tpr_within = [max_tolerable_fpr](const RocCurve& curve) {
        double best = 0;
        for (const auto& p : curve.points)
            if (p.fpr <= max_tolerable_fpr && p.tpr > best) best = p.tpr;
        return best;
    };
    MtfprImprovement out;
    out.tpr_ensemble = best_tpr_within(ensemble);
    out.tpr_single = best_tpr_within(single);
    if (out.tpr_single > 0)
        out.improvement = (out.tpr_ensemble - out.tpr_single) / out.tpr_single;
    return out;
}

}  // namespace hmmfuse
