#pragma once

#include <cstdint>
#include <optional>

#include "hmmfuse/roc.hpp"

namespace hmmfuse {

struct ConfusionCounts {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
    long long tn = 0;
};

struct Prf {
    double precision = 0;
    double recall = 0;
    double f = 0;
};

// Precision/recall/F1. Ratios with an empty denominator are defined as 0
// instead of NaN.
Prf metrics_from_counts(const ConfusionCounts& counts);

// Reconstructs integer counts from a ROC point by rounding tpr*n_pos and
// fpr*n_neg to the nearest integer, then computes the metrics.
Prf point_to_metrics(double fpr, double tpr, long long n_pos, long long n_neg);

struct BestFPoint {
    RocPoint point;
    std::size_t index = 0;  // into curve.points
    Prf metrics;
};

// The curve point with the highest F-measure; ties go to the lower fpr, then
// the lower tpr.
BestFPoint best_f_point(const RocCurve& curve, long long n_pos, long long n_neg);

struct MtfprImprovement {
    double tpr_ensemble = 0;
    double tpr_single = 0;
    // Relative gain over the single detector; empty when the single detector
    // reaches no true positives under the fpr budget ("n/a" in reports).
    std::optional<double> improvement;
};

// Best tpr each curve reaches while keeping fpr <= max_tolerable_fpr.
MtfprImprovement mtfpr_improvement(const RocCurve& ensemble, const RocCurve& single,
                                   double max_tolerable_fpr);

}  // namespace hmmfuse
