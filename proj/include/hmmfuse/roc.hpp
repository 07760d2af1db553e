#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hmmfuse {

// Scores over a labeled dataset; labels[i] != 0 means the positive class
// (field reassigned). Scores are already oriented when used for fusion.
struct ScoreSet {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
};

struct RocPoint {
    double fpr = 0;
    double tpr = 0;
    double threshold = 0;  // decision is score >= threshold; +inf = all-negative
};

// Threshold-swept staircase, ascending in (fpr, tpr); always starts at (0,0)
// and ends at (1,1).
struct RocCurve {
    std::vector<RocPoint> points;
};

// Sweeps thresholds over {+inf} followed by the unique scores in descending
// order. Throws SingleClassValidation unless both classes are present.
RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Builds a valid staircase from arbitrary operating points, adding (0,0) and
// (1,1) when missing. Used for composite curves whose points come from
// combination rules rather than thresholds.
RocCurve curve_from_points(std::vector<RocPoint> points);

// Trapezoidal area; equals the Mann-Whitney statistic of the generating
// scores with ties counted 1/2.
double auc(const RocCurve& curve);

double auc_from_scores(std::span<const double> scores, std::span<const std::uint8_t> labels);

// +1 if the raw scores already rank positives above negatives (AUC >= 0.5),
// otherwise -1. Oriented score = orientation * raw score, which makes
// "higher score => more likely positive" hold for both model families.
int detect_orientation(std::span<const double> raw_scores, std::span<const std::uint8_t> labels);

void write_roc_csv(const RocCurve& curve, const std::string& path);

}  // namespace hmmfuse
