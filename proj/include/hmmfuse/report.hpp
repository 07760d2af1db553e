#pragma once

#include <string>
#include <vector>

#include "hmmfuse/pipeline.hpp"

namespace hmmfuse {

struct FieldReport {
    std::string field;
    std::string method;
    double auc = 0;
    double best_fpr = 0;
    double best_tpr = 0;
    int best_rule = -1;
    Prf best_metrics;
    double mtfpr = 0;
    double tpr_ensemble = 0;
    double tpr_single = 0;
    std::optional<double> improvement;  // empty => "n/a"
    std::string best_single_ref;
    double best_single_auc = 0;
    RocCurve roc;  // ensemble test curve, exported per field
};

FieldReport report_from_evaluation(const FieldEvaluation& eval);

// Writes report.json (full precision), summary.csv (4 decimals, one row per
// field) and roc_<field>.csv into out_dir.
void emit_report(const std::vector<FieldReport>& reports, const std::string& out_dir);

}  // namespace hmmfuse
