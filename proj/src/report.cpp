#include "hmmfuse/report.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hmmfuse/error.hpp"
#include "hmmfuse/io.hpp"

namespace hmmfuse {

namespace fs = std::filesystem;

FieldReport report_from_evaluation(const FieldEvaluation& eval) {
    FieldReport report;
    report.field = eval.field;
    report.method = eval.method;
    report.auc = eval.ensemble_auc;
    report.best_fpr = eval.best.point.fpr;
    report.best_tpr = eval.best.point.tpr;
    report.best_rule = eval.best_rule;
    report.best_metrics = eval.best.metrics;
    report.mtfpr = eval.mtfpr;
    report.tpr_ensemble = eval.improvement.tpr_ensemble;
    report.tpr_single = eval.improvement.tpr_single;
    report.improvement = eval.improvement.improvement;
    report.best_single_ref = eval.best_single_ref;
    report.best_single_auc = eval.best_single_auc;
    report.roc = eval.ensemble_curve;
    return report;
}

namespace {

std::string fixed4(double v) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(4);
    out << v;
    return out.str();
}

}  // namespace

void emit_report(const std::vector<FieldReport>& reports, const std::string& out_dir) {
    if (reports.empty()) throw DataError("nothing to report");
    std::error_code ec;
    fs::create_directories(out_dir, ec);

    nlohmann::json j;
    j["format_version"] = 1;
    nlohmann::json fields = nlohmann::json::array();
    std::ostringstream csv;
    csv << "field,method,auc,precision,recall,f_measure,mtfpr,tpr_ensemble,tpr_single,improvement\n";

    for (const auto& report : reports) {
        nlohmann::json f;
        f["field"] = report.field;
        f["method"] = report.method;
        f["auc"] = report.auc;
        f["best"] = {{"fpr", report.best_fpr},
                     {"tpr", report.best_tpr},
                     {"rule", report.best_rule},
                     {"precision", report.best_metrics.precision},
                     {"recall", report.best_metrics.recall},
                     {"f_measure", report.best_metrics.f}};
        f["mtfpr"] = {{"max_tolerable_fpr", report.mtfpr},
                      {"tpr_ensemble", report.tpr_ensemble},
                      {"tpr_single", report.tpr_single}};
        if (report.improvement)
            f["mtfpr"]["improvement"] = *report.improvement;
        else
            f["mtfpr"]["improvement"] = "n/a";
        f["best_single"] = {{"model", report.best_single_ref}, {"auc", report.best_single_auc}};
        fields.push_back(std::move(f));

        csv << report.field << ',' << report.method << ',' << fixed4(report.auc) << ','
            << fixed4(report.best_metrics.precision) << ',' << fixed4(report.best_metrics.recall)
            << ',' << fixed4(report.best_metrics.f) << ',' << fixed4(report.mtfpr) << ','
            << fixed4(report.tpr_ensemble) << ',' << fixed4(report.tpr_single) << ','
            << (report.improvement ? fixed4(*report.improvement) : std::string("n/a")) << '\n';
    }
    j["fields"] = std::move(fields);

    write_file_atomic((fs::path(out_dir) / "report.json").string(), j.dump(2) + "\n");
    write_file_atomic((fs::path(out_dir) / "summary.csv").string(), csv.str());
    for (const auto& report : reports)
        write_roc_csv(report.roc, (fs::path(out_dir) / ("roc_" + report.field + ".csv")).string());
}

}  // namespace hmmfuse
