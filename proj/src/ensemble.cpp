#include "hmmfuse/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "hmmfuse/error.hpp"
#include "hmmfuse/io.hpp"
#include "hmmfuse/kappa.hpp"

namespace hmmfuse {

std::vector<int> wpibc_select_base(const std::vector<std::vector<double>>& scores_per_detector,
                                   std::span<const std::uint8_t> labels, double tau,
                                   int kappa_bins) {
    if (scores_per_detector.empty()) throw TooFewDetectors("no detectors to select from");

    std::vector<double> aucs;
    aucs.reserve(scores_per_detector.size());
    for (const auto& scores : scores_per_detector) aucs.push_back(auc_from_scores(scores, labels));

    std::vector<int> remaining(scores_per_detector.size());
    for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = static_cast<int>(i);

    std::vector<int> bases;
    while (!remaining.empty()) {
        int best = remaining.front();
        for (int idx : remaining)
            if (aucs[idx] > aucs[best]) best = idx;  // ties keep the earliest index
        bases.push_back(best);

        std::vector<int> keep;
        keep.reserve(remaining.size());
        for (int idx : remaining) {
            if (idx == best) continue;
            double agreement =
                weighted_kappa(scores_per_detector[best], scores_per_detector[idx], kappa_bins);
            if (agreement < tau) keep.push_back(idx);
        }
        remaining = std::move(keep);
    }
    return bases;
}

std::vector<double> wpibc_select_crisp(std::span<const double> base_scores,
                                       std::span<const std::uint8_t> labels, int select_count) {
    if (select_count < 2 || select_count % 2 != 0)
        throw DataError("crisp selection count must be even and >= 2");

    std::vector<double> thresholds = candidate_thresholds(base_scores);

    struct Ranked {
        double threshold;
        double kappa;
    };
    std::vector<Ranked> ranked;
    ranked.reserve(thresholds.size());
    for (double threshold : thresholds) {
        std::vector<std::uint8_t> decisions(base_scores.size());
        for (std::size_t i = 0; i < base_scores.size(); ++i)
            decisions[i] = base_scores[i] >= threshold ? 1 : 0;
        ranked.push_back({threshold, cohen_kappa(decisions, labels)});
    }
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.kappa != b.kappa) return a.kappa > b.kappa;
        return a.threshold < b.threshold;
    });

    std::vector<double> selected;
    if (ranked.size() <= static_cast<std::size_t>(select_count)) {
        for (const auto& r : ranked) selected.push_back(r.threshold);
        return selected;
    }
    const std::size_t half = static_cast<std::size_t>(select_count) / 2;
    for (std::size_t i = 0; i < half; ++i) selected.push_back(ranked[i].threshold);
    for (std::size_t i = ranked.size() - half; i < ranked.size(); ++i)
        selected.push_back(ranked[i].threshold);
    return selected;
}

WpibcResult wpibc_build(const std::vector<std::vector<double>>& scores_per_detector,
                        std::span<const std::uint8_t> labels, const WpibcConfig& config) {
    WpibcResult result;
    result.base_indices =
        wpibc_select_base(scores_per_detector, labels, config.tau, config.kappa_bins);

    std::vector<std::vector<double>> base_scores;
    std::vector<std::vector<double>> combo_thresholds;
    base_scores.reserve(result.base_indices.size());
    combo_thresholds.reserve(result.base_indices.size());
    for (int idx : result.base_indices) {
        base_scores.push_back(scores_per_detector[idx]);
        combo_thresholds.push_back(
            wpibc_select_crisp(scores_per_detector[idx], labels, config.select_per_base));
        result.selected_crisp += combo_thresholds.back().size();
    }

    result.composite = ibc_combine(base_scores, labels, combo_thresholds, config.ibc);
    return result;
}

EnsembleDecision ensemble_predict(const EnsembleModel& ensemble,
                                  std::span<const double> base_scores) {
    if (ensemble.operating_rule < 0 ||
        static_cast<std::size_t>(ensemble.operating_rule) >= ensemble.rules.size())
        throw DataError("ensemble has no operating rule");
    if (base_scores.size() != ensemble.bases.size())
        throw MissingDetectorScore("expected " + std::to_string(ensemble.bases.size()) +
                                   " base scores, got " + std::to_string(base_scores.size()));
    EnsembleDecision out;
    out.decision = evaluate_rule_single(ensemble.rules[ensemble.operating_rule], base_scores,
                                        &out.rule_trace);
    return out;
}

namespace {

nlohmann::json threshold_to_json(double threshold) {
    if (std::isinf(threshold)) return threshold > 0 ? "inf" : "-inf";
    return threshold;
}

double threshold_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto& s = j.get_ref<const std::string&>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw IoError("bad threshold value: " + s);
    }
    return j.get<double>();
}

nlohmann::json rule_to_json(const CombinationRule& rule) {
    nlohmann::json steps = nlohmann::json::array();
    steps.push_back({{"detector", rule.lead.detector}, {"threshold", threshold_to_json(rule.lead.threshold)}});
    for (const auto& step : rule.steps)
        steps.push_back({{"op", to_string(step.op)},
                         {"detector", step.ref.detector},
                         {"threshold", threshold_to_json(step.ref.threshold)}});
    return {{"steps", std::move(steps)}, {"fpr", rule.fpr}, {"tpr", rule.tpr}};
}

CombinationRule rule_from_json(const nlohmann::json& j) {
    CombinationRule rule;
    const auto& steps = j.at("steps");
    if (steps.empty()) throw IoError("rule with no steps");
    rule.lead.detector = steps[0].at("detector").get<int>();
    rule.lead.threshold = threshold_from_json(steps[0].at("threshold"));
    for (std::size_t i = 1; i < steps.size(); ++i) {
        RuleStep step;
        step.op = bool_op_from_string(steps[i].at("op").get<std::string>());
        step.ref.detector = steps[i].at("detector").get<int>();
        step.ref.threshold = threshold_from_json(steps[i].at("threshold"));
        rule.steps.push_back(step);
    }
    rule.fpr = j.at("fpr").get<double>();
    rule.tpr = j.at("tpr").get<double>();
    return rule;
}

}  // namespace

std::string ensemble_to_json(const EnsembleModel& ensemble) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["field"] = ensemble.field;
    j["method"] = ensemble.method;
    nlohmann::json bases = nlohmann::json::array();
    for (const auto& base : ensemble.bases)
        bases.push_back({{"model_file", base.model_file}, {"orientation", base.orientation}});
    j["bases"] = std::move(bases);
    nlohmann::json rules = nlohmann::json::array();
    for (const auto& rule : ensemble.rules) rules.push_back(rule_to_json(rule));
    j["rules"] = std::move(rules);
    j["operating_rule"] = ensemble.operating_rule;
    return j.dump();
}

EnsembleModel ensemble_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("bad ensemble file: ") + e.what());
    }
    EnsembleModel ensemble;
    try {
        ensemble.field = j.at("field").get<std::string>();
        ensemble.method = j.at("method").get<std::string>();
        for (const auto& base : j.at("bases"))
            ensemble.bases.push_back(
                {base.at("model_file").get<std::string>(), base.at("orientation").get<int>()});
        for (const auto& rule : j.at("rules")) ensemble.rules.push_back(rule_from_json(rule));
        ensemble.operating_rule = j.at("operating_rule").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("bad ensemble file: ") + e.what());
    }
    for (const auto& base : ensemble.bases)
        if (base.orientation != 1 && base.orientation != -1)
            throw IoError("orientation must be +1 or -1");
    return ensemble;
}

void save_ensemble(const EnsembleModel& ensemble, const std::string& path) {
    write_file_atomic(path, ensemble_to_json(ensemble));
}

EnsembleModel load_ensemble(const std::string& path) {
    return ensemble_from_json(read_file(path));
}

}  // namespace hmmfuse
