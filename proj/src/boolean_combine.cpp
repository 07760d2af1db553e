#include "hmmfuse/boolean_combine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hmmfuse/error.hpp"

namespace hmmfuse {

const char* to_string(BoolOp op) {
    switch (op) {
        case BoolOp::and_: return "and";
        case BoolOp::notA_and: return "notA_and";
        case BoolOp::and_notB: return "and_notB";
        case BoolOp::nand: return "nand";
        case BoolOp::or_: return "or";
        case BoolOp::notA_or: return "notA_or";
        case BoolOp::or_notB: return "or_notB";
        case BoolOp::nor: return "nor";
        case BoolOp::xor_: return "xor";
        case BoolOp::xnor: return "xnor";
    }
    return "?";
}

BoolOp bool_op_from_string(std::string_view name) {
    for (BoolOp op : kAllBoolOps)
        if (name == to_string(op)) return op;
    throw DataError("unknown boolean op: " + std::string(name));
}

bool apply_boolean(BoolOp op, bool a, bool b) {
    switch (op) {
        case BoolOp::and_: return a && b;
        case BoolOp::notA_and: return !a && b;
        case BoolOp::and_notB: return a && !b;
        case BoolOp::nand: return !(a && b);
        case BoolOp::or_: return a || b;
        case BoolOp::notA_or: return !a || b;
        case BoolOp::or_notB: return a || !b;
        case BoolOp::nor: return !(a || b);
        case BoolOp::xor_: return a != b;
        case BoolOp::xnor: return a == b;
    }
    return false;
}

std::vector<std::uint8_t> apply_boolean(BoolOp op, std::span<const std::uint8_t> a,
                                        std::span<const std::uint8_t> b) {
    if (a.size() != b.size()) throw LengthMismatch("decision vectors differ in length");
    std::vector<std::uint8_t> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out[i] = apply_boolean(op, a[i] != 0, b[i] != 0) ? 1 : 0;
    return out;
}

namespace {

std::vector<std::uint8_t> threshold_decisions(std::span<const double> scores, double threshold) {
    std::vector<std::uint8_t> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= threshold ? 1 : 0;
    return out;
}

void check_detector_index(int detector, std::size_t n_detectors) {
    if (detector < 0 || static_cast<std::size_t>(detector) >= n_detectors)
        throw MissingDetectorScore("no scores for detector " + std::to_string(detector));
}

}  // namespace

std::vector<std::uint8_t> evaluate_rule(const CombinationRule& rule,
                                        const std::vector<std::vector<double>>& scores_per_detector) {
    check_detector_index(rule.lead.detector, scores_per_detector.size());
    std::vector<std::uint8_t> acc =
        threshold_decisions(scores_per_detector[rule.lead.detector], rule.lead.threshold);
    for (const auto& step : rule.steps) {
        check_detector_index(step.ref.detector, scores_per_detector.size());
        std::vector<std::uint8_t> next =
            threshold_decisions(scores_per_detector[step.ref.detector], step.ref.threshold);
        acc = apply_boolean(step.op, acc, next);
    }
    return acc;
}

bool evaluate_rule_single(const CombinationRule& rule, std::span<const double> detector_scores,
                          std::vector<std::uint8_t>* step_trace) {
    check_detector_index(rule.lead.detector, detector_scores.size());
    bool acc = detector_scores[rule.lead.detector] >= rule.lead.threshold;
    if (step_trace) step_trace->push_back(acc ? 1 : 0);
    for (const auto& step : rule.steps) {
        check_detector_index(step.ref.detector, detector_scores.size());
        bool next = detector_scores[step.ref.detector] >= step.ref.threshold;
        acc = apply_boolean(step.op, acc, next);
        if (step_trace) step_trace->push_back(acc ? 1 : 0);
    }
    return acc;
}

std::vector<double> candidate_thresholds(std::span<const double> scores) {
    std::vector<double> thresholds(scores.begin(), scores.end());
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    thresholds.insert(thresholds.begin(), std::numeric_limits<double>::infinity());
    return thresholds;
}

RocEnvelope::RocEnvelope(std::span<const std::uint8_t> labels) : labels_(labels) {
    for (std::uint8_t l : labels_) (l ? n_pos_ : n_neg_) += 1;
    if (n_pos_ == 0 || n_neg_ == 0)
        throw SingleClassValidation("need both classes to select operating points");
}

void RocEnvelope::add(std::vector<std::uint8_t> response, CombinationRule rule) {
    if (response.size() != labels_.size()) throw LengthMismatch("response/labels size mismatch");
    long long tp = 0, fp = 0;
    for (std::size_t i = 0; i < response.size(); ++i)
        if (response[i]) (labels_[i] ? tp : fp) += 1;
    double fpr = static_cast<double>(fp) / static_cast<double>(n_neg_);
    double tpr = static_cast<double>(tp) / static_cast<double>(n_pos_);
    rule.fpr = fpr;
    rule.tpr = tpr;

    // Earlier candidates win ties, so the result does not depend on how many
    // duplicate response vectors show up later.
    auto it = entries_.find(fpr);
    if (it != entries_.end() && tpr <= it->second.tpr) return;
    Entry entry{tpr, std::move(rule), std::move(response)};
    if (it != entries_.end())
        it->second = std::move(entry);
    else
        entries_.emplace(fpr, std::move(entry));
}

std::vector<RocEnvelope::Point> RocEnvelope::staircase() && {
    std::vector<Point> out;
    double best_tpr = -1;
    for (auto& [fpr, entry] : entries_) {
        if (entry.tpr > best_tpr) {
            best_tpr = entry.tpr;
            out.push_back({std::move(entry.rule), std::move(entry.response)});
        }
    }
    return out;
}

RocCurve composite_curve(const std::vector<CombinationRule>& rules) {
    std::vector<RocPoint> points;
    points.reserve(rules.size());
    for (std::size_t i = 0; i < rules.size(); ++i)
        points.push_back({rules[i].fpr, rules[i].tpr, static_cast<double>(i)});
    return curve_from_points(std::move(points));
}

CompositeRoc bbc2_combine(const std::vector<CrispRef>& crisp,
                          const std::vector<std::vector<double>>& scores_per_detector,
                          std::span<const std::uint8_t> labels) {
    if (crisp.size() < 2) throw TooFewDetectors("pairwise combination needs at least 2 crisp detectors");

    std::vector<std::vector<std::uint8_t>> decisions;
    decisions.reserve(crisp.size());
    for (const auto& ref : crisp) {
        check_detector_index(ref.detector, scores_per_detector.size());
        decisions.push_back(threshold_decisions(scores_per_detector[ref.detector], ref.threshold));
    }

    RocEnvelope envelope(labels);
    for (std::size_t i = 0; i < crisp.size(); ++i)
        envelope.add(decisions[i], CombinationRule{crisp[i], {}, 0, 0});

    std::size_t emerging = 0;
    for (std::size_t i = 0; i < crisp.size(); ++i)
        for (std::size_t j = i + 1; j < crisp.size(); ++j)
            for (BoolOp op : kAllBoolOps) {
                CombinationRule rule{crisp[i], {RuleStep{op, crisp[j]}}, 0, 0};
                envelope.add(apply_boolean(op, decisions[i], decisions[j]), std::move(rule));
                ++emerging;
            }

    CompositeRoc out;
    for (auto& point : std::move(envelope).staircase()) out.rules.push_back(std::move(point.rule));
    out.auc = auc(composite_curve(out.rules));
    out.passes = 1;
    out.emerging_evaluated = emerging;
    return out;
}

CompositeRoc ibc_combine(const std::vector<std::vector<double>>& scores_per_detector,
                         std::span<const std::uint8_t> labels,
                         const std::vector<std::vector<double>>& combo_thresholds,
                         const IbcConfig& config) {
    const std::size_t n_detectors = scores_per_detector.size();
    if (n_detectors == 0) throw TooFewDetectors("no detectors to combine");
    if (combo_thresholds.size() != n_detectors)
        throw LengthMismatch("threshold sets do not match detector count");

    struct Composite {
        std::vector<CombinationRule> rules;
        std::vector<std::vector<std::uint8_t>> responses;
    };
    Composite composite;
    std::size_t emerging = 0;

    auto fold_detector = [&](std::size_t d) {
        RocEnvelope envelope(labels);
        for (std::size_t p = 0; p < composite.rules.size(); ++p)
            envelope.add(composite.responses[p], composite.rules[p]);
        // The detector's own staircase stays in play regardless of which
        // thresholds were picked for pairing.
        for (double threshold : candidate_thresholds(scores_per_detector[d]))
            envelope.add(threshold_decisions(scores_per_detector[d], threshold),
                         CombinationRule{CrispRef{static_cast<int>(d), threshold}, {}, 0, 0});
        for (std::size_t p = 0; p < composite.rules.size(); ++p)
            for (double threshold : combo_thresholds[d]) {
                std::vector<std::uint8_t> crisp =
                    threshold_decisions(scores_per_detector[d], threshold);
                for (BoolOp op : kAllBoolOps) {
                    CombinationRule rule = composite.rules[p];
                    rule.steps.push_back(RuleStep{op, CrispRef{static_cast<int>(d), threshold}});
                    envelope.add(apply_boolean(op, composite.responses[p], crisp), std::move(rule));
                    ++emerging;
                }
            }
        Composite next;
        for (auto& point : std::move(envelope).staircase()) {
            next.rules.push_back(std::move(point.rule));
            next.responses.push_back(std::move(point.response));
        }
        composite = std::move(next);
    };

    CompositeRoc out;
    double last_auc = 0;
    for (int pass = 0; pass < config.max_passes; ++pass) {
        for (std::size_t d = 0; d < n_detectors; ++d) fold_detector(d);
        out.passes = pass + 1;
        double current = auc(composite_curve(composite.rules));
        bool converged = pass > 0 && current - last_auc < config.min_auc_gain;
        last_auc = current;
        if (converged) break;
    }
    out.rules = std::move(composite.rules);
    out.auc = last_auc;
    out.emerging_evaluated = emerging;
    return out;
}

}  // namespace hmmfuse
