#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hmmfuse/boolean_combine.hpp"

namespace hmmfuse {

// Phase 1: greedy diversity selection. Repeatedly takes the remaining
// detector with the best validation AUC as a base and prunes every remaining
// detector whose weighted kappa against it reaches `tau`. Returns base
// indices in selection order.
std::vector<int> wpibc_select_base(const std::vector<std::vector<double>>& scores_per_detector,
                                   std::span<const std::uint8_t> labels, double tau,
                                   int kappa_bins = 10);

// Phase 2: crisp selection for one base. Ranks every candidate threshold by
// Cohen's kappa between its decisions and the ground truth (ties broken by
// lower threshold) and keeps the top and bottom halves of `select_count`.
// Returns all candidates when there are no more than `select_count` of them.
std::vector<double> wpibc_select_crisp(std::span<const double> base_scores,
                                       std::span<const std::uint8_t> labels, int select_count);

struct WpibcConfig {
    double tau = 0.9;
    int select_per_base = 10;  // accurate + complementary crisp detectors per base
    int kappa_bins = 10;
    IbcConfig ibc;
};

struct WpibcResult {
    std::vector<int> base_indices;       // into the caller's detector list
    std::size_t selected_crisp = 0;      // total thresholds entering phase 3
    CompositeRoc composite;              // rules refer to base-list positions
};

// All three phases. Rules in the result index into base_indices (position in
// the returned base list, not the original detector list).
WpibcResult wpibc_build(const std::vector<std::vector<double>>& scores_per_detector,
                        std::span<const std::uint8_t> labels, const WpibcConfig& config = {});

struct BaseRef {
    std::string model_file;
    int orientation = +1;
};

// A stored ensemble: which models it scores with, the combination rules that
// make up its composite ROC, and the rule used for live predictions.
struct EnsembleModel {
    std::string field;
    std::string method;  // wpibc | ibc | bbc2
    std::vector<BaseRef> bases;
    std::vector<CombinationRule> rules;
    int operating_rule = -1;
};

struct EnsembleDecision {
    bool decision = false;
    std::vector<std::uint8_t> rule_trace;  // running decision after each step
};

// Applies the operating rule to one sample's per-base oriented scores.
EnsembleDecision ensemble_predict(const EnsembleModel& ensemble,
                                  std::span<const double> base_scores);

std::string ensemble_to_json(const EnsembleModel& ensemble);
EnsembleModel ensemble_from_json(const std::string& text);
void save_ensemble(const EnsembleModel& ensemble, const std::string& path);
EnsembleModel load_ensemble(const std::string& path);

}  // namespace hmmfuse
