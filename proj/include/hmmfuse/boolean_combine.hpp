#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "hmmfuse/roc.hpp"

namespace hmmfuse {

// The ten two-input Boolean functions used for decision fusion.
enum class BoolOp {
    and_,       // a ^ b
    notA_and,   // !a ^ b
    and_notB,   // a ^ !b
    nand,       // !(a ^ b)
    or_,        // a v b
    notA_or,    // !a v b
    or_notB,    // a v !b
    nor,        // !(a v b)
    xor_,       // a xor b
    xnor,       // a == b
};

inline constexpr std::array<BoolOp, 10> kAllBoolOps = {
    BoolOp::and_, BoolOp::notA_and, BoolOp::and_notB, BoolOp::nand, BoolOp::or_,
    BoolOp::notA_or, BoolOp::or_notB, BoolOp::nor, BoolOp::xor_, BoolOp::xnor};

const char* to_string(BoolOp op);
BoolOp bool_op_from_string(std::string_view name);

bool apply_boolean(BoolOp op, bool a, bool b);
std::vector<std::uint8_t> apply_boolean(BoolOp op, std::span<const std::uint8_t> a,
                                        std::span<const std::uint8_t> b);

// A crisp detector: one of the ensemble's base soft detectors plus a decision
// threshold on its oriented score (decision = score >= threshold).
struct CrispRef {
    int detector = 0;
    double threshold = 0;
};

struct RuleStep {
    BoolOp op = BoolOp::and_;
    CrispRef ref;
};

// Left-deep fold over crisp decisions: evaluate `lead`, then combine each
// step's crisp decision from the left. `fpr`/`tpr` record what the rule
// achieved on the validation set it was built from.
struct CombinationRule {
    CrispRef lead;
    std::vector<RuleStep> steps;
    double fpr = 0;
    double tpr = 0;
};

// Decision vectors for a rule over a dataset; scores_per_detector[d][i] is
// detector d's oriented score on sample i.
std::vector<std::uint8_t> evaluate_rule(const CombinationRule& rule,
                                        const std::vector<std::vector<double>>& scores_per_detector);

// Single-sample evaluation. When `step_trace` is non-null it receives the
// running decision after the lead and after each step.
bool evaluate_rule_single(const CombinationRule& rule, std::span<const double> detector_scores,
                          std::vector<std::uint8_t>* step_trace = nullptr);

// Candidate thresholds of one detector: +inf followed by the unique scores
// in descending order (same sweep as roc_curve).
std::vector<double> candidate_thresholds(std::span<const double> scores);

// Upper-staircase selection over candidate operating points: keeps, per
// false-positive rate, the best true-positive rate (first candidate wins
// ties), then drops dominated points. Feed order is the determinism contract.
class RocEnvelope {
  public:
    explicit RocEnvelope(std::span<const std::uint8_t> labels);

    void add(std::vector<std::uint8_t> response, CombinationRule rule);

    struct Point {
        CombinationRule rule;               // fpr/tpr filled in
        std::vector<std::uint8_t> response;
    };
    // Ascending fpr, strictly increasing tpr.
    std::vector<Point> staircase() &&;

  private:
    std::span<const std::uint8_t> labels_;
    long long n_pos_ = 0, n_neg_ = 0;
    struct Entry {
        double tpr;
        CombinationRule rule;
        std::vector<std::uint8_t> response;
    };
    std::map<double, Entry> entries_;  // fpr -> best candidate so far
};

struct CompositeRoc {
    std::vector<CombinationRule> rules;  // the staircase, ascending fpr
    double auc = 0;
    int passes = 0;
    std::size_t emerging_evaluated = 0;  // combination response vectors scored
};

RocCurve composite_curve(const std::vector<CombinationRule>& rules);

// Brute-force pairwise combination: every unordered pair of crisp detectors
// under all ten functions, plus the originals.
CompositeRoc bbc2_combine(const std::vector<CrispRef>& crisp,
                          const std::vector<std::vector<double>>& scores_per_detector,
                          std::span<const std::uint8_t> labels);

struct IbcConfig {
    int max_passes = 5;
    double min_auc_gain = 1e-4;
};

// Iterative combination: folds detectors one at a time into a growing
// composite, repeating full passes until the AUC gain falls below
// min_auc_gain. combo_thresholds[d] are the thresholds actually paired with
// the composite; every detector's full threshold set still enters the
// envelope as standalone candidates, so the composite never falls below any
// detector's own staircase.
CompositeRoc ibc_combine(const std::vector<std::vector<double>>& scores_per_detector,
                         std::span<const std::uint8_t> labels,
                         const std::vector<std::vector<double>>& combo_thresholds,
                         const IbcConfig& config = {});

}  // namespace hmmfuse
