#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hmmfuse/ensemble.hpp"
#include "hmmfuse/hmm.hpp"
#include "hmmfuse/metrics.hpp"
#include "hmmfuse/split.hpp"

namespace hmmfuse {

// Hidden-state counts to train one model pair per entry. The default sweeps
// 10 through 200 in steps of 10.
struct StateGrid {
    std::vector<int> states;
};

StateGrid default_state_grid();
// Accepts "10..200:10", "10,20,30", or a single count.
StateGrid parse_state_grid(std::string_view text);

// Oriented per-trace scores of one model: encode against the model's own
// vocabulary, score, done.
std::vector<double> score_traces(const Hmm& model, const std::vector<StackTrace>& traces);

std::string model_file_name(Family family, int n_states);

// Trains one R-family and one NR-family model per grid entry. Models come
// back R family first, each family in grid order. `jobs` > 1 trains models
// concurrently; results are identical either way.
std::vector<StoredModel> train_field_models(const FieldDataset& data, const FieldSplit& split,
                                            const StateGrid& grid, const TrainConfig& config,
                                            int jobs = 1);

struct LabeledSet {
    std::vector<StackTrace> traces;
    std::vector<std::uint8_t> labels;
};

// 10% of each class; the set every detector is oriented and fused on.
LabeledSet validation_set(const FieldDataset& data, const FieldSplit& split);
// The held-out 20% of each class: the only reports no model ever trained or
// validated on, so the ensemble and every single model can be compared on it.
LabeledSet ensemble_test_set(const FieldDataset& data, const FieldSplit& split);

struct FusionConfig {
    std::string method = "wpibc";  // wpibc | ibc | bbc2
    double tau = 0.9;
    int select_per_base = 10;
    int kappa_bins = 10;
    IbcConfig ibc;
};

struct BuiltEnsemble {
    EnsembleModel ensemble;
    std::vector<int> base_indices;  // into the models list handed in
    CompositeRoc composite;         // validation composite
    std::vector<double> base_aucs;  // oriented validation AUC of every input model
    std::size_t selected_crisp = 0;
};

// Wraps each model as an oriented soft detector, fuses them with the chosen
// method, and picks the operating rule by best validation F-measure.
// `model_refs[i]` is the file reference stored for models[i].
BuiltEnsemble build_field_ensemble(const std::vector<StoredModel>& models,
                                   const std::vector<std::string>& model_refs,
                                   const LabeledSet& validation, const FusionConfig& config);

struct LoadedEnsemble {
    EnsembleModel ensemble;
    std::vector<StoredModel> bases;  // parallel to ensemble.bases
};

// Loads every model file under <root>/models/<field>/, R family first, state
// counts ascending. Returns the models and their root-relative references.
std::pair<std::vector<StoredModel>, std::vector<std::string>> load_field_models(
    const std::string& root, const std::string& field);

LoadedEnsemble load_ensemble_with_models(const std::string& ensemble_path,
                                         const std::string& artifacts_root);

// Oriented score of every base detector for one trace.
std::vector<double> base_scores_for_trace(const LoadedEnsemble& loaded, const StackTrace& trace);

struct Prediction {
    std::optional<bool> decision;
    std::string reason;  // "no-stack-trace" when decision is empty
    std::vector<double> base_scores;
    std::vector<std::uint8_t> rule_trace;
};

Prediction predict_trace(const LoadedEnsemble& loaded, const StackTrace& trace);
Prediction predict_report(const LoadedEnsemble& loaded, const RawBugReport& report,
                          Dialect dialect, TracePolicy policy = TracePolicy::first,
                          const ExtractOptions& options = {});

struct FieldEvaluation {
    std::string field;
    std::string method;
    long long n_pos = 0;
    long long n_neg = 0;
    RocCurve ensemble_curve;  // rule replay on the test set; threshold = rule index
    double ensemble_auc = 0;
    BestFPoint best;
    int best_rule = -1;  // -1 when the best point is a synthetic endpoint
    std::string best_single_ref;
    RocCurve best_single_curve;
    double best_single_auc = 0;
    double mtfpr = 0;
    MtfprImprovement improvement;
};

// Replays the stored rules on the test set and compares against the
// strongest single model (each model oriented on validation, ranked by test
// AUC).
FieldEvaluation evaluate_field(const LoadedEnsemble& loaded,
                               const std::vector<StoredModel>& all_models,
                               const std::vector<std::string>& model_refs,
                               const LabeledSet& validation, const LabeledSet& test,
                               double mtfpr);

struct PipelineConfig {
    StateGrid grid = default_state_grid();
    TrainConfig train;
    FusionConfig fusion;
    double mtfpr = 0.1;
    int jobs = 1;
};

struct FieldArtifacts {
    FieldSplit split;
    std::vector<StoredModel> models;
    std::vector<std::string> model_refs;
    BuiltEnsemble built;
    FieldEvaluation eval;
};

// split -> train -> fuse -> evaluate, entirely in memory.
FieldArtifacts run_field_pipeline(const std::vector<TraceRecord>& records,
                                  const std::string& field, const PipelineConfig& config);

// Writes splits/<field>.json, models/<field>/<family>-N<k>.json and
// ensembles/<field>.json under the artifacts root.
void save_field_artifacts(const FieldArtifacts& artifacts, const std::string& root);

}  // namespace hmmfuse
