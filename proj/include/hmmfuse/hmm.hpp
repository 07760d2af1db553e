#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hmmfuse/vocab.hpp"

namespace hmmfuse {

using Matrix = std::vector<std::vector<double>>;

// Discrete hidden Markov model. `transition` is N x N, `emission` is N x M,
// all rows stochastic. `vocab` may be empty when the model is used as a bare
// numeric object (tests, bindings); trained pipeline models always carry one,
// which makes a serialized model self-describing.
struct Hmm {
    int num_states = 0;
    int num_symbols = 0;
    std::vector<double> initial;
    Matrix transition;
    Matrix emission;
    Vocabulary vocab;
};

struct TrainConfig {
    int max_iters = 100;
    double rel_tol = 1e-4;
    int restarts = 3;
    std::uint64_t seed = 42;
    double emission_floor = 1e-6;
};

struct TrainLog {
    // loglik_history[r][k] is the total log-likelihood of restart r's model
    // after k EM updates (entry 0 is the random initialization).
    std::vector<std::vector<double>> loglik_history;
    int chosen_restart = 0;
    int iters = 0;            // EM updates applied to the returned model
    double final_loglik = 0;  // after emission flooring
};

// Random row-stochastic initialization: uniform rows perturbed by +-10% and
// renormalized. Deterministic for a given seed.
Hmm init_hmm(int num_states, int num_symbols, std::uint64_t seed);

// log P(O | model), natural log, computed with per-step scaling. Returns
// -inf when the sequence has probability zero under the model.
double forward_log_likelihood(const Hmm& hmm, std::span<const int> seq);

// log P(O | model) / T. Length-normalized so traces of different lengths
// score on a comparable scale.
double score_sequence(const Hmm& hmm, std::span<const int> seq);

struct Posteriors {
    Matrix gamma;            // T x N state posteriors
    std::vector<Matrix> xi;  // T-1 pairwise posteriors, each N x N
};

Posteriors forward_backward_posteriors(const Hmm& hmm, std::span<const int> seq);

// One pooled-count EM update over all sequences, in place. Returns the total
// log-likelihood of the model as passed in (before the update).
double em_step(Hmm& hmm, const std::vector<ObservationSequence>& sequences);

double total_log_likelihood(const Hmm& hmm, const std::vector<ObservationSequence>& sequences);

// Clamps emission entries from below and renormalizes rows, so unseen
// symbols cannot send a test score to -inf.
void apply_emission_floor(Hmm& hmm, double floor);

// Multi-restart Baum-Welch over pooled sequences. Keeps the restart with the
// best final log-likelihood, then floors its emission matrix.
Hmm baum_welch_train(const std::vector<ObservationSequence>& sequences, int num_states,
                     int num_symbols, const TrainConfig& config, TrainLog* log = nullptr);

// Samples an observation sequence of the given length from the model.
std::vector<int> sample_sequence(const Hmm& hmm, int length, std::uint64_t seed);

// Model file round-trip. `family` is "R" or "NR"; `field` the bug-report
// field the model was trained for.
struct StoredModel {
    std::string field;
    std::string family;
    Hmm hmm;
    std::uint64_t seed = 0;
    int iters = 0;
    double final_loglik = 0;
};

std::string model_to_json(const StoredModel& model);
StoredModel model_from_json(const std::string& text);
void save_model(const StoredModel& model, const std::string& path);
StoredModel load_model(const std::string& path);

}  // namespace hmmfuse
