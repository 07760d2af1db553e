#include "hmmfuse/hmm.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "hmmfuse/error.hpp"
#include "hmmfuse/io.hpp"
#include "hmmfuse/rng.hpp"

namespace hmmfuse {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_dimensions(int num_states, int num_symbols) {
    if (num_states < 1) throw BadDimensions("num_states must be >= 1");
    if (num_symbols < 2) throw BadDimensions("num_symbols must be >= 2");
}

void check_symbols(const Hmm& hmm, std::span<const int> seq) {
    if (seq.empty()) throw EmptyTrace("empty observation sequence");
    for (int s : seq)
        if (s < 0 || s >= hmm.num_symbols)
            throw SymbolOutOfRange("symbol " + std::to_string(s) + " outside alphabet of size " +
                                   std::to_string(hmm.num_symbols));
}

std::vector<double> random_stochastic_row(int n, Rng& rng) {
    std::vector<double> row(n);
    double sum = 0;
    for (double& v : row) {
        v = 1.0 + 0.1 * (2.0 * rng.next_double() - 1.0);
        sum += v;
    }
    for (double& v : row) v /= sum;
    return row;
}

// Scaled alpha pass. alpha[t] holds the per-step normalized forward vector,
// scale[t] the normalizer. Returns false if the sequence has zero probability.
bool forward_pass(const Hmm& hmm, std::span<const int> seq, Matrix& alpha,
                  std::vector<double>& scale) {
    const int n = hmm.num_states;
    const int T = static_cast<int>(seq.size());
    alpha.assign(T, std::vector<double>(n, 0.0));
    scale.assign(T, 0.0);

    double sum = 0;
    for (int i = 0; i < n; ++i) {
        alpha[0][i] = hmm.initial[i] * hmm.emission[i][seq[0]];
        sum += alpha[0][i];
    }
    if (sum <= 0) return false;
    scale[0] = sum;
    for (int i = 0; i < n; ++i) alpha[0][i] /= sum;

    for (int t = 1; t < T; ++t) {
        sum = 0;
        for (int j = 0; j < n; ++j) {
            double acc = 0;
            for (int i = 0; i < n; ++i) acc += alpha[t - 1][i] * hmm.transition[i][j];
            alpha[t][j] = acc * hmm.emission[j][seq[t]];
            sum += alpha[t][j];
        }
        if (sum <= 0) return false;
        scale[t] = sum;
        for (int j = 0; j < n; ++j) alpha[t][j] /= sum;
    }
    return true;
}

// Backward pass using the forward pass's scale factors.
void backward_pass(const Hmm& hmm, std::span<const int> seq, const std::vector<double>& scale,
                   Matrix& beta) {
    const int n = hmm.num_states;
    const int T = static_cast<int>(seq.size());
    beta.assign(T, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) beta[T - 1][i] = 1.0;
    for (int t = T - 2; t >= 0; --t) {
        for (int i = 0; i < n; ++i) {
            double acc = 0;
            for (int j = 0; j < n; ++j)
                acc += hmm.transition[i][j] * hmm.emission[j][seq[t + 1]] * beta[t + 1][j];
            beta[t][i] = acc / scale[t + 1];
        }
    }
}

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : m) rows.push_back(row);
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
    Matrix m;
    for (const auto& row : j) m.push_back(row.get<std::vector<double>>());
    return m;
}

}  // namespace

Hmm init_hmm(int num_states, int num_symbols, std::uint64_t seed) {
    check_dimensions(num_states, num_symbols);
    Rng rng(seed);
    Hmm hmm;
    hmm.num_states = num_states;
    hmm.num_symbols = num_symbols;
    hmm.initial = random_stochastic_row(num_states, rng);
    hmm.transition.reserve(num_states);
    hmm.emission.reserve(num_states);
    for (int i = 0; i < num_states; ++i) hmm.transition.push_back(random_stochastic_row(num_states, rng));
    for (int i = 0; i < num_states; ++i) hmm.emission.push_back(random_stochastic_row(num_symbols, rng));
    return hmm;
}

double forward_log_likelihood(const Hmm& hmm, std::span<const int> seq) {
    check_symbols(hmm, seq);
    Matrix alpha;
    std::vector<double> scale;
    if (!forward_pass(hmm, seq, alpha, scale)) return kNegInf;
    double loglik = 0;
    for (double s : scale) loglik += std::log(s);
    return loglik;
}

double score_sequence(const Hmm& hmm, std::span<const int> seq) {
    return forward_log_likelihood(hmm, seq) / static_cast<double>(seq.size());
}

Posteriors forward_backward_posteriors(const Hmm& hmm, std::span<const int> seq) {
    check_symbols(hmm, seq);
    const int n = hmm.num_states;
    const int T = static_cast<int>(seq.size());

    Matrix alpha, beta;
    std::vector<double> scale;
    if (!forward_pass(hmm, seq, alpha, scale))
        throw DataError("sequence has zero probability under the model");
    backward_pass(hmm, seq, scale, beta);

    Posteriors post;
    post.gamma.assign(T, std::vector<double>(n, 0.0));
    post.xi.reserve(T > 0 ? T - 1 : 0);

    // gamma at t < T-1 is taken as the row-marginal of xi so the two always
    // agree; the last step comes straight from alpha * beta.
    for (int t = 0; t + 1 < T; ++t) {
        Matrix xi(n, std::vector<double>(n, 0.0));
        double total = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double v = alpha[t][i] * hmm.transition[i][j] * hmm.emission[j][seq[t + 1]] *
                           beta[t + 1][j];
                xi[i][j] = v;
                total += v;
            }
        if (total <= 0) throw DataError("degenerate posterior at step " + std::to_string(t));
        for (int i = 0; i < n; ++i) {
            double row = 0;
            for (int j = 0; j < n; ++j) {
                xi[i][j] /= total;
                row += xi[i][j];
            }
            post.gamma[t][i] = row;
        }
        post.xi.push_back(std::move(xi));
    }

    double total = 0;
    for (int i = 0; i < n; ++i) {
        post.gamma[T - 1][i] = alpha[T - 1][i] * beta[T - 1][i];
        total += post.gamma[T - 1][i];
    }
    for (int i = 0; i < n; ++i) post.gamma[T - 1][i] /= total;
    return post;
}

double total_log_likelihood(const Hmm& hmm, const std::vector<ObservationSequence>& sequences) {
    double total = 0;
    for (const auto& seq : sequences) total += forward_log_likelihood(hmm, seq.symbols);
    return total;
}

double em_step(Hmm& hmm, const std::vector<ObservationSequence>& sequences) {
    if (sequences.empty()) throw EmptyTrainingSet("no training sequences");
    const int n = hmm.num_states;
    const int m = hmm.num_symbols;

    std::vector<double> init_acc(n, 0.0);
    Matrix trans_num(n, std::vector<double>(n, 0.0));
    std::vector<double> trans_den(n, 0.0);
    Matrix emit_num(n, std::vector<double>(m, 0.0));
    std::vector<double> emit_den(n, 0.0);
    double loglik = 0;

    // One alpha/beta/xi workspace reused across sequences; the per-timestep
    // pairwise posterior never needs to be kept beyond its own accumulation.
    Matrix alpha, beta;
    std::vector<double> scale;
    Matrix xi(n, std::vector<double>(n, 0.0));
    std::vector<double> gamma(n, 0.0);

    for (const auto& seq : sequences) {
        check_symbols(hmm, seq.symbols);
        const int T = static_cast<int>(seq.symbols.size());
        if (!forward_pass(hmm, seq.symbols, alpha, scale))
            throw DataError("training sequence " + seq.report_id +
                            " has zero probability under the model");
        backward_pass(hmm, seq.symbols, scale, beta);
        for (double s : scale) loglik += std::log(s);

        for (int t = 0; t + 1 < T; ++t) {
            const int symbol = seq.symbols[t];
            const int next = seq.symbols[t + 1];
            double total = 0;
            for (int i = 0; i < n; ++i) {
                const double a_i = alpha[t][i];
                for (int j = 0; j < n; ++j) {
                    double v = a_i * hmm.transition[i][j] * hmm.emission[j][next] * beta[t + 1][j];
                    xi[i][j] = v;
                    total += v;
                }
            }
            if (total <= 0)
                throw DataError("degenerate posterior at step " + std::to_string(t));
            for (int i = 0; i < n; ++i) {
                double row = 0;
                for (int j = 0; j < n; ++j) {
                    double v = xi[i][j] / total;
                    trans_num[i][j] += v;
                    row += v;
                }
                trans_den[i] += row;  // state posterior, exactly the xi row-marginal
                emit_num[i][symbol] += row;
                emit_den[i] += row;
                if (t == 0) init_acc[i] += row;
            }
        }
        // Last step (or the whole sequence when T == 1): alpha * beta.
        double total = 0;
        for (int i = 0; i < n; ++i) {
            gamma[i] = alpha[T - 1][i] * beta[T - 1][i];
            total += gamma[i];
        }
        const int last_symbol = seq.symbols[T - 1];
        for (int i = 0; i < n; ++i) {
            double v = gamma[i] / total;
            emit_num[i][last_symbol] += v;
            emit_den[i] += v;
            if (T == 1) init_acc[i] += v;
        }
    }

    for (int i = 0; i < n; ++i) hmm.initial[i] = init_acc[i] / static_cast<double>(sequences.size());
    for (int i = 0; i < n; ++i) {
        // A state with no expected visits keeps its previous row; rewriting it
        // from 0/0 would break row stochasticity.
        if (trans_den[i] > 0)
            for (int j = 0; j < n; ++j) hmm.transition[i][j] = trans_num[i][j] / trans_den[i];
        if (emit_den[i] > 0)
            for (int k = 0; k < m; ++k) hmm.emission[i][k] = emit_num[i][k] / emit_den[i];
    }
    return loglik;
}

void apply_emission_floor(Hmm& hmm, double floor) {
    if (floor <= 0) return;
    for (auto& row : hmm.emission) {
        double sum = 0;
        for (double& v : row) {
            if (v < floor) v = floor;
            sum += v;
        }
        for (double& v : row) v /= sum;
    }
}

Hmm baum_welch_train(const std::vector<ObservationSequence>& sequences, int num_states,
                     int num_symbols, const TrainConfig& config, TrainLog* log) {
    if (sequences.empty()) throw EmptyTrainingSet("no training sequences");
    for (const auto& seq : sequences)
        if (seq.symbols.empty()) throw EmptyTrace("training sequence " + seq.report_id + " is empty");
    check_dimensions(num_states, num_symbols);
    if (config.max_iters < 1) throw DataError("max_iters must be >= 1");
    if (config.restarts < 1) throw DataError("restarts must be >= 1");
    if (config.rel_tol <= 0) throw DataError("rel_tol must be > 0");

    Hmm best;
    double best_loglik = kNegInf;
    TrainLog result;
    result.loglik_history.resize(config.restarts);
    int best_iters = 0;

    for (int r = 0; r < config.restarts; ++r) {
        Hmm hmm = init_hmm(num_states, num_symbols, mix_seed(config.seed, r));
        auto& history = result.loglik_history[r];
        double prev = kNegInf;
        int iters = 0;
        for (int it = 0; it < config.max_iters; ++it) {
            double loglik = em_step(hmm, sequences);
            history.push_back(loglik);
            ++iters;
            if (it > 0) {
                double gain = (loglik - prev) / std::max(1.0, std::fabs(prev));
                if (gain < config.rel_tol) break;
            }
            prev = loglik;
        }
        double final_loglik = total_log_likelihood(hmm, sequences);
        history.push_back(final_loglik);
        if (final_loglik > best_loglik) {
            best_loglik = final_loglik;
            best = std::move(hmm);
            result.chosen_restart = r;
            best_iters = iters;
        }
    }

    apply_emission_floor(best, config.emission_floor);
    result.iters = best_iters;
    result.final_loglik = total_log_likelihood(best, sequences);
    if (log) *log = std::move(result);
    return best;
}

std::vector<int> sample_sequence(const Hmm& hmm, int length, std::uint64_t seed) {
    Rng rng(seed);
    auto draw = [&rng](const std::vector<double>& dist) {
        double u = rng.next_double();
        double acc = 0;
        for (std::size_t i = 0; i < dist.size(); ++i) {
            acc += dist[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(dist.size()) - 1;
    };
    std::vector<int> seq(length);
    int state = draw(hmm.initial);
    for (int t = 0; t < length; ++t) {
        seq[t] = draw(hmm.emission[state]);
        state = draw(hmm.transition[state]);
    }
    return seq;
}

std::string model_to_json(const StoredModel& model) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = "hmm";
    j["family"] = model.family;
    j["field"] = model.field;
    j["n_states"] = model.hmm.num_states;
    j["vocab"] = model.hmm.vocab.symbols;
    j["pi"] = model.hmm.initial;
    j["a"] = matrix_to_json(model.hmm.transition);
    j["b"] = matrix_to_json(model.hmm.emission);
    j["train"] = {{"seed", model.seed}, {"iters", model.iters}, {"final_loglik", model.final_loglik}};
    return j.dump();
}

StoredModel model_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("bad model file: ") + e.what());
    }
    if (j.value("kind", "") != "hmm") throw IoError("not a model file");
    StoredModel model;
    model.family = j.at("family").get<std::string>();
    model.field = j.at("field").get<std::string>();
    model.hmm.num_states = j.at("n_states").get<int>();
    model.hmm.vocab = vocabulary_from_symbols(j.at("vocab").get<std::vector<std::string>>());
    model.hmm.initial = j.at("pi").get<std::vector<double>>();
    model.hmm.transition = matrix_from_json(j.at("a"));
    model.hmm.emission = matrix_from_json(j.at("b"));
    model.hmm.num_symbols = model.hmm.vocab.size();
    model.seed = j.at("train").at("seed").get<std::uint64_t>();
    model.iters = j.at("train").at("iters").get<int>();
    model.final_loglik = j.at("train").at("final_loglik").get<double>();
    return model;
}

void save_model(const StoredModel& model, const std::string& path) {
    write_file_atomic(path, model_to_json(model));
}

StoredModel load_model(const std::string& path) {
    return model_from_json(read_file(path));
}

}  // namespace hmmfuse
