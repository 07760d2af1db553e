#pragma once

// Independent oracles and small generators shared by the unit and acceptance
// suites. Everything here recomputes results from first principles; nothing
// reuses the library's fast paths.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hmmfuse/hmm.hpp"
#include "hmmfuse/rng.hpp"
#include "hmmfuse/trace.hpp"

namespace testutil {

// Likelihood by explicit enumeration of all N^T state paths.
inline double brute_force_log_likelihood(const hmmfuse::Hmm& hmm, const std::vector<int>& seq) {
    const int n = hmm.num_states;
    const int T = static_cast<int>(seq.size());
    std::vector<int> path(T, 0);
    double total = 0;
    for (;;) {
        double p = hmm.initial[path[0]] * hmm.emission[path[0]][seq[0]];
        for (int t = 1; t < T; ++t)
            p *= hmm.transition[path[t - 1]][path[t]] * hmm.emission[path[t]][seq[t]];
        total += p;
        int t = T - 1;
        while (t >= 0 && ++path[t] == n) path[t--] = 0;
        if (t < 0) break;
    }
    return std::log(total);
}

// Mann-Whitney pair statistic with ties counted 1/2.
inline double pair_count_auc(const std::vector<double>& scores,
                             const std::vector<std::uint8_t>& labels) {
    double wins = 0;
    long long pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

inline hmmfuse::Hmm random_hmm(int n_states, int n_symbols, std::uint64_t seed) {
    hmmfuse::Rng rng(seed);
    hmmfuse::Hmm hmm;
    hmm.num_states = n_states;
    hmm.num_symbols = n_symbols;
    auto random_row = [&rng](int n) {
        std::vector<double> row(n);
        double sum = 0;
        for (double& v : row) {
            v = 0.05 + rng.next_double();
            sum += v;
        }
        for (double& v : row) v /= sum;
        return row;
    };
    hmm.initial = random_row(n_states);
    for (int i = 0; i < n_states; ++i) hmm.transition.push_back(random_row(n_states));
    for (int i = 0; i < n_states; ++i) hmm.emission.push_back(random_row(n_symbols));
    return hmm;
}

inline std::vector<hmmfuse::ObservationSequence> random_sequences(int count, int max_len,
                                                                  int n_symbols,
                                                                  std::uint64_t seed) {
    hmmfuse::Rng rng(seed);
    std::vector<hmmfuse::ObservationSequence> seqs;
    for (int i = 0; i < count; ++i) {
        hmmfuse::ObservationSequence seq;
        seq.report_id = "seq-" + std::to_string(i);
        int len = 1 + static_cast<int>(rng.next_below(max_len));
        for (int t = 0; t < len; ++t)
            seq.symbols.push_back(static_cast<int>(rng.next_below(n_symbols)));
        seqs.push_back(std::move(seq));
    }
    return seqs;
}

inline hmmfuse::StackTrace make_trace(const std::string& id,
                                      const std::vector<std::string>& functions,
                                      hmmfuse::Dialect dialect = hmmfuse::Dialect::eclipse) {
    hmmfuse::StackTrace trace;
    trace.report_id = id;
    trace.dialect = dialect;
    for (std::size_t i = 0; i < functions.size(); ++i) {
        hmmfuse::Frame frame;
        frame.function = functions[i];
        frame.position = static_cast<int>(i);
        trace.frames.push_back(std::move(frame));
    }
    return trace;
}

}  // namespace testutil
