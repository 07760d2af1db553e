#include "hmmfuse/vocab.hpp"

#include <algorithm>
#include <set>

#include "hmmfuse/error.hpp"

namespace hmmfuse {

Vocabulary build_vocabulary(const std::vector<StackTrace>& training_traces) {
    std::set<std::string> names;
    for (const auto& trace : training_traces)
        for (const auto& frame : trace.frames) names.insert(frame.function);
    if (names.empty()) throw EmptyCorpus("no frames in training traces");

    std::vector<std::string> symbols;
    symbols.reserve(names.size() + 1);
    symbols.push_back(Vocabulary::kUnknown);
    symbols.insert(symbols.end(), names.begin(), names.end());
    return vocabulary_from_symbols(std::move(symbols));
}

Vocabulary vocabulary_from_symbols(std::vector<std::string> symbols) {
    if (symbols.empty() || symbols.front() != Vocabulary::kUnknown)
        throw DataError("vocabulary must start with the unknown-symbol bucket");
    Vocabulary vocab;
    vocab.symbols = std::move(symbols);
    vocab.index.reserve(vocab.symbols.size());
    for (std::size_t i = 0; i < vocab.symbols.size(); ++i) {
        auto [it, inserted] = vocab.index.emplace(vocab.symbols[i], static_cast<int>(i));
        if (!inserted) throw DataError("duplicate vocabulary symbol: " + vocab.symbols[i]);
    }
    return vocab;
}

ObservationSequence encode(const StackTrace& trace, const Vocabulary& vocab) {
    if (trace.frames.empty()) throw EmptyTrace("cannot encode a trace with no frames");
    ObservationSequence seq;
    seq.report_id = trace.report_id;
    seq.symbols.reserve(trace.frames.size());
    for (const auto& frame : trace.frames) seq.symbols.push_back(vocab.lookup(frame.function));
    return seq;
}

}  // namespace hmmfuse
