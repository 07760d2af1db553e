#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "hmmfuse/trace.hpp"

namespace hmmfuse {

// Discrete observation alphabet. Index 0 is always the unknown-function
// bucket; the remaining symbols are the distinct training function names in
// lexicographic order, so the alphabet does not depend on input order.
struct Vocabulary {
    static constexpr const char* kUnknown = "<UNK>";

    std::vector<std::string> symbols;
    std::unordered_map<std::string, int> index;

    int size() const { return static_cast<int>(symbols.size()); }

    int lookup(const std::string& name) const {
        auto it = index.find(name);
        return it == index.end() ? 0 : it->second;
    }
};

struct ObservationSequence {
    std::string report_id;
    std::vector<int> symbols;
};

Vocabulary build_vocabulary(const std::vector<StackTrace>& training_traces);
Vocabulary vocabulary_from_symbols(std::vector<std::string> symbols);

ObservationSequence encode(const StackTrace& trace, const Vocabulary& vocab);

}  // namespace hmmfuse
