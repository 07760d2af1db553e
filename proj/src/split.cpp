#include "hmmfuse/split.hpp"

#include <cmath>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "hmmfuse/error.hpp"
#include "hmmfuse/rng.hpp"

namespace hmmfuse {

const char* to_string(Family family) { return family == Family::R ? "R" : "NR"; }

Family family_from_string(std::string_view name) {
    if (name == "R") return Family::R;
    if (name == "NR") return Family::NR;
    throw DataError("unknown model family: " + std::string(name));
}

FieldDataset collect_field_dataset(const std::vector<TraceRecord>& records,
                                   const std::string& field) {
    FieldDataset data;
    data.field = field;
    std::set<std::string> seen;
    for (const auto& rec : records) {
        auto it = rec.labels.find(field);
        if (it == rec.labels.end()) continue;
        if (!seen.insert(rec.trace.report_id).second)
            throw DataError("duplicate report id: " + rec.trace.report_id);
        (it->second ? data.reassigned : data.not_reassigned).push_back(rec.trace);
    }
    return data;
}

namespace {

constexpr std::size_t kMinClassSize = 10;

ClassPartition partition_class(const std::vector<StackTrace>& traces, std::uint64_t seed) {
    std::vector<std::string> ids;
    ids.reserve(traces.size());
    for (const auto& trace : traces) ids.push_back(trace.report_id);
    Rng rng(seed);
    rng.shuffle(ids);

    const auto n = static_cast<double>(ids.size());
    std::size_t n_train = static_cast<std::size_t>(std::llround(0.7 * n));
    std::size_t n_val = static_cast<std::size_t>(std::llround(0.1 * n));
    std::size_t n_test = static_cast<std::size_t>(std::llround(0.2 * n));
    // Rounding leftovers go to the training bucket.
    n_train += ids.size() - (n_train + n_val + n_test);

    ClassPartition part;
    part.train.assign(ids.begin(), ids.begin() + n_train);
    part.validation.assign(ids.begin() + n_train, ids.begin() + n_train + n_val);
    part.test.assign(ids.begin() + n_train + n_val, ids.end());
    return part;
}

std::unordered_map<std::string, const StackTrace*> index_by_id(
    const std::vector<StackTrace>& traces) {
    std::unordered_map<std::string, const StackTrace*> index;
    index.reserve(traces.size());
    for (const auto& trace : traces) index.emplace(trace.report_id, &trace);
    return index;
}

void append_traces(std::vector<StackTrace>& out,
                   const std::unordered_map<std::string, const StackTrace*>& index,
                   const std::vector<std::string>& ids) {
    for (const auto& id : ids) out.push_back(*index.at(id));
}

}  // namespace

FieldSplit split_field(const FieldDataset& data, std::uint64_t seed) {
    if (data.reassigned.size() < kMinClassSize || data.not_reassigned.size() < kMinClassSize)
        throw ClassTooSmall("field '" + data.field + "' needs at least " +
                            std::to_string(kMinClassSize) + " reports per class, got " +
                            std::to_string(data.reassigned.size()) + " reassigned / " +
                            std::to_string(data.not_reassigned.size()) + " not");
    FieldSplit split;
    split.field = data.field;
    split.seed = seed;
    split.reassigned = partition_class(data.reassigned, derive_seed(seed, data.field + "/R"));
    split.not_reassigned =
        partition_class(data.not_reassigned, derive_seed(seed, data.field + "/NR"));
    return split;
}

DatasetSplit dataset_split_from_field_split(const FieldDataset& data, const FieldSplit& split,
                                            Family train_class) {
    auto r_index = index_by_id(data.reassigned);
    auto nr_index = index_by_id(data.not_reassigned);

    DatasetSplit out;
    out.train_class = train_class;
    out.seed = split.seed;

    const ClassPartition& own = train_class == Family::R ? split.reassigned : split.not_reassigned;
    const ClassPartition& other = train_class == Family::R ? split.not_reassigned : split.reassigned;
    const auto& own_index = train_class == Family::R ? r_index : nr_index;
    const auto& other_index = train_class == Family::R ? nr_index : r_index;

    append_traces(out.train, own_index, own.train);

    // Validation order is fixed as reassigned first, so every detector scores
    // the same sample order.
    append_traces(out.validation, r_index, split.reassigned.validation);
    out.validation_labels.assign(split.reassigned.validation.size(), 1);
    append_traces(out.validation, nr_index, split.not_reassigned.validation);
    out.validation_labels.insert(out.validation_labels.end(),
                                 split.not_reassigned.validation.size(), 0);

    const std::uint8_t own_label = train_class == Family::R ? 1 : 0;
    append_traces(out.test, own_index, own.test);
    out.test_labels.assign(own.test.size(), own_label);
    append_traces(out.test, other_index, other.train);
    append_traces(out.test, other_index, other.test);
    out.test_labels.insert(out.test_labels.end(), other.train.size() + other.test.size(),
                           static_cast<std::uint8_t>(1 - own_label));
    return out;
}

DatasetSplit split_dataset(const FieldDataset& data, Family train_class, std::uint64_t seed) {
    return dataset_split_from_field_split(data, split_field(data, seed), train_class);
}

namespace {

nlohmann::json partition_to_json(const ClassPartition& part) {
    return {{"train", part.train}, {"validation", part.validation}, {"test", part.test}};
}

ClassPartition partition_from_json(const nlohmann::json& j) {
    ClassPartition part;
    part.train = j.at("train").get<std::vector<std::string>>();
    part.validation = j.at("validation").get<std::vector<std::string>>();
    part.test = j.at("test").get<std::vector<std::string>>();
    return part;
}

}  // namespace

std::string field_split_to_json(const FieldSplit& split) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["field"] = split.field;
    j["seed"] = split.seed;
    j["r"] = partition_to_json(split.reassigned);
    j["nr"] = partition_to_json(split.not_reassigned);
    return j.dump();
}

FieldSplit field_split_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
        FieldSplit split;
        split.field = j.at("field").get<std::string>();
        split.seed = j.at("seed").get<std::uint64_t>();
        split.reassigned = partition_from_json(j.at("r"));
        split.not_reassigned = partition_from_json(j.at("nr"));
        return split;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("bad split file: ") + e.what());
    }
}

void save_field_split(const FieldSplit& split, const std::string& path) {
    write_file_atomic(path, field_split_to_json(split));
}

FieldSplit load_field_split(const std::string& path) {
    return field_split_from_json(read_file(path));
}

}  // namespace hmmfuse
