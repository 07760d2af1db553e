#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hmmfuse/io.hpp"
#include "hmmfuse/roc.hpp"

namespace hmmfuse {

enum class Family { R, NR };
const char* to_string(Family family);
Family family_from_string(std::string_view name);

// All traces of one bug-report field, separated by ground truth.
struct FieldDataset {
    std::string field;
    std::vector<StackTrace> reassigned;
    std::vector<StackTrace> not_reassigned;
};

// Keeps only records labeled for `field`. Duplicate report ids are rejected:
// the reassigned/not-reassigned sets must stay disjoint.
FieldDataset collect_field_dataset(const std::vector<TraceRecord>& records,
                                   const std::string& field);

struct ClassPartition {
    std::vector<std::string> train;       // 70%
    std::vector<std::string> validation;  // 10%
    std::vector<std::string> test;        // 20%
};

// Seeded 70/10/20 partition of each class by report id. Shared by both model
// families so they validate on the identical reports. Percentages are
// rounded to nearest with the leftover going to the training bucket.
struct FieldSplit {
    std::string field;
    std::uint64_t seed = 0;
    ClassPartition reassigned;
    ClassPartition not_reassigned;
};

FieldSplit split_field(const FieldDataset& data, std::uint64_t seed);

// One family's view of the split: train on 70% of its own class, validate on
// 10% of each class, test on its remaining 20% plus 90% of the other class.
struct DatasetSplit {
    Family train_class = Family::R;
    std::uint64_t seed = 0;
    std::vector<StackTrace> train;
    std::vector<StackTrace> validation;
    std::vector<std::uint8_t> validation_labels;
    std::vector<StackTrace> test;
    std::vector<std::uint8_t> test_labels;
};

DatasetSplit split_dataset(const FieldDataset& data, Family train_class, std::uint64_t seed);
DatasetSplit dataset_split_from_field_split(const FieldDataset& data, const FieldSplit& split,
                                            Family train_class);

std::string field_split_to_json(const FieldSplit& split);
FieldSplit field_split_from_json(const std::string& text);
void save_field_split(const FieldSplit& split, const std::string& path);
FieldSplit load_field_split(const std::string& path);

}  // namespace hmmfuse
