#pragma once

#include <map>
#include <string>
#include <vector>

#include "hmmfuse/trace.hpp"

namespace hmmfuse {

std::string read_file(const std::string& path);

// Writes to a sibling temp file and renames over the target, so readers never
// see a half-written artifact.
void write_file_atomic(const std::string& path, const std::string& content);

// One extracted trace plus the report's ground-truth labels; the unit both
// the trace files and the pipeline work with.
struct TraceRecord {
    StackTrace trace;
    std::map<std::string, bool> labels;
};

// Bug-report JSONL: {"id": str, "text": str, "labels": {field: bool, ...}}
std::vector<RawBugReport> read_reports_jsonl(const std::string& path);

// Trace JSONL: {"id": str, "dialect": str, "frames": [str, ...], "labels": {...}}
std::vector<TraceRecord> read_traces_jsonl(const std::string& path);
void write_traces_jsonl(const std::string& path, const std::vector<TraceRecord>& records);

}  // namespace hmmfuse
