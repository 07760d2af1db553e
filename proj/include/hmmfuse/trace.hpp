#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hmmfuse {

enum class Dialect { eclipse, gnome };

const char* to_string(Dialect dialect);
Dialect dialect_from_string(std::string_view name);

// One resolved call-stack frame. `source` keeps whatever file/library text the
// line carried; `position` is the frame index (gdb's #N, or the running index
// for Java traces).
struct Frame {
    std::string function;
    std::string source;
    int position = -1;
};

struct StackTrace {
    std::string report_id;
    Dialect dialect = Dialect::eclipse;
    std::vector<Frame> frames;
};

struct RawBugReport {
    std::string id;
    std::string text;
    std::map<std::string, bool> labels;
};

struct ExtractOptions {
    // Append "Caused by:" / "Suppressed:" sections of a Java trace to the
    // trace they belong to instead of starting a new one.
    bool merge_caused_by = true;
    // 0 = unlimited. When set, keeps the first max_frames frames (top of
    // stack) and drops the rest.
    std::size_t max_frames = 0;
};

enum class TracePolicy { first, concat };
TracePolicy trace_policy_from_string(std::string_view name);

// Parses a single line as a stack frame. Throws NonFrameLine when the line
// does not match the dialect grammar. Gnome lines with an unresolved symbol
// ("??" or blank) still parse; extract_traces is what drops them.
Frame normalize_frame(std::string_view raw_line, Dialect dialect);

// Returns true when the line matches the dialect frame grammar.
bool is_frame_line(std::string_view raw_line, Dialect dialect);

// Splits free-form bug-report text into stack traces. Each maximal run of
// consecutive frame lines yields one trace; anything else in between closes
// the current trace. Gnome frame numbering restarting (a second "#0") also
// closes the current trace.
std::vector<StackTrace> extract_traces(std::string_view text, Dialect dialect,
                                       const ExtractOptions& options = {});

std::optional<StackTrace> select_trace(const std::vector<StackTrace>& traces,
                                       TracePolicy policy);

}  // namespace hmmfuse
