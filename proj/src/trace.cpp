#include "hmmfuse/trace.hpp"

#include <cctype>
#include <regex>

#include "hmmfuse/error.hpp"

namespace hmmfuse {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

// "at java.base/java.lang.Thread.run(Thread.java:829)"
// Group 1: optional module/classloader prefix, group 2: qualified method,
// group 3: source location.
const std::regex& eclipse_frame_re() {
    static const std::regex re(
        R"(^\s*at\s+(?:([A-Za-z_$][\w.$]*)/+)?([\w$<>.]+\.[\w$<>]+)\s*\((.*)\)\s*$)",
        std::regex::optimize);
    return re;
}

const std::regex& eclipse_chain_re() {
    static const std::regex re(R"(^\s*(Caused by|Suppressed)\s*:.*$)", std::regex::optimize);
    return re;
}

// "... 23 more" (and logback's "... 17 common frames omitted")
const std::regex& eclipse_elision_re() {
    static const std::regex re(R"(^\s*\.\.\.\s*\d+\s*(more|common frames omitted)\s*$)",
                               std::regex::optimize);
    return re;
}

Frame parse_eclipse_frame(std::string_view line) {
    std::cmatch m;
    if (!std::regex_match(line.begin(), line.end(), m, eclipse_frame_re()))
        throw NonFrameLine("not an Eclipse stack frame: " + std::string(line));
    Frame frame;
    frame.function = m[2].str();
    frame.source = m[3].str();
    return frame;
}

bool starts_with_hex_address(std::string_view s, std::size_t* end) {
    if (s.size() < 3 || s[0] != '0' || (s[1] != 'x' && s[1] != 'X')) return false;
    std::size_t i = 2;
    while (i < s.size() && std::isxdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (i == 2) return false;
    *end = i;
    return true;
}

// "#3  0x0000dead in g_hash_table_lookup (h=0x1) from /usr/lib/libglib.so"
// "#0  main (argc=1, argv=0x7fff) at main.c:10"
// Parsed by hand because demangled C++ symbols can contain parentheses
// (operator(), function types in templates), which breaks a single regex.
Frame parse_gnome_frame(std::string_view line) {
    std::string_view rest = trim(line);
    if (rest.empty() || rest[0] != '#')
        throw NonFrameLine("not a gdb stack frame: " + std::string(line));
    rest.remove_prefix(1);

    std::size_t digits = 0;
    while (digits < rest.size() && std::isdigit(static_cast<unsigned char>(rest[digits]))) ++digits;
    if (digits == 0 || digits == rest.size() ||
        !std::isspace(static_cast<unsigned char>(rest[digits])))
        throw NonFrameLine("not a gdb stack frame: " + std::string(line));
    int position = std::stoi(std::string(rest.substr(0, digits)));
    rest = trim(rest.substr(digits));

    // Optional "0xADDR in " prefix.
    std::size_t hex_end = 0;
    if (starts_with_hex_address(rest, &hex_end)) {
        std::string_view after = trim(rest.substr(hex_end));
        if (after.substr(0, 2) == "in" && after.size() > 2 &&
            std::isspace(static_cast<unsigned char>(after[2]))) {
            rest = trim(after.substr(2));
        } else {
            throw NonFrameLine("not a gdb stack frame: " + std::string(line));
        }
    }

    // The argument list is the last balanced "(...)" group; anything after it
    // must be a "from <library>" or "at <file>" suffix.
    std::size_t close = rest.rfind(')');
    if (close == std::string_view::npos)
        throw NonFrameLine("not a gdb stack frame: " + std::string(line));
    std::string_view suffix = trim(rest.substr(close + 1));
    std::string source;
    if (!suffix.empty()) {
        if (suffix.substr(0, 5) == "from " )
            source = std::string(trim(suffix.substr(5)));
        else if (suffix.substr(0, 3) == "at ")
            source = std::string(trim(suffix.substr(3)));
        else
            throw NonFrameLine("not a gdb stack frame: " + std::string(line));
        if (source.empty())
            throw NonFrameLine("not a gdb stack frame: " + std::string(line));
    }

    int depth = 0;
    std::size_t open = std::string_view::npos;
    for (std::size_t i = close + 1; i-- > 0;) {
        if (rest[i] == ')') ++depth;
        if (rest[i] == '(') {
            --depth;
            if (depth == 0) {
                open = i;
                break;
            }
        }
    }
    if (open == std::string_view::npos)
        throw NonFrameLine("not a gdb stack frame: " + std::string(line));

    Frame frame;
    frame.function = std::string(trim(rest.substr(0, open)));
    frame.source = source;
    frame.position = position;
    return frame;
}

bool is_unresolved_symbol(const std::string& function) {
    if (function.empty()) return true;
    for (char c : function)
        if (c != '?') return false;
    return true;
}

}  // namespace

const char* to_string(Dialect dialect) {
    return dialect == Dialect::eclipse ? "eclipse" : "gnome";
}

Dialect dialect_from_string(std::string_view name) {
    if (name == "eclipse") return Dialect::eclipse;
    if (name == "gnome") return Dialect::gnome;
    throw DataError("unknown dialect: " + std::string(name));
}

TracePolicy trace_policy_from_string(std::string_view name) {
    if (name == "first") return TracePolicy::first;
    if (name == "concat") return TracePolicy::concat;
    throw DataError("unknown trace policy: " + std::string(name));
}

Frame normalize_frame(std::string_view raw_line, Dialect dialect) {
    return dialect == Dialect::eclipse ? parse_eclipse_frame(raw_line)
                                       : parse_gnome_frame(raw_line);
}

bool is_frame_line(std::string_view raw_line, Dialect dialect) {
    try {
        normalize_frame(raw_line, dialect);
        return true;
    } catch (const NonFrameLine&) {
        return false;
    }
}

std::vector<StackTrace> extract_traces(std::string_view text, Dialect dialect,
                                       const ExtractOptions& options) {
    std::vector<StackTrace> traces;
    StackTrace current;
    current.dialect = dialect;
    bool open = false;
    int last_position = -1;

    auto close_current = [&] {
        if (!current.frames.empty()) traces.push_back(std::move(current));
        current = StackTrace{};
        current.dialect = dialect;
        open = false;
        last_position = -1;
    };

    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t eol = text.find('\n', start);
        std::string_view line = text.substr(
            start, eol == std::string_view::npos ? text.size() - start : eol - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        bool is_frame = false;
        Frame frame;
        try {
            frame = normalize_frame(line, dialect);
            is_frame = true;
        } catch (const NonFrameLine&) {
        }

        if (is_frame) {
            if (dialect == Dialect::gnome) {
                // A frame counter that does not increase means a new backtrace
                // was pasted right after the previous one.
                if (open && frame.position <= last_position) close_current();
                last_position = frame.position;
                open = true;
                if (!is_unresolved_symbol(frame.function) &&
                    (options.max_frames == 0 || current.frames.size() < options.max_frames))
                    current.frames.push_back(std::move(frame));
            } else {
                open = true;
                if (options.max_frames == 0 || current.frames.size() < options.max_frames) {
                    frame.position = static_cast<int>(current.frames.size());
                    current.frames.push_back(std::move(frame));
                }
            }
        } else if (dialect == Dialect::eclipse && open && options.merge_caused_by &&
                   std::regex_match(line.begin(), line.end(), eclipse_chain_re())) {
            // keep the trace open; the chained section's frames follow
        } else if (dialect == Dialect::eclipse && open &&
                   std::regex_match(line.begin(), line.end(), eclipse_elision_re())) {
            // "... N more" stands for frames already listed above
        } else {
            close_current();
        }

        if (eol == std::string_view::npos) break;
        start = eol + 1;
    }
    close_current();
    return traces;
}

std::optional<StackTrace> select_trace(const std::vector<StackTrace>& traces,
                                       TracePolicy policy) {
    if (traces.empty()) return std::nullopt;
    if (policy == TracePolicy::first) return traces.front();
    StackTrace merged;
    merged.report_id = traces.front().report_id;
    merged.dialect = traces.front().dialect;
    for (const auto& trace : traces)
        for (const auto& frame : trace.frames) {
            Frame copy = frame;
            copy.position = static_cast<int>(merged.frames.size());
            merged.frames.push_back(std::move(copy));
        }
    return merged;
}

}  // namespace hmmfuse
