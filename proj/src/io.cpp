#include "hmmfuse/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hmmfuse/error.hpp"

namespace hmmfuse {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    if (in.bad()) throw IoError("read error on " + path);
    return out.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    fs::path target(path);
    std::error_code ec;
    if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw IoError("write error on " + tmp.string());
    }
    fs::rename(tmp, target, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path + ": " + ec.message());
}

namespace {

std::map<std::string, bool> labels_from_json(const nlohmann::json& j) {
    std::map<std::string, bool> labels;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!it.value().is_boolean())
            throw DataError("label '" + it.key() + "' is not a boolean");
        labels[it.key()] = it.value().get<bool>();
    }
    return labels;
}

template <typename Fn>
void for_each_jsonl_line(const std::string& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": bad JSON: " + e.what());
        }
        try {
            fn(j);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

}  // namespace

std::vector<RawBugReport> read_reports_jsonl(const std::string& path) {
    std::vector<RawBugReport> reports;
    for_each_jsonl_line(path, [&](const nlohmann::json& j) {
        RawBugReport report;
        report.id = j.at("id").get<std::string>();
        if (report.id.empty()) throw DataError("report id must be non-empty");
        report.text = j.value("text", std::string());
        if (j.contains("labels")) report.labels = labels_from_json(j.at("labels"));
        reports.push_back(std::move(report));
    });
    return reports;
}

std::vector<TraceRecord> read_traces_jsonl(const std::string& path) {
    std::vector<TraceRecord> records;
    for_each_jsonl_line(path, [&](const nlohmann::json& j) {
        TraceRecord rec;
        rec.trace.report_id = j.at("id").get<std::string>();
        if (rec.trace.report_id.empty()) throw DataError("trace id must be non-empty");
        rec.trace.dialect = dialect_from_string(j.at("dialect").get<std::string>());
        auto frames = j.at("frames").get<std::vector<std::string>>();
        if (frames.empty()) throw DataError("trace has no frames");
        for (std::size_t i = 0; i < frames.size(); ++i) {
            Frame frame;
            frame.function = std::move(frames[i]);
            frame.position = static_cast<int>(i);
            rec.trace.frames.push_back(std::move(frame));
        }
        if (j.contains("labels")) rec.labels = labels_from_json(j.at("labels"));
        records.push_back(std::move(rec));
    });
    return records;
}

void write_traces_jsonl(const std::string& path, const std::vector<TraceRecord>& records) {
    std::ostringstream out;
    for (const auto& rec : records) {
        nlohmann::json j;
        j["id"] = rec.trace.report_id;
        j["dialect"] = to_string(rec.trace.dialect);
        nlohmann::json frames = nlohmann::json::array();
        for (const auto& frame : rec.trace.frames) frames.push_back(frame.function);
        j["frames"] = std::move(frames);
        nlohmann::json labels = nlohmann::json::object();
        for (const auto& [field, value] : rec.labels) labels[field] = value;
        j["labels"] = std::move(labels);
        out << j.dump() << '\n';
    }
    write_file_atomic(path, out.str());
}

}  // namespace hmmfuse
