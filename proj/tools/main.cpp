// hmmfuse command line: extract stack traces from bug reports, train the
// per-field HMM families, fuse them into a Boolean-combination ensemble, and
// predict/evaluate field reassignment.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hmmfuse/error.hpp"
#include "hmmfuse/io.hpp"
#include "hmmfuse/pipeline.hpp"
#include "hmmfuse/report.hpp"

namespace fs = std::filesystem;
using namespace hmmfuse;

namespace {

struct GlobalOptions {
    std::uint64_t seed = 42;
    int jobs = 1;
};

struct ExtractArgs {
    std::string in, out, dialect;
    std::string policy = "first";
    bool no_caused_by = false;
    std::size_t max_frames = 0;
};

int run_extract(const ExtractArgs& args) {
    Dialect dialect = dialect_from_string(args.dialect);
    TracePolicy policy = trace_policy_from_string(args.policy);
    ExtractOptions options;
    options.merge_caused_by = !args.no_caused_by;
    options.max_frames = args.max_frames;

    auto reports = read_reports_jsonl(args.in);
    std::vector<TraceRecord> records;
    for (const auto& report : reports) {
        auto traces = extract_traces(report.text, dialect, options);
        auto selected = select_trace(traces, policy);
        if (!selected) continue;
        TraceRecord rec;
        rec.trace = std::move(*selected);
        rec.trace.report_id = report.id;
        rec.labels = report.labels;
        records.push_back(std::move(rec));
    }
    write_traces_jsonl(args.out, records);
    std::cerr << "extracted " << records.size() << " traces from " << reports.size()
              << " reports\n";
    return 0;
}

struct TrainArgs {
    std::string traces, field, dir;
    std::string states = "10..200:10";
    int restarts = 3;
    int max_iters = 100;
    double tol = 1e-4;
    double emission_floor = 1e-6;
};

int run_train(const TrainArgs& args, const GlobalOptions& global) {
    auto records = read_traces_jsonl(args.traces);
    FieldDataset data = collect_field_dataset(records, args.field);
    FieldSplit split = split_field(data, global.seed);

    TrainConfig config;
    config.max_iters = args.max_iters;
    config.rel_tol = args.tol;
    config.restarts = args.restarts;
    config.seed = global.seed;
    config.emission_floor = args.emission_floor;

    StateGrid grid = parse_state_grid(args.states);
    auto models = train_field_models(data, split, grid, config, global.jobs);

    save_field_split(split, (fs::path(args.dir) / "splits" / (args.field + ".json")).string());
    for (const auto& model : models) {
        std::string name = model_file_name(family_from_string(model.family), model.hmm.num_states);
        save_model(model, (fs::path(args.dir) / "models" / args.field / name).string());
        std::cerr << "trained " << args.field << "/" << name << "  loglik "
                  << model.final_loglik << "  iters " << model.iters << "\n";
    }
    std::cerr << "split " << args.field << ": train R " << split.reassigned.train.size()
              << " / NR " << split.not_reassigned.train.size() << ", validation "
              << split.reassigned.validation.size() + split.not_reassigned.validation.size()
              << "\n";
    return 0;
}

struct CombineArgs {
    std::string traces, field, dir;
    std::string method = "wpibc";
    double tau = 0.9;
    int select_per_base = 10;
    int kappa_bins = 10;
    int max_passes = 5;
    double min_auc_gain = 1e-4;
};

int run_combine(const CombineArgs& args) {
    auto records = read_traces_jsonl(args.traces);
    FieldDataset data = collect_field_dataset(records, args.field);
    FieldSplit split =
        load_field_split((fs::path(args.dir) / "splits" / (args.field + ".json")).string());
    auto [models, refs] = load_field_models(args.dir, args.field);

    FusionConfig fusion;
    fusion.method = args.method;
    fusion.tau = args.tau;
    fusion.select_per_base = args.select_per_base;
    fusion.kappa_bins = args.kappa_bins;
    fusion.ibc.max_passes = args.max_passes;
    fusion.ibc.min_auc_gain = args.min_auc_gain;

    LabeledSet validation = validation_set(data, split);
    BuiltEnsemble built = build_field_ensemble(models, refs, validation, fusion);
    save_ensemble(built.ensemble,
                  (fs::path(args.dir) / "ensembles" / (args.field + ".json")).string());

    std::cerr << "combined " << models.size() << " detectors with " << args.method << ": "
              << built.ensemble.bases.size() << " bases, " << built.ensemble.rules.size()
              << " rules, validation auc " << built.composite.auc << "\n";
    const auto& op = built.ensemble.rules[built.ensemble.operating_rule];
    std::cerr << "operating point fpr " << op.fpr << " tpr " << op.tpr << "\n";
    return 0;
}

struct PredictArgs {
    std::string ensemble, dir, in, out;
    std::string dialect;
    std::string policy = "first";
};

int run_predict(const PredictArgs& args) {
    LoadedEnsemble loaded = load_ensemble_with_models(args.ensemble, args.dir);

    std::ostringstream out;
    std::size_t count = 0;
    auto emit = [&](const std::string& id, const Prediction& prediction) {
        nlohmann::json j;
        j["id"] = id;
        j["field"] = loaded.ensemble.field;
        if (prediction.decision)
            j["decision"] = *prediction.decision;
        else {
            j["decision"] = nullptr;
            j["reason"] = prediction.reason;
        }
        j["scores"] = prediction.base_scores;
        j["rule_trace"] = prediction.rule_trace;
        out << j.dump() << '\n';
        ++count;
    };

    // Trace files carry "frames"; raw bug-report files carry "text" and need
    // a dialect to extract with.
    std::ifstream probe(args.in);
    if (!probe) throw IoError("cannot open " + args.in);
    std::string first_line;
    std::getline(probe, first_line);
    probe.close();
    bool is_traces = first_line.find("\"frames\"") != std::string::npos;

    if (is_traces) {
        for (const auto& rec : read_traces_jsonl(args.in))
            emit(rec.trace.report_id, predict_trace(loaded, rec.trace));
    } else {
        if (args.dialect.empty())
            throw DataError("raw bug reports need --dialect to extract traces");
        Dialect dialect = dialect_from_string(args.dialect);
        TracePolicy policy = trace_policy_from_string(args.policy);
        for (const auto& report : read_reports_jsonl(args.in))
            emit(report.id, predict_report(loaded, report, dialect, policy));
    }
    write_file_atomic(args.out, out.str());
    std::cerr << "predicted " << count << " reports\n";
    return 0;
}

struct EvaluateArgs {
    std::string traces, dir, out;
    std::vector<std::string> fields;
    double mtfpr = 0.1;
};

int run_evaluate(const EvaluateArgs& args) {
    auto records = read_traces_jsonl(args.traces);

    std::vector<std::string> fields = args.fields;
    if (fields.empty()) {
        fs::path dir = fs::path(args.dir) / "ensembles";
        if (!fs::is_directory(dir)) throw IoError("no ensembles directory under " + args.dir);
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.path().extension() == ".json") fields.push_back(entry.path().stem().string());
        std::sort(fields.begin(), fields.end());
    }
    if (fields.empty()) throw DataError("no ensembles to evaluate");

    std::vector<FieldReport> reports;
    for (const auto& field : fields) {
        FieldDataset data = collect_field_dataset(records, field);
        FieldSplit split =
            load_field_split((fs::path(args.dir) / "splits" / (field + ".json")).string());
        auto [models, refs] = load_field_models(args.dir, field);
        LoadedEnsemble loaded = load_ensemble_with_models(
            (fs::path(args.dir) / "ensembles" / (field + ".json")).string(), args.dir);

        FieldEvaluation eval =
            evaluate_field(loaded, models, refs, validation_set(data, split),
                           ensemble_test_set(data, split), args.mtfpr);
        std::cerr << field << ": test auc " << eval.ensemble_auc << ", best F "
                  << eval.best.metrics.f << " @ fpr " << eval.best.point.fpr << ", best single "
                  << eval.best_single_ref << " auc " << eval.best_single_auc << "\n";
        reports.push_back(report_from_evaluation(eval));
    }
    emit_report(reports, args.out);
    std::cerr << "wrote " << reports.size() << " field reports to " << args.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ensemble HMM classification of bug-report stack traces"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--seed", global.seed, "Master seed for every random choice")
        ->capture_default_str();
    app.add_option("--jobs", global.jobs, "Parallel training jobs")->capture_default_str();

    ExtractArgs extract_args;
    auto* extract = app.add_subcommand("extract", "Extract stack traces from bug-report JSONL");
    extract->add_option("--in", extract_args.in, "Bug-report JSONL")->required();
    extract->add_option("--out", extract_args.out, "Trace JSONL to write")->required();
    extract->add_option("--dialect", extract_args.dialect, "eclipse or gnome")->required();
    extract->add_option("--policy", extract_args.policy, "first or concat")
        ->capture_default_str();
    extract->add_flag("--no-caused-by", extract_args.no_caused_by,
                      "Start a new trace at Caused by: sections");
    extract->add_option("--max-frames", extract_args.max_frames,
                        "Keep at most this many top-of-stack frames (0 = all)");

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Train the R/NR model families for one field");
    train->add_option("--traces", train_args.traces, "Trace JSONL")->required();
    train->add_option("--field", train_args.field, "Bug-report field name")->required();
    train->add_option("--dir", train_args.dir, "Artifacts root directory")->required();
    train->add_option("--states", train_args.states, "State grid, e.g. 10..200:10 or 10,20,30")
        ->capture_default_str();
    train->add_option("--restarts", train_args.restarts)->capture_default_str();
    train->add_option("--max-iters", train_args.max_iters)->capture_default_str();
    train->add_option("--tol", train_args.tol, "Relative log-likelihood stopping threshold")
        ->capture_default_str();
    train->add_option("--emission-floor", train_args.emission_floor)->capture_default_str();

    CombineArgs combine_args;
    auto* combine = app.add_subcommand("combine", "Fuse trained models into an ensemble");
    combine->add_option("--traces", combine_args.traces, "Trace JSONL")->required();
    combine->add_option("--field", combine_args.field)->required();
    combine->add_option("--dir", combine_args.dir, "Artifacts root directory")->required();
    combine->add_option("--method", combine_args.method, "wpibc, ibc, or bbc2")
        ->capture_default_str();
    combine->add_option("--tau", combine_args.tau, "Weighted-kappa pruning threshold")
        ->capture_default_str();
    combine->add_option("--d", combine_args.select_per_base,
                        "Crisp detectors kept per base (half accurate, half complementary)")
        ->capture_default_str();
    combine->add_option("--kappa-bins", combine_args.kappa_bins)->capture_default_str();
    combine->add_option("--max-passes", combine_args.max_passes)->capture_default_str();
    combine->add_option("--min-auc-gain", combine_args.min_auc_gain)->capture_default_str();

    PredictArgs predict_args;
    auto* predict = app.add_subcommand("predict", "Predict reassignment for new reports");
    predict->add_option("--ensemble", predict_args.ensemble, "Ensemble JSON file")->required();
    predict->add_option("--dir", predict_args.dir, "Artifacts root directory")->required();
    predict->add_option("--in", predict_args.in, "Trace or bug-report JSONL")->required();
    predict->add_option("--out", predict_args.out, "Predictions JSONL")->required();
    predict->add_option("--dialect", predict_args.dialect, "Needed for raw bug reports");
    predict->add_option("--policy", predict_args.policy)->capture_default_str();

    EvaluateArgs evaluate_args;
    auto* evaluate = app.add_subcommand("evaluate", "Score ensembles on the held-out test split");
    evaluate->add_option("--traces", evaluate_args.traces, "Trace JSONL")->required();
    evaluate->add_option("--dir", evaluate_args.dir, "Artifacts root directory")->required();
    evaluate->add_option("--out", evaluate_args.out, "Report output directory")->required();
    evaluate->add_option("--field", evaluate_args.fields,
                         "Field to evaluate (repeatable; default: every ensemble found)");
    evaluate->add_option("--mtfpr", evaluate_args.mtfpr, "Maximum tolerable false-positive rate")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (extract->parsed()) return run_extract(extract_args);
        if (train->parsed()) return run_train(train_args, global);
        if (combine->parsed()) return run_combine(combine_args);
        if (predict->parsed()) return run_predict(predict_args);
        if (evaluate->parsed()) return run_evaluate(evaluate_args);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
