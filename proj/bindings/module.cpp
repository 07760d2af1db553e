#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hmmfuse/error.hpp"
#include "hmmfuse/kappa.hpp"
#include "hmmfuse/pipeline.hpp"
#include "hmmfuse/report.hpp"

namespace py = pybind11;
using namespace hmmfuse;

namespace {

TrainConfig make_train_config(int max_iters, double rel_tol, int restarts, std::uint64_t seed,
                              double emission_floor) {
    TrainConfig config;
    config.max_iters = max_iters;
    config.rel_tol = rel_tol;
    config.restarts = restarts;
    config.seed = seed;
    config.emission_floor = emission_floor;
    return config;
}

std::vector<ObservationSequence> to_sequences(const std::vector<std::vector<int>>& raw) {
    std::vector<ObservationSequence> seqs;
    seqs.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        seqs.push_back({"seq-" + std::to_string(i), raw[i]});
    return seqs;
}

}  // namespace

PYBIND11_MODULE(_hmmfuse, m) {
    m.doc() = "Ensemble HMM classification of crash stack traces";

    // Translators run newest-first, so the most specific kinds go last.
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::class_<Frame>(m, "Frame")
        .def(py::init<>())
        .def_readwrite("function", &Frame::function)
        .def_readwrite("source", &Frame::source)
        .def_readwrite("position", &Frame::position)
        .def("__repr__", [](const Frame& f) { return "<Frame " + f.function + ">"; });

    py::class_<StackTrace>(m, "StackTrace")
        .def(py::init<>())
        .def_readwrite("report_id", &StackTrace::report_id)
        .def_readwrite("frames", &StackTrace::frames)
        .def_property(
            "dialect", [](const StackTrace& t) { return std::string(to_string(t.dialect)); },
            [](StackTrace& t, const std::string& d) { t.dialect = dialect_from_string(d); })
        .def("functions", [](const StackTrace& t) {
            std::vector<std::string> names;
            for (const auto& frame : t.frames) names.push_back(frame.function);
            return names;
        });

    m.def(
        "normalize_frame",
        [](const std::string& line, const std::string& dialect) {
            return normalize_frame(line, dialect_from_string(dialect));
        },
        py::arg("line"), py::arg("dialect"));
    m.def(
        "extract_traces",
        [](const std::string& text, const std::string& dialect, bool merge_caused_by,
           std::size_t max_frames) {
            ExtractOptions options;
            options.merge_caused_by = merge_caused_by;
            options.max_frames = max_frames;
            return extract_traces(text, dialect_from_string(dialect), options);
        },
        py::arg("text"), py::arg("dialect"), py::arg("merge_caused_by") = true,
        py::arg("max_frames") = 0);
    m.def(
        "select_trace",
        [](const std::vector<StackTrace>& traces, const std::string& policy) {
            return select_trace(traces, trace_policy_from_string(policy));
        },
        py::arg("traces"), py::arg("policy") = "first");

    py::class_<Vocabulary>(m, "Vocabulary")
        .def_readonly("symbols", &Vocabulary::symbols)
        .def("__len__", &Vocabulary::size)
        .def("lookup", &Vocabulary::lookup);
    m.def("build_vocabulary", &build_vocabulary, py::arg("traces"));
    m.def(
        "encode",
        [](const StackTrace& trace, const Vocabulary& vocab) {
            return encode(trace, vocab).symbols;
        },
        py::arg("trace"), py::arg("vocab"));

    py::class_<Hmm>(m, "Hmm")
        .def_readonly("num_states", &Hmm::num_states)
        .def_readonly("num_symbols", &Hmm::num_symbols)
        .def_readonly("initial", &Hmm::initial)
        .def_readonly("transition", &Hmm::transition)
        .def_readonly("emission", &Hmm::emission)
        .def_readonly("vocab", &Hmm::vocab);

    m.def("init_hmm", &init_hmm, py::arg("num_states"), py::arg("num_symbols"), py::arg("seed"));
    m.def(
        "forward_log_likelihood",
        [](const Hmm& hmm, const std::vector<int>& seq) {
            return forward_log_likelihood(hmm, seq);
        },
        py::arg("hmm"), py::arg("sequence"));
    m.def(
        "score_sequence",
        [](const Hmm& hmm, const std::vector<int>& seq) { return score_sequence(hmm, seq); },
        py::arg("hmm"), py::arg("sequence"));
    m.def(
        "baum_welch_train",
        [](const std::vector<std::vector<int>>& sequences, int num_states, int num_symbols,
           int max_iters, double rel_tol, int restarts, std::uint64_t seed,
           double emission_floor, const Vocabulary* vocab) {
            if (vocab) num_symbols = vocab->size();
            Hmm hmm = baum_welch_train(
                to_sequences(sequences), num_states, num_symbols,
                make_train_config(max_iters, rel_tol, restarts, seed, emission_floor));
            if (vocab) hmm.vocab = *vocab;
            return hmm;
        },
        py::arg("sequences"), py::arg("num_states"), py::arg("num_symbols") = 0,
        py::arg("max_iters") = 100, py::arg("rel_tol") = 1e-4, py::arg("restarts") = 3,
        py::arg("seed") = 42, py::arg("emission_floor") = 1e-6,
        py::arg("vocab") = static_cast<const Vocabulary*>(nullptr));
    m.def("sample_sequence", &sample_sequence, py::arg("hmm"), py::arg("length"), py::arg("seed"));

    py::class_<StoredModel>(m, "StoredModel")
        .def(py::init<>())
        .def_readwrite("field", &StoredModel::field)
        .def_readwrite("family", &StoredModel::family)
        .def_readwrite("hmm", &StoredModel::hmm)
        .def_readonly("iters", &StoredModel::iters)
        .def_readonly("final_loglik", &StoredModel::final_loglik);
    m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
    m.def("load_model", &load_model, py::arg("path"));

    py::class_<RocPoint>(m, "RocPoint")
        .def_readonly("fpr", &RocPoint::fpr)
        .def_readonly("tpr", &RocPoint::tpr)
        .def_readonly("threshold", &RocPoint::threshold);
    py::class_<RocCurve>(m, "RocCurve").def_readonly("points", &RocCurve::points);
    m.def(
        "roc_curve",
        [](const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
            return roc_curve(scores, labels);
        },
        py::arg("scores"), py::arg("labels"));
    m.def(
        "auc",
        [](const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
            return auc_from_scores(scores, labels);
        },
        py::arg("scores"), py::arg("labels"));
    m.def(
        "detect_orientation",
        [](const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
            return detect_orientation(scores, labels);
        },
        py::arg("scores"), py::arg("labels"));
    m.def(
        "cohen_kappa",
        [](const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
            return cohen_kappa(a, b);
        },
        py::arg("a"), py::arg("b"));
    m.def(
        "weighted_kappa",
        [](const std::vector<double>& a, const std::vector<double>& b, int bins) {
            return weighted_kappa(a, b, bins);
        },
        py::arg("a"), py::arg("b"), py::arg("bins") = 10);

    m.def(
        "apply_boolean",
        [](const std::string& op, const std::vector<std::uint8_t>& a,
           const std::vector<std::uint8_t>& b) {
            return apply_boolean(bool_op_from_string(op), a, b);
        },
        py::arg("op"), py::arg("a"), py::arg("b"));

    py::class_<CrispRef>(m, "CrispRef")
        .def_readonly("detector", &CrispRef::detector)
        .def_readonly("threshold", &CrispRef::threshold);
    py::class_<RuleStep>(m, "RuleStep")
        .def_property_readonly("op", [](const RuleStep& s) { return std::string(to_string(s.op)); })
        .def_readonly("ref", &RuleStep::ref);
    py::class_<CombinationRule>(m, "CombinationRule")
        .def_readonly("lead", &CombinationRule::lead)
        .def_readonly("steps", &CombinationRule::steps)
        .def_readonly("fpr", &CombinationRule::fpr)
        .def_readonly("tpr", &CombinationRule::tpr);

    m.def(
        "wpibc_select_base",
        [](const std::vector<std::vector<double>>& scores, const std::vector<std::uint8_t>& labels,
           double tau, int bins) { return wpibc_select_base(scores, labels, tau, bins); },
        py::arg("scores_per_detector"), py::arg("labels"), py::arg("tau") = 0.9,
        py::arg("kappa_bins") = 10);
    m.def(
        "wpibc_select_crisp",
        [](const std::vector<double>& scores, const std::vector<std::uint8_t>& labels, int count) {
            return wpibc_select_crisp(scores, labels, count);
        },
        py::arg("scores"), py::arg("labels"), py::arg("select_count") = 10);
    m.def(
        "wpibc_build",
        [](const std::vector<std::vector<double>>& scores, const std::vector<std::uint8_t>& labels,
           double tau, int select_per_base, int bins) {
            WpibcConfig config;
            config.tau = tau;
            config.select_per_base = select_per_base;
            config.kappa_bins = bins;
            WpibcResult result = wpibc_build(scores, labels, config);
            return py::make_tuple(result.base_indices, result.composite.rules,
                                  result.composite.auc);
        },
        py::arg("scores_per_detector"), py::arg("labels"), py::arg("tau") = 0.9,
        py::arg("select_per_base") = 10, py::arg("kappa_bins") = 10);

    py::class_<EnsembleModel>(m, "EnsembleModel")
        .def_readonly("field", &EnsembleModel::field)
        .def_readonly("method", &EnsembleModel::method)
        .def_readonly("rules", &EnsembleModel::rules)
        .def_readonly("operating_rule", &EnsembleModel::operating_rule)
        .def_property_readonly("bases", [](const EnsembleModel& e) {
            std::vector<std::pair<std::string, int>> out;
            for (const auto& base : e.bases) out.emplace_back(base.model_file, base.orientation);
            return out;
        });
    m.def("load_ensemble", &load_ensemble, py::arg("path"));
    m.def("save_ensemble", &save_ensemble, py::arg("ensemble"), py::arg("path"));
    m.def(
        "ensemble_predict",
        [](const EnsembleModel& ensemble, const std::vector<double>& scores) {
            EnsembleDecision decision = ensemble_predict(ensemble, scores);
            return py::make_tuple(decision.decision, decision.rule_trace);
        },
        py::arg("ensemble"), py::arg("base_scores"));

    py::class_<TraceRecord>(m, "TraceRecord")
        .def(py::init<>())
        .def_readwrite("trace", &TraceRecord::trace)
        .def_readwrite("labels", &TraceRecord::labels);
    m.def("read_traces_jsonl", &read_traces_jsonl, py::arg("path"));
    m.def("write_traces_jsonl", &write_traces_jsonl, py::arg("path"), py::arg("records"));

    py::class_<Prediction>(m, "Prediction")
        .def_readonly("decision", &Prediction::decision)
        .def_readonly("reason", &Prediction::reason)
        .def_readonly("base_scores", &Prediction::base_scores)
        .def_readonly("rule_trace", &Prediction::rule_trace);

    py::class_<LoadedEnsemble>(m, "LoadedEnsemble")
        .def_readonly("ensemble", &LoadedEnsemble::ensemble);
    m.def("load_ensemble_with_models", &load_ensemble_with_models, py::arg("ensemble_path"),
          py::arg("artifacts_root"));
    m.def("predict_trace", &predict_trace, py::arg("loaded"), py::arg("trace"));
    m.def(
        "predict_report",
        [](const LoadedEnsemble& loaded, const std::string& report_id, const std::string& text,
           const std::string& dialect, const std::string& policy) {
            RawBugReport report;
            report.id = report_id;
            report.text = text;
            return predict_report(loaded, report, dialect_from_string(dialect),
                                  trace_policy_from_string(policy));
        },
        py::arg("loaded"), py::arg("report_id"), py::arg("text"), py::arg("dialect"),
        py::arg("policy") = "first");

    m.def(
        "run_field_pipeline",
        [](const std::vector<TraceRecord>& records, const std::string& field,
           const std::string& states, const std::string& method, int max_iters, int restarts,
           std::uint64_t seed, double tau, int select_per_base, double mtfpr, int jobs,
           const std::string& save_to) {
            PipelineConfig config;
            config.grid = parse_state_grid(states);
            config.train.max_iters = max_iters;
            config.train.restarts = restarts;
            config.train.seed = seed;
            config.fusion.method = method;
            config.fusion.tau = tau;
            config.fusion.select_per_base = select_per_base;
            config.mtfpr = mtfpr;
            config.jobs = jobs;
            FieldArtifacts artifacts = run_field_pipeline(records, field, config);
            if (!save_to.empty()) save_field_artifacts(artifacts, save_to);
            py::dict out;
            out["field"] = field;
            out["method"] = method;
            out["n_models"] = artifacts.models.size();
            out["n_bases"] = artifacts.built.ensemble.bases.size();
            out["validation_auc"] = artifacts.built.composite.auc;
            out["test_auc"] = artifacts.eval.ensemble_auc;
            out["best_f"] = artifacts.eval.best.metrics.f;
            out["best_precision"] = artifacts.eval.best.metrics.precision;
            out["best_recall"] = artifacts.eval.best.metrics.recall;
            out["best_single_auc"] = artifacts.eval.best_single_auc;
            out["best_single"] = artifacts.eval.best_single_ref;
            return out;
        },
        py::arg("records"), py::arg("field"), py::arg("states") = "10..200:10",
        py::arg("method") = "wpibc", py::arg("max_iters") = 100, py::arg("restarts") = 3,
        py::arg("seed") = 42, py::arg("tau") = 0.9, py::arg("select_per_base") = 10,
        py::arg("mtfpr") = 0.1, py::arg("jobs") = 1, py::arg("save_to") = "");
}
