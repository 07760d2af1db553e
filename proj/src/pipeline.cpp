#include "hmmfuse/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <functional>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "hmmfuse/error.hpp"
#include "hmmfuse/rng.hpp"

namespace hmmfuse {

namespace fs = std::filesystem;

namespace {

int parse_int(std::string_view text) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw DataError("bad integer in state grid: '" + std::string(text) + "'");
    return value;
}

void run_jobs(std::size_t count, int jobs, const std::function<void(std::size_t)>& work) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) work(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                work(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int width = std::min<int>(jobs, static_cast<int>(count));
    pool.reserve(width);
    for (int t = 0; t < width; ++t) pool.emplace_back(worker);
    for (auto& thread : pool) thread.join();
    if (failure) std::rethrow_exception(failure);
}

std::vector<StackTrace> traces_for_ids(const std::vector<StackTrace>& pool,
                                       const std::vector<std::string>& ids) {
    std::unordered_map<std::string, const StackTrace*> index;
    index.reserve(pool.size());
    for (const auto& trace : pool) index.emplace(trace.report_id, &trace);
    std::vector<StackTrace> out;
    out.reserve(ids.size());
    for (const auto& id : ids) out.push_back(*index.at(id));
    return out;
}

}  // namespace

StateGrid default_state_grid() {
    StateGrid grid;
    for (int n = 10; n <= 200; n += 10) grid.states.push_back(n);
    return grid;
}

StateGrid parse_state_grid(std::string_view text) {
    StateGrid grid;
    if (auto colon = text.find(':'); text.find("..") != std::string_view::npos) {
        std::size_t dots = text.find("..");
        int from = parse_int(text.substr(0, dots));
        std::string_view rest = text.substr(dots + 2);
        int step = 10;
        if (colon != std::string_view::npos) {
            rest = text.substr(dots + 2, colon - dots - 2);
            step = parse_int(text.substr(colon + 1));
        }
        int to = parse_int(rest);
        if (from < 1 || to < from || step < 1) throw DataError("bad state grid range");
        for (int n = from; n <= to; n += step) grid.states.push_back(n);
    } else {
        std::size_t start = 0;
        while (start <= text.size()) {
            std::size_t comma = text.find(',', start);
            std::string_view item = text.substr(
                start, comma == std::string_view::npos ? text.size() - start : comma - start);
            if (!item.empty()) grid.states.push_back(parse_int(item));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
    }
    if (grid.states.empty()) throw DataError("state grid is empty");
    for (std::size_t i = 1; i < grid.states.size(); ++i)
        if (grid.states[i] <= grid.states[i - 1])
            throw DataError("state grid must be strictly increasing");
    if (grid.states.front() < 1) throw DataError("state counts must be positive");
    return grid;
}

std::vector<double> score_traces(const Hmm& model, const std::vector<StackTrace>& traces) {
    std::vector<double> scores;
    scores.reserve(traces.size());
    for (const auto& trace : traces) {
        ObservationSequence seq = encode(trace, model.vocab);
        scores.push_back(score_sequence(model, seq.symbols));
    }
    return scores;
}

std::string model_file_name(Family family, int n_states) {
    return std::string(to_string(family)) + "-N" + std::to_string(n_states) + ".json";
}

std::vector<StoredModel> train_field_models(const FieldDataset& data, const FieldSplit& split,
                                            const StateGrid& grid, const TrainConfig& config,
                                            int jobs) {
    struct Job {
        Family family;
        int n_states;
    };
    std::vector<Job> plan;
    for (Family family : {Family::R, Family::NR})
        for (int n : grid.states) plan.push_back({family, n});

    // Each family trains on its own 70% and owns its vocabulary.
    std::vector<StackTrace> r_train = traces_for_ids(data.reassigned, split.reassigned.train);
    std::vector<StackTrace> nr_train =
        traces_for_ids(data.not_reassigned, split.not_reassigned.train);
    Vocabulary r_vocab = build_vocabulary(r_train);
    Vocabulary nr_vocab = build_vocabulary(nr_train);

    auto encode_all = [](const std::vector<StackTrace>& traces, const Vocabulary& vocab) {
        std::vector<ObservationSequence> seqs;
        seqs.reserve(traces.size());
        for (const auto& trace : traces) seqs.push_back(encode(trace, vocab));
        return seqs;
    };
    std::vector<ObservationSequence> r_seqs = encode_all(r_train, r_vocab);
    std::vector<ObservationSequence> nr_seqs = encode_all(nr_train, nr_vocab);

    std::vector<StoredModel> models(plan.size());
    run_jobs(plan.size(), jobs, [&](std::size_t i) {
        const Job& job = plan[i];
        const bool is_r = job.family == Family::R;
        const auto& seqs = is_r ? r_seqs : nr_seqs;
        const auto& vocab = is_r ? r_vocab : nr_vocab;

        TrainConfig model_config = config;
        model_config.seed = derive_seed(
            config.seed, data.field + "/" + to_string(job.family) + "/N" + std::to_string(job.n_states));

        TrainLog log;
        Hmm hmm = baum_welch_train(seqs, job.n_states, vocab.size(), model_config, &log);
        hmm.vocab = vocab;

        StoredModel model;
        model.field = data.field;
        model.family = std::string(to_string(job.family));
        model.hmm = std::move(hmm);
        model.seed = model_config.seed;
        model.iters = log.iters;
        model.final_loglik = log.final_loglik;
        models[i] = std::move(model);
    });
    return models;
}

LabeledSet validation_set(const FieldDataset& data, const FieldSplit& split) {
    LabeledSet out;
    auto r = traces_for_ids(data.reassigned, split.reassigned.validation);
    auto nr = traces_for_ids(data.not_reassigned, split.not_reassigned.validation);
    out.traces.insert(out.traces.end(), r.begin(), r.end());
    out.labels.insert(out.labels.end(), r.size(), 1);
    out.traces.insert(out.traces.end(), nr.begin(), nr.end());
    out.labels.insert(out.labels.end(), nr.size(), 0);
    return out;
}

LabeledSet ensemble_test_set(const FieldDataset& data, const FieldSplit& split) {
    LabeledSet out;
    auto r = traces_for_ids(data.reassigned, split.reassigned.test);
    auto nr = traces_for_ids(data.not_reassigned, split.not_reassigned.test);
    out.traces.insert(out.traces.end(), r.begin(), r.end());
    out.labels.insert(out.labels.end(), r.size(), 1);
    out.traces.insert(out.traces.end(), nr.begin(), nr.end());
    out.labels.insert(out.labels.end(), nr.size(), 0);
    return out;
}

namespace {

int best_rule_by_f(const std::vector<CombinationRule>& rules, long long n_pos, long long n_neg) {
    int best = -1;
    Prf best_metrics;
    for (std::size_t i = 0; i < rules.size(); ++i) {
        Prf m = point_to_metrics(rules[i].fpr, rules[i].tpr, n_pos, n_neg);
        bool better = best < 0 || m.f > best_metrics.f ||
                      (m.f == best_metrics.f && (rules[i].fpr < rules[best].fpr ||
                                                 (rules[i].fpr == rules[best].fpr &&
                                                  rules[i].tpr < rules[best].tpr)));
        if (better) {
            best = static_cast<int>(i);
            best_metrics = m;
        }
    }
    return best;
}

}  // namespace

BuiltEnsemble build_field_ensemble(const std::vector<StoredModel>& models,
                                   const std::vector<std::string>& model_refs,
                                   const LabeledSet& validation, const FusionConfig& config) {
    if (models.empty()) throw TooFewDetectors("no models to combine");
    if (models.size() != model_refs.size())
        throw LengthMismatch("model list and reference list differ in size");

    long long n_pos = 0, n_neg = 0;
    for (std::uint8_t l : validation.labels) (l ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0)
        throw SingleClassValidation("validation set needs both classes");

    // Oriented validation scores per detector.
    std::vector<std::vector<double>> scores(models.size());
    std::vector<int> orientation(models.size(), +1);
    for (std::size_t d = 0; d < models.size(); ++d) {
        scores[d] = score_traces(models[d].hmm, validation.traces);
        orientation[d] = detect_orientation(scores[d], validation.labels);
        if (orientation[d] < 0)
            for (double& s : scores[d]) s = -s;
    }

    BuiltEnsemble out;
    out.base_aucs.reserve(models.size());
    for (std::size_t d = 0; d < models.size(); ++d)
        out.base_aucs.push_back(auc_from_scores(scores[d], validation.labels));

    if (config.method == "wpibc") {
        WpibcConfig wpibc;
        wpibc.tau = config.tau;
        wpibc.select_per_base = config.select_per_base;
        wpibc.kappa_bins = config.kappa_bins;
        wpibc.ibc = config.ibc;
        WpibcResult result = wpibc_build(scores, validation.labels, wpibc);
        out.base_indices = std::move(result.base_indices);
        out.composite = std::move(result.composite);
        out.selected_crisp = result.selected_crisp;
    } else if (config.method == "ibc") {
        out.base_indices.resize(models.size());
        for (std::size_t d = 0; d < models.size(); ++d) out.base_indices[d] = static_cast<int>(d);
        std::vector<std::vector<double>> thresholds;
        thresholds.reserve(models.size());
        for (const auto& s : scores) {
            thresholds.push_back(candidate_thresholds(s));
            out.selected_crisp += thresholds.back().size();
        }
        out.composite = ibc_combine(scores, validation.labels, thresholds, config.ibc);
    } else if (config.method == "bbc2") {
        out.base_indices.resize(models.size());
        for (std::size_t d = 0; d < models.size(); ++d) out.base_indices[d] = static_cast<int>(d);
        // Pairing every threshold of every detector is quadratic in |V|;
        // the kappa-ranked subset keeps the pool at select_per_base each.
        std::vector<CrispRef> crisp;
        for (std::size_t d = 0; d < models.size(); ++d)
            for (double threshold :
                 wpibc_select_crisp(scores[d], validation.labels, config.select_per_base))
                crisp.push_back({static_cast<int>(d), threshold});
        out.selected_crisp = crisp.size();
        out.composite = bbc2_combine(crisp, scores, validation.labels);
    } else {
        throw DataError("unknown fusion method: " + config.method);
    }

    out.ensemble.field = models.front().field;
    out.ensemble.method = config.method;
    for (int idx : out.base_indices)
        out.ensemble.bases.push_back({model_refs[idx], orientation[idx]});
    out.ensemble.rules = out.composite.rules;
    out.ensemble.operating_rule = best_rule_by_f(out.ensemble.rules, n_pos, n_neg);
    return out;
}

std::pair<std::vector<StoredModel>, std::vector<std::string>> load_field_models(
    const std::string& root, const std::string& field) {
    fs::path dir = fs::path(root) / "models" / field;
    if (!fs::is_directory(dir)) throw IoError("no model directory at " + dir.string());

    struct Found {
        Family family;
        int n_states;
        std::string name;
    };
    std::vector<Found> found;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
        std::string stem = entry.path().stem().string();
        auto dash = stem.find("-N");
        if (dash == std::string::npos) continue;
        try {
            found.push_back({family_from_string(stem.substr(0, dash)),
                             std::stoi(stem.substr(dash + 2)), entry.path().filename().string()});
        } catch (const std::exception&) {
            continue;  // unrelated file
        }
    }
    if (found.empty()) throw IoError("no model files under " + dir.string());
    std::sort(found.begin(), found.end(), [](const Found& a, const Found& b) {
        if (a.family != b.family) return a.family == Family::R;
        return a.n_states < b.n_states;
    });

    std::pair<std::vector<StoredModel>, std::vector<std::string>> out;
    for (const auto& f : found) {
        out.first.push_back(load_model((dir / f.name).string()));
        out.second.push_back((fs::path("models") / field / f.name).string());
    }
    return out;
}

LoadedEnsemble load_ensemble_with_models(const std::string& ensemble_path,
                                         const std::string& artifacts_root) {
    LoadedEnsemble loaded;
    loaded.ensemble = load_ensemble(ensemble_path);
    loaded.bases.reserve(loaded.ensemble.bases.size());
    for (const auto& base : loaded.ensemble.bases)
        loaded.bases.push_back(load_model((fs::path(artifacts_root) / base.model_file).string()));
    return loaded;
}

std::vector<double> base_scores_for_trace(const LoadedEnsemble& loaded, const StackTrace& trace) {
    std::vector<double> scores;
    scores.reserve(loaded.bases.size());
    for (std::size_t b = 0; b < loaded.bases.size(); ++b) {
        ObservationSequence seq = encode(trace, loaded.bases[b].hmm.vocab);
        double s = score_sequence(loaded.bases[b].hmm, seq.symbols);
        scores.push_back(loaded.ensemble.bases[b].orientation < 0 ? -s : s);
    }
    return scores;
}

Prediction predict_trace(const LoadedEnsemble& loaded, const StackTrace& trace) {
    Prediction out;
    if (trace.frames.empty()) {
        out.reason = "no-stack-trace";
        return out;
    }
    out.base_scores = base_scores_for_trace(loaded, trace);
    EnsembleDecision decision = ensemble_predict(loaded.ensemble, out.base_scores);
    out.decision = decision.decision;
    out.rule_trace = std::move(decision.rule_trace);
    return out;
}

Prediction predict_report(const LoadedEnsemble& loaded, const RawBugReport& report,
                          Dialect dialect, TracePolicy policy, const ExtractOptions& options) {
    auto traces = extract_traces(report.text, dialect, options);
    auto selected = select_trace(traces, policy);
    if (!selected) {
        Prediction out;
        out.reason = "no-stack-trace";
        return out;
    }
    selected->report_id = report.id;
    return predict_trace(loaded, *selected);
}

FieldEvaluation evaluate_field(const LoadedEnsemble& loaded,
                               const std::vector<StoredModel>& all_models,
                               const std::vector<std::string>& model_refs,
                               const LabeledSet& validation, const LabeledSet& test,
                               double mtfpr) {
    if (all_models.size() != model_refs.size())
        throw LengthMismatch("model list and reference list differ in size");

    FieldEvaluation eval;
    eval.field = loaded.ensemble.field;
    eval.method = loaded.ensemble.method;
    eval.mtfpr = mtfpr;
    for (std::uint8_t l : test.labels) (l ? eval.n_pos : eval.n_neg) += 1;

    // Strongest single model: oriented on validation, ranked by test AUC.
    for (std::size_t d = 0; d < all_models.size(); ++d) {
        std::vector<double> val_scores = score_traces(all_models[d].hmm, validation.traces);
        int orientation = detect_orientation(val_scores, validation.labels);
        std::vector<double> test_scores = score_traces(all_models[d].hmm, test.traces);
        if (orientation < 0)
            for (double& s : test_scores) s = -s;
        RocCurve curve = roc_curve(test_scores, test.labels);
        double a = auc(curve);
        if (eval.best_single_ref.empty() || a > eval.best_single_auc) {
            eval.best_single_auc = a;
            eval.best_single_curve = std::move(curve);
            eval.best_single_ref = model_refs[d];
        }
    }

    // Replay every stored rule on the test scores.
    std::vector<std::vector<double>> base_scores(loaded.bases.size());
    for (std::size_t b = 0; b < loaded.bases.size(); ++b) {
        base_scores[b] = score_traces(loaded.bases[b].hmm, test.traces);
        if (loaded.ensemble.bases[b].orientation < 0)
            for (double& s : base_scores[b]) s = -s;
    }
    std::vector<RocPoint> points;
    points.reserve(loaded.ensemble.rules.size());
    for (std::size_t r = 0; r < loaded.ensemble.rules.size(); ++r) {
        std::vector<std::uint8_t> response =
            evaluate_rule(loaded.ensemble.rules[r], base_scores);
        long long tp = 0, fp = 0;
        for (std::size_t i = 0; i < response.size(); ++i)
            if (response[i]) (test.labels[i] ? tp : fp) += 1;
        points.push_back({static_cast<double>(fp) / static_cast<double>(eval.n_neg),
                          static_cast<double>(tp) / static_cast<double>(eval.n_pos),
                          static_cast<double>(r)});
    }
    eval.ensemble_curve = curve_from_points(std::move(points));
    eval.ensemble_auc = auc(eval.ensemble_curve);
    eval.best = best_f_point(eval.ensemble_curve, eval.n_pos, eval.n_neg);
    eval.best_rule = std::isfinite(eval.best.point.threshold)
                         ? static_cast<int>(eval.best.point.threshold)
                         : -1;
    eval.improvement = mtfpr_improvement(eval.ensemble_curve, eval.best_single_curve, mtfpr);
    return eval;
}

FieldArtifacts run_field_pipeline(const std::vector<TraceRecord>& records,
                                  const std::string& field, const PipelineConfig& config) {
    FieldDataset data = collect_field_dataset(records, field);
    FieldArtifacts artifacts;
    artifacts.split = split_field(data, config.train.seed);
    artifacts.models =
        train_field_models(data, artifacts.split, config.grid, config.train, config.jobs);
    for (const auto& model : artifacts.models)
        artifacts.model_refs.push_back(
            (fs::path("models") / field /
             model_file_name(family_from_string(model.family), model.hmm.num_states))
                .string());

    LabeledSet validation = validation_set(data, artifacts.split);
    artifacts.built =
        build_field_ensemble(artifacts.models, artifacts.model_refs, validation, config.fusion);

    LoadedEnsemble loaded;
    loaded.ensemble = artifacts.built.ensemble;
    for (int idx : artifacts.built.base_indices) loaded.bases.push_back(artifacts.models[idx]);

    LabeledSet test = ensemble_test_set(data, artifacts.split);
    artifacts.eval = evaluate_field(loaded, artifacts.models, artifacts.model_refs, validation,
                                    test, config.mtfpr);
    return artifacts;
}

void save_field_artifacts(const FieldArtifacts& artifacts, const std::string& root) {
    const std::string field = artifacts.split.field;
    save_field_split(artifacts.split, (fs::path(root) / "splits" / (field + ".json")).string());
    for (std::size_t i = 0; i < artifacts.models.size(); ++i)
        save_model(artifacts.models[i], (fs::path(root) / artifacts.model_refs[i]).string());
    save_ensemble(artifacts.built.ensemble,
                  (fs::path(root) / "ensembles" / (field + ".json")).string());
}

}  // namespace hmmfuse
