// Acceptance suite: one check per release criterion, one PASS/FAIL line each.
// Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "../unit/helpers.hpp"
#include "hmmfuse/ensemble.hpp"
#include "hmmfuse/kappa.hpp"
#include "hmmfuse/metrics.hpp"
#include "hmmfuse/pipeline.hpp"

using namespace hmmfuse;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;
};

#define EXPECT(cond, msg)                                    \
    do {                                                     \
        if (!(cond)) {                                       \
            out.pass = false;                                \
            out.detail << "    " << msg << "\n";             \
        }                                                    \
    } while (0)

// --- 1. scaled forward vs. brute-force path enumeration ---------------------
Outcome forward_oracle() {
    Outcome out;
    int checked = 0;
    for (std::uint64_t seed = 1; checked < 200; ++seed) {
        Rng rng(seed * 6151);
        int n = 1 + static_cast<int>(rng.next_below(3));
        int m = 2 + static_cast<int>(rng.next_below(3));
        int t = 1 + static_cast<int>(rng.next_below(6));
        Hmm hmm = testutil::random_hmm(n, m, seed);
        std::vector<int> seq(t);
        for (int i = 0; i < t; ++i) seq[i] = static_cast<int>(rng.next_below(m));
        double fast = forward_log_likelihood(hmm, seq);
        double slow = testutil::brute_force_log_likelihood(hmm, seq);
        EXPECT(std::fabs(fast - slow) <= 1e-9,
               "model " << seed << ": scaled " << fast << " vs enumerated " << slow);
        ++checked;
    }
    EXPECT(checked == 200, "expected 200 models, ran " << checked);
    return out;
}

// --- 2. EM monotonicity and stochasticity over random corpora ---------------
Outcome em_monotonicity() {
    Outcome out;
    const int n_states[] = {1, 2, 5};
    for (int corpus = 0; corpus < 20; ++corpus) {
        Rng rng(9000 + corpus);
        int m = 3 + static_cast<int>(rng.next_below(3));
        auto seqs = testutil::random_sequences(5 + static_cast<int>(rng.next_below(6)), 12, m,
                                               17 * corpus + 3);
        int n = n_states[corpus % 3];
        Hmm hmm = init_hmm(n, m, 40 + corpus);
        double prev = -std::numeric_limits<double>::infinity();
        for (int iter = 0; iter < 50; ++iter) {
            double loglik = em_step(hmm, seqs);
            EXPECT(loglik >= prev - 1e-8, "corpus " << corpus << " iter " << iter
                                                    << ": loglik fell from " << prev << " to "
                                                    << loglik);
            prev = loglik;
            double pi = 0;
            for (double v : hmm.initial) pi += v;
            EXPECT(std::fabs(pi - 1.0) <= 1e-9, "corpus " << corpus << ": pi sum " << pi);
            for (const auto& row : hmm.transition) {
                double s = 0;
                for (double v : row) s += v;
                EXPECT(std::fabs(s - 1.0) <= 1e-9, "corpus " << corpus << ": a row sum " << s);
            }
            for (const auto& row : hmm.emission) {
                double s = 0;
                for (double v : row) s += v;
                EXPECT(std::fabs(s - 1.0) <= 1e-9, "corpus " << corpus << ": b row sum " << s);
            }
            if (!out.pass) return out;
        }
    }
    return out;
}

// --- 3. trapezoidal AUC vs. Mann-Whitney pair statistic ---------------------
Outcome auc_oracle() {
    Outcome out;
    int checked = 0;
    for (std::uint64_t seed = 1; checked < 500; ++seed) {
        Rng rng(seed * 131071);
        std::size_t n = 2 + rng.next_below(19);
        std::vector<double> scores(n);
        std::vector<std::uint8_t> labels(n);
        bool has_pos = false, has_neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = static_cast<double>(rng.next_below(8)) / 7.0;  // force ties
            labels[i] = rng.next_below(2) ? 1 : 0;
            (labels[i] ? has_pos : has_neg) = true;
        }
        if (!has_pos || !has_neg) continue;
        double trapezoid = auc_from_scores(scores, labels);
        double pairs = testutil::pair_count_auc(scores, labels);
        EXPECT(std::fabs(trapezoid - pairs) <= 1e-12,
               "dataset " << seed << ": trapezoid " << trapezoid << " vs pairs " << pairs);
        ++checked;
    }
    EXPECT(checked == 500, "expected 500 datasets, ran " << checked);
    return out;
}

// --- 4. kappa hand oracles ---------------------------------------------------
Outcome kappa_oracles() {
    Outcome out;
    Rng rng(8);
    std::vector<std::uint8_t> random_vec(25);
    for (auto& v : random_vec) v = rng.next_below(2) ? 1 : 0;
    EXPECT(cohen_kappa(random_vec, random_vec) == 1.0, "kappa(a,a) != 1 for a random vector");
    std::vector<std::uint8_t> constant(10, 1);
    EXPECT(cohen_kappa(constant, constant) == 1.0, "kappa(a,a) != 1 for a constant vector");

    std::vector<std::uint8_t> a{1, 1, 0, 0}, b{1, 0, 1, 0};
    EXPECT(cohen_kappa(a, b) == 0.0, "chance-level contingency should give exactly 0");
    std::vector<std::uint8_t> c{1, 0}, d{0, 1};
    EXPECT(cohen_kappa(c, d) == -1.0, "perfect disagreement should give exactly -1");

    std::vector<double> fwd{1, 2, 3, 4}, rev{4, 3, 2, 1};
    EXPECT(weighted_kappa(fwd, rev, 2) == -1.0, "Q=2 reversal should give exactly -1");
    return out;
}

// --- 5. fusion dominance and bit-exact rule replay ---------------------------
Outcome ensemble_dominance() {
    Outcome out;
    for (int trial = 0; trial < 50; ++trial) {
        Rng rng(5000 + trial);
        std::size_t n_det = 2 + rng.next_below(5);
        std::size_t n_val = 20 + rng.next_below(41);
        std::vector<std::uint8_t> labels(n_val);
        for (auto& l : labels) l = rng.next_below(2) ? 1 : 0;
        labels[0] = 1;
        labels[1] = 0;

        std::vector<std::vector<double>> scores(n_det);
        for (auto& s : scores) {
            s.resize(n_val);
            for (double& v : s) v = rng.next_double();
        }
        // Orient, as the pipeline would.
        double best_auc = 0;
        for (auto& s : scores) {
            if (detect_orientation(s, labels) < 0)
                for (double& v : s) v = -v;
            best_auc = std::max(best_auc, auc_from_scores(s, labels));
        }

        std::vector<std::vector<double>> thresholds;
        for (const auto& s : scores) thresholds.push_back(candidate_thresholds(s));
        CompositeRoc ibc = ibc_combine(scores, labels, thresholds);
        EXPECT(ibc.auc >= best_auc - 1e-9, "trial " << trial << ": ibc auc " << ibc.auc
                                                    << " below best single " << best_auc);

        WpibcResult wpibc = wpibc_build(scores, labels, {});
        EXPECT(wpibc.composite.auc >= best_auc - 1e-9,
               "trial " << trial << ": wpibc auc " << wpibc.composite.auc
                        << " below best single " << best_auc);

        long long n_pos = 0, n_neg = 0;
        for (auto l : labels) (l ? n_pos : n_neg) += 1;
        auto replay_exact = [&](const std::vector<CombinationRule>& rules,
                                const std::vector<std::vector<double>>& det_scores,
                                const char* tag) {
            for (const auto& rule : rules) {
                auto response = evaluate_rule(rule, det_scores);
                long long tp = 0, fp = 0;
                for (std::size_t i = 0; i < response.size(); ++i)
                    if (response[i]) (labels[i] ? tp : fp) += 1;
                double fpr = static_cast<double>(fp) / static_cast<double>(n_neg);
                double tpr = static_cast<double>(tp) / static_cast<double>(n_pos);
                EXPECT(fpr == rule.fpr && tpr == rule.tpr,
                       "trial " << trial << " " << tag << ": replay (" << fpr << "," << tpr
                                << ") vs stored (" << rule.fpr << "," << rule.tpr << ")");
            }
        };
        replay_exact(ibc.rules, scores, "ibc");
        std::vector<std::vector<double>> base_scores;
        for (int idx : wpibc.base_indices) base_scores.push_back(scores[idx]);
        replay_exact(wpibc.composite.rules, base_scores, "wpibc");
        if (!out.pass) return out;
    }
    return out;
}

// --- 6. duplicate pruning bounds the phase-3 pool ----------------------------
Outcome pruning() {
    Outcome out;
    const std::size_t n_val = 80;
    Rng rng(606);
    std::vector<std::uint8_t> labels(n_val);
    for (auto& l : labels) l = rng.next_below(2) ? 1 : 0;
    labels[0] = 1;
    labels[1] = 0;

    std::vector<std::vector<double>> distinct(10);
    for (auto& s : distinct) {
        s.resize(n_val);
        for (double& v : s) v = rng.next_double();
    }
    std::vector<std::vector<double>> pool;
    for (int copy = 0; copy < 4; ++copy)
        for (const auto& s : distinct) pool.push_back(s);

    WpibcConfig config;  // tau 0.9, D 10
    auto bases = wpibc_select_base(pool, labels, config.tau, config.kappa_bins);
    EXPECT(bases.size() == 10, "expected exactly 10 bases from 10x4 duplicates, got "
                                   << bases.size());

    WpibcResult result = wpibc_build(pool, labels, config);
    EXPECT(result.base_indices.size() == 10,
           "wpibc_build selected " << result.base_indices.size() << " bases");
    EXPECT(result.selected_crisp <= 10 * static_cast<std::size_t>(config.select_per_base),
           "phase 3 pool " << result.selected_crisp << " exceeds 10*D");
    return out;
}

// --- 7. split arithmetic of the published worked example ---------------------
Outcome split_arithmetic() {
    Outcome out;
    FieldDataset data;
    data.field = "product";
    for (int i = 0; i < 1704; ++i)
        data.reassigned.push_back(testutil::make_trace("r" + std::to_string(i), {"a.b.c"}));
    for (int i = 0; i < 9156; ++i)
        data.not_reassigned.push_back(testutil::make_trace("n" + std::to_string(i), {"d.e.f"}));
    DatasetSplit split = split_dataset(data, Family::NR, 42);
    EXPECT(split.train.size() == 6409, "train " << split.train.size() << " != 6409");
    EXPECT(split.validation.size() == 1086, "validation " << split.validation.size() << " != 1086");
    EXPECT(split.test.size() == 3365, "test " << split.test.size() << " != 3365");
    return out;
}

// --- 8. published-number consistency -----------------------------------------
Outcome published_numbers() {
    Outcome out;
    struct Row {
        const char* field;
        const char* dataset;
        double precision, recall, f;
    };
    // Accuracy table rows as printed (percent / 100).
    const Row rows[] = {
        {"Assignee", "Eclipse", 0.8015, 0.9712, 0.8782},
        {"Assignee", "Gnome", 0.8269, 0.9591, 0.8882},
        {"Component", "Eclipse", 0.6250, 0.6787, 0.6500},
        {"Component", "Gnome", 0.4561, 1.0000, 0.6265},
        {"OS", "Eclipse", 0.3682, 1.0000, 0.5383},
        {"OS", "Gnome", 0.2871, 1.0000, 0.5581},
        {"Priority", "Eclipse", 0.5475, 0.7563, 0.6352},
        {"Priority", "Gnome", 0.2632, 0.5556, 0.3571},
        {"Product", "Eclipse", 0.5757, 0.9890, 0.7278},
        {"Product", "Gnome", 0.4561, 0.4063, 0.4298},
        {"Severity", "Eclipse", 0.2104, 0.7287, 0.3266},
        {"Severity", "Gnome", 0.2217, 0.6515, 0.3308},
        {"Version", "Eclipse", 0.6119, 0.7200, 0.6616},
        {"Version", "Gnome", 0.5088, 0.5800, 0.5421},
        {"Status", "Eclipse", 0.5741, 0.2672, 0.3647},
        {"Status", "Gnome", 0.2857, 0.3478, 0.3137},
    };
    for (const auto& row : rows) {
        double f = 2.0 * row.precision * row.recall / (row.precision + row.recall);
        EXPECT(std::fabs(f - row.f) <= 0.0005,
               row.field << "/" << row.dataset << ": recomputed F " << f << " vs published "
                         << row.f << " (|diff| " << std::fabs(f - row.f) << ")");
    }

    RocCurve ensemble = curve_from_points({{0.12, 0.32, 0}});
    RocCurve single = curve_from_points({{0.12, 0.26, 0}});
    MtfprImprovement improvement = mtfpr_improvement(ensemble, single, 0.12);
    EXPECT(improvement.improvement.has_value(), "improvement should be defined");
    if (improvement.improvement) {
        EXPECT(std::fabs(*improvement.improvement - 0.2308) <= 5e-5,
               "improvement " << *improvement.improvement << " vs published 23%");
        EXPECT(std::llround(*improvement.improvement * 100) == 23,
               "improvement does not round to the published 23%");
    }
    return out;
}

// --- 9. end-to-end synthetic pipeline ----------------------------------------
Outcome end_to_end() {
    Outcome out;
    // Two generators over one 30-symbol alphabet with disjoint dominant
    // supports (0..12 vs 15..29) and a small cross-leak.
    const int n_symbols = 30;
    auto generator = [&](int low, int high, std::uint64_t seed) {
        Rng rng(seed);
        Hmm hmm;
        hmm.num_states = 3;
        hmm.num_symbols = n_symbols;
        hmm.initial = {0.5, 0.3, 0.2};
        hmm.transition = {{0.6, 0.3, 0.1}, {0.2, 0.6, 0.2}, {0.3, 0.3, 0.4}};
        for (int i = 0; i < 3; ++i) {
            std::vector<double> row(n_symbols, 0.0);
            double total = 0;
            for (int k = 0; k < n_symbols; ++k) {
                bool dominant = k >= low && k <= high;
                row[k] = (dominant ? 1.0 : 0.03) * (0.5 + rng.next_double());
                total += row[k];
            }
            for (double& v : row) v /= total;
            hmm.emission.push_back(std::move(row));
        }
        return hmm;
    };
    Hmm g1 = generator(0, 12, 71);
    Hmm g2 = generator(15, 29, 72);

    Rng lengths(7);
    std::vector<TraceRecord> records;
    auto add_records = [&](const Hmm& gen, bool reassigned, const char* prefix) {
        for (int i = 0; i < 500; ++i) {
            int t = 5 + static_cast<int>(lengths.next_below(26));
            auto symbols = sample_sequence(gen, t, mix_seed(7, (reassigned ? 0 : 100000) + i));
            TraceRecord rec;
            rec.trace.report_id = std::string(prefix) + std::to_string(i);
            rec.trace.dialect = Dialect::gnome;
            for (std::size_t k = 0; k < symbols.size(); ++k) {
                Frame frame;
                frame.function = "gen_fn_" + std::to_string(symbols[k]);
                frame.position = static_cast<int>(k);
                rec.trace.frames.push_back(std::move(frame));
            }
            rec.labels = {{"component", reassigned}};
            records.push_back(std::move(rec));
        }
    };
    add_records(g1, true, "r");
    add_records(g2, false, "n");

    PipelineConfig config;
    config.grid = parse_state_grid("10,20,30");
    config.train.restarts = 2;
    config.train.seed = 7;
    config.fusion.method = "wpibc";
    FieldArtifacts artifacts = run_field_pipeline(records, "component", config);

    EXPECT(artifacts.models.size() == 6, "expected 6 models, got " << artifacts.models.size());
    EXPECT(artifacts.eval.ensemble_auc >= 0.9,
           "ensemble test auc " << artifacts.eval.ensemble_auc << " < 0.9");
    EXPECT(artifacts.eval.best.metrics.f >= 0.8,
           "best F " << artifacts.eval.best.metrics.f << " < 0.8");
    EXPECT(artifacts.eval.ensemble_auc >= artifacts.eval.best_single_auc - 0.05,
           "ensemble auc " << artifacts.eval.ensemble_auc << " more than 0.05 below best single "
                           << artifacts.eval.best_single_auc);
    return out;
}

// --- 10. parser golden corpus -------------------------------------------------
Outcome golden_corpus() {
    Outcome out;
    for (const char* file : {"eclipse_golden.json", "gnome_golden.json"}) {
        Dialect dialect =
            std::string(file).rfind("eclipse", 0) == 0 ? Dialect::eclipse : Dialect::gnome;
        std::ifstream in(std::string(HMMFUSE_FIXTURE_DIR) + "/" + file);
        EXPECT(in.good(), "missing fixture " << file);
        if (!in.good()) continue;
        nlohmann::json j = nlohmann::json::parse(in);
        EXPECT(j.size() >= 20, file << " has only " << j.size() << " cases");
        for (const auto& item : j) {
            std::string name = item.at("name").get<std::string>();
            std::string text;
            for (const auto& line : item.at("lines")) text += line.get<std::string>() + "\n";
            ExtractOptions options;
            options.merge_caused_by = item.value("merge_caused_by", true);
            options.max_frames = item.value("max_frames", 0);
            auto expect = item.at("expect").get<std::vector<std::vector<std::string>>>();

            for (int run = 0; run < 3; ++run) {
                auto traces = extract_traces(text, dialect, options);
                std::vector<std::vector<std::string>> got;
                for (const auto& trace : traces) {
                    std::vector<std::string> names;
                    for (const auto& frame : trace.frames) names.push_back(frame.function);
                    got.push_back(std::move(names));
                }
                EXPECT(got == expect, file << "/" << name << " run " << run
                                           << ": extraction differs from the golden output");
                if (got != expect) break;
            }
        }
    }
    return out;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
        double budget_seconds;
    };
    const std::vector<Criterion> criteria = {
        {1, "forward likelihood matches path enumeration (200 models)", forward_oracle, 5.0},
        {2, "EM monotone and stochastic on 20 random corpora", em_monotonicity, 30.0},
        {3, "trapezoidal AUC equals pair statistic (500 datasets)", auc_oracle, 5.0},
        {4, "kappa hand oracles exact", kappa_oracles, 5.0},
        {5, "fusion dominance and bit-exact rule replay (50 pools)", ensemble_dominance, 60.0},
        {6, "duplicate pruning yields 10 bases and bounds phase 3", pruning, 30.0},
        {7, "split arithmetic reproduces 6409/1086/3365", split_arithmetic, 5.0},
        {8, "published accuracy rows self-consistent", published_numbers, 5.0},
        {9, "synthetic end-to-end pipeline quality", end_to_end, 120.0},
        {10, "parser golden corpus, deterministic across 3 runs", golden_corpus, 5.0},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criterion.run();
        } catch (const std::exception& e) {
            outcome.pass = false;
            outcome.detail << "    exception: " << e.what() << "\n";
        }
        double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (seconds > criterion.budget_seconds) {
            outcome.pass = false;
            outcome.detail << "    runtime " << seconds << "s exceeds budget "
                           << criterion.budget_seconds << "s\n";
        }
        std::cout << (outcome.pass ? "[PASS] " : "[FAIL] ") << criterion.id << ". "
                  << criterion.name << "  (" << seconds << "s)\n"
                  << outcome.detail.str();
        if (!outcome.pass) ++failures;
    }
    std::cout << (failures == 0 ? "all criteria passed"
                                : std::to_string(failures) + " criterion(s) failed")
              << std::endl;
    return failures;
}
