#pragma once

#include <algorithm>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairml/config.hpp"
#include "fairml/csv.hpp"
#include "fairml/dataset.hpp"
#include "fairml/error.hpp"
#include "fairml/fairness.hpp"
#include "fairml/gbm.hpp"
#include "fairml/json_writer.hpp"
#include "fairml/logistic.hpp"
#include "fairml/posthoc.hpp"
#include "fairml/reweigh.hpp"

namespace fairml {

inline constexpr int kReportSchemaVersion = 1;

struct ModelSummary {
    std::string kind;
    int n_trees = 0;
    double base_score = 0.0;
    int iterations = 0;
    double final_loss = 0.0;
};

struct PosthocResult {
    EqOddsMixer mixer;
    FairnessReport report;
};

struct StageError {
    std::string stage;
    std::string message;
};

// Everything one pipeline execution produced: the audit trail, the
// mitigation record, before/after evaluations and the deploy verdict.
struct PipelineReport {
    PipelineConfig config;
    std::vector<std::string> decision_log;
    std::vector<FairnessReport> dataset_audit;
    bool mitigated = false;
    std::optional<ReweighingWeights> reweighing_cells;
    std::string learner;
    bool has_results = false;
    ModelSummary model_original;
    ModelSummary model_transformed;
    double decision_threshold = 0.5;
    FairnessReport before;
    FairnessReport after;
    std::optional<PosthocResult> posthoc;
    std::string final_verdict;
    std::optional<StageError> error;
};

namespace detail {

// Sweeps the unique score values and returns the threshold maximizing
// balanced accuracy; ties resolve to the lowest threshold.
inline double best_balanced_accuracy_threshold(std::span<const double> scores, std::span<const int> y) {
    std::vector<std::pair<double, int>> rows(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) rows[i] = {scores[i], y[i]};
    std::sort(rows.begin(), rows.end());
    double pos = 0, neg = 0;
    for (auto& [s, yi] : rows) (yi ? pos : neg) += 1.0;
    if (pos == 0 || neg == 0) throw Error("threshold search: both classes required");

    double best_t = rows.front().first, best_acc = -1.0;
    double tp = pos, fp = neg; // threshold at the minimum score predicts all positive
    std::size_t k = 0;
    while (k < rows.size()) {
        double t = rows[k].first;
        double acc = 0.5 * (tp / pos + (neg - fp) / neg);
        if (acc > best_acc) {
            best_acc = acc;
            best_t = t;
        }
        // rows with score exactly t flip to predicted-negative above t
        while (k < rows.size() && rows[k].first == t) {
            (rows[k].second ? tp : fp) -= 1.0;
            ++k;
        }
    }
    return best_t;
}

struct TrainedModel {
    std::string kind;
    std::optional<LinearModel> linear;
    std::optional<GbmModel> gbm;

    std::vector<double> scores(const Matrix& X) const {
        return linear ? predict_scores(*linear, X) : predict_scores(*gbm, X);
    }

    ModelSummary summary() const {
        ModelSummary s;
        s.kind = kind;
        if (linear) {
            s.iterations = linear->iterations;
            s.final_loss = linear->final_loss;
        } else {
            s.n_trees = static_cast<int>(gbm->trees.size());
            s.base_score = gbm->base_score;
        }
        return s;
    }
};

inline TrainedModel train_learner(const PipelineConfig& cfg, const EncodedDataset& train) {
    TrainedModel m;
    m.kind = cfg.learner;
    if (cfg.learner == "logistic") {
        m.linear = train_logistic(train, cfg.logistic);
    } else {
        m.gbm = train_gbm(train, cfg.gbm);
    }
    return m;
}

inline std::string verdict_line(const std::string& verdict) { return "final verdict: " + verdict; }

inline PipelineReport run_once(const PipelineConfig& cfg, bool force_reweigh,
                               std::vector<std::string> carried_log) {
    PipelineReport rep;
    rep.config = cfg;
    rep.learner = cfg.learner;
    rep.decision_log = std::move(carried_log);
    std::string stage = "config";
    try {
        cfg.validate(true);

        stage = "load";
        RecordTable table = load_csv(cfg.data_path);

        stage = "clean";
        if (cfg.exclude_expired_discharges) {
            std::size_t before_rows = table.n_rows();
            table = drop_expired_discharges(table);
            rep.decision_log.push_back("clean: dropped " + std::to_string(before_rows - table.n_rows()) +
                                       " expired/hospice discharge rows");
        }

        stage = "encode";
        EncodedDataset data = encode_features(table, cfg.encode_config());
        data.validate();
        table = RecordTable{};

        stage = "audit";
        bool mitigation_flagged = false;
        for (const auto& spec : cfg.group_specs) {
            int s = data.spec_index(spec.name);
            FairnessReport fr = audit(data.y, data.protected_cols[s], data.missing_masks[s], spec,
                                      cfg.audit_threshold);
            rep.decision_log.push_back("dataset audit " + spec.name + ": favorable_label=" +
                                       std::to_string(spec.favorable_label) + " di=" + fixed6(fr.di) +
                                       " di_score=" + fixed6(fr.di_score) +
                                       (fr.biased ? " biased=true" : " biased=false"));
            if (spec.name == cfg.mitigation_spec) mitigation_flagged = fr.biased;
            rep.dataset_audit.push_back(std::move(fr));
        }

        stage = "split";
        auto [train, test] = split(data, cfg.test_fraction, cfg.seed);
        data = EncodedDataset{};

        stage = "reweigh";
        const GroupSpec& mit = cfg.mitigation();
        rep.mitigated = mitigation_flagged || force_reweigh;
        EncodedDataset train_transformed;
        if (rep.mitigated) {
            rep.decision_log.push_back(force_reweigh && !mitigation_flagged
                                           ? "reprocess: reweighing forced on"
                                           : "dataset audit: biased → reweighing applied");
            ReweighingWeights rw = compute_weights(train, mit);
            train_transformed = apply_weights(train, rw, mit);
            rep.reweighing_cells = rw;
        } else {
            rep.decision_log.push_back("dataset audit: fair → reweighing skipped");
        }

        stage = "train";
        TrainedModel original = train_learner(cfg, train);
        TrainedModel transformed = rep.mitigated ? train_learner(cfg, train_transformed) : original;
        rep.model_original = original.summary();
        rep.model_transformed = transformed.summary();
        train_transformed = EncodedDataset{};

        stage = "evaluate";
        if (cfg.auto_threshold) {
            std::vector<double> train_scores = original.scores(train.X);
            rep.decision_threshold = best_balanced_accuracy_threshold(train_scores, train.y);
            rep.decision_log.push_back("decision threshold: " + fixed6(rep.decision_threshold) +
                                       " (auto, balanced-accuracy sweep on original training scores)");
        } else {
            rep.decision_threshold = cfg.decision_threshold;
            rep.decision_log.push_back("decision threshold: " + fixed6(rep.decision_threshold) + " (fixed)");
        }

        int sm = test.spec_index(mit.name);
        std::vector<double> scores_before = original.scores(test.X);
        std::vector<double> scores_after = transformed.scores(test.X);
        std::vector<int> yhat_before = classify(scores_before, rep.decision_threshold);
        std::vector<int> yhat_after = classify(scores_after, rep.decision_threshold);
        rep.before = evaluate_predictions(test.y, yhat_before, test.protected_cols[sm],
                                          test.missing_masks[sm], mit, cfg.audit_threshold);
        rep.after = evaluate_predictions(test.y, yhat_after, test.protected_cols[sm],
                                         test.missing_masks[sm], mit, cfg.audit_threshold);
        rep.has_results = true;

        stage = "posthoc";
        if (cfg.posthoc.enabled) {
            std::vector<double> train_scores = original.scores(train.X);
            int st = train.spec_index(mit.name);
            EqOddsMixer mixer = fit_mixer(train_scores, train.y, train.protected_cols[st],
                                          train.missing_masks[st], cfg.posthoc.cost_kind);
            std::vector<double> mixed = apply_mixer(mixer, scores_before, test.protected_cols[sm],
                                                    test.missing_masks[sm], cfg.seed);
            std::vector<int> yhat_mixed = classify(mixed, rep.decision_threshold);
            PosthocResult pr;
            pr.mixer = mixer;
            pr.report = evaluate_predictions(test.y, yhat_mixed, test.protected_cols[sm],
                                             test.missing_masks[sm], mit, cfg.audit_threshold);
            rep.posthoc = std::move(pr);
            rep.decision_log.push_back(std::string("posthoc: ") + cost_kind_name(mixer.cost_kind) +
                                       " mixer, target=" + (mixer.target_priv ? "privileged" : "unprivileged") +
                                       " p=" + fixed6(mixer.mix_probability) +
                                       (mixer.clamped ? " (clamped)" : ""));
        }

        stage = "reaudit";
        rep.decision_log.push_back("test re-audit " + mit.name + ": di=" + fixed6(rep.after.di) +
                                   " di_score=" + fixed6(rep.after.di_score) +
                                   (rep.after.biased ? " biased=true" : " biased=false"));
        rep.final_verdict = rep.after.biased ? "reprocess" : "deploy";
        rep.decision_log.push_back(verdict_line(rep.final_verdict));
    } catch (const Error& e) {
        rep.error = StageError{stage, e.what()};
        rep.decision_log.push_back("error at stage " + stage + ": " + e.what());
    }
    return rep;
}

} // namespace detail

// Executes the full flow: ingest → dataset audit → (reweigh | pass) → train
// original + transformed → evaluate on the test split → re-audit → verdict.
// When the verdict is "reprocess" and max_reprocess > 0, reruns with
// reweighing forced on, at most max_reprocess times.
inline PipelineReport run(const PipelineConfig& cfg) {
    std::vector<std::string> carried;
    PipelineReport rep;
    for (int attempt = 0;; ++attempt) {
        rep = detail::run_once(cfg, attempt > 0, std::move(carried));
        if (rep.error || rep.final_verdict == "deploy" || attempt >= cfg.max_reprocess) return rep;
        carried = rep.decision_log;
        carried.push_back("reprocess attempt " + std::to_string(attempt + 1) +
                          ": rerunning with reweighing forced on");
    }
}

// ------------------------------------------------------------------
// rendering
// ------------------------------------------------------------------

namespace detail {

inline void write_fairness_report(JsonWriter& w, const FairnessReport& r) {
    w.begin_object();
    w.key("spec_name");
    w.string(r.spec_name);
    w.key("di");
    r.di_infinite ? w.null() : w.metric(r.di);
    w.key("di_score");
    r.di_infinite ? w.null() : w.metric(r.di_score);
    w.key("avg_odd");
    r.has_prediction_metrics ? w.metric(r.avg_odd) : w.null();
    w.key("eq_opp");
    r.has_prediction_metrics ? w.metric(r.eq_opp) : w.null();
    w.key("balanced_acc");
    r.has_prediction_metrics ? w.metric(r.balanced_acc) : w.null();
    w.key("favorable_rate_priv");
    w.metric(r.favorable_rate_priv);
    w.key("favorable_rate_unpriv");
    w.metric(r.favorable_rate_unpriv);
    w.key("n_priv");
    w.integer(static_cast<long long>(r.n_priv));
    w.key("n_unpriv");
    w.integer(static_cast<long long>(r.n_unpriv));
    w.key("biased");
    w.boolean(r.biased);
    w.end_object();
}

inline void write_model_summary(JsonWriter& w, const ModelSummary& m) {
    w.begin_object();
    w.key("kind");
    w.string(m.kind);
    if (m.kind == "logistic") {
        w.key("iterations");
        w.integer(m.iterations);
        w.key("final_loss");
        w.metric(m.final_loss);
    } else {
        w.key("n_trees");
        w.integer(m.n_trees);
        w.key("base_score");
        w.metric(m.base_score);
    }
    w.end_object();
}

inline void write_reweighing(JsonWriter& w, const ReweighingWeights& rw) {
    w.begin_object();
    w.key("spec_name");
    w.string(rw.spec_name);
    w.key("favorable_label");
    w.integer(rw.favorable_label);
    const char* cell_keys[2][2] = {{"unprivileged_unfavorable", "unprivileged_favorable"},
                                   {"privileged_unfavorable", "privileged_favorable"}};
    w.key("weights");
    w.begin_object();
    for (int g = 1; g >= 0; --g) {
        for (int f = 1; f >= 0; --f) {
            w.key(cell_keys[g][f]);
            w.metric(rw.weight[g][f]);
        }
    }
    w.end_object();
    w.key("cell_mass");
    w.begin_object();
    for (int g = 1; g >= 0; --g) {
        for (int f = 1; f >= 0; --f) {
            w.key(cell_keys[g][f]);
            w.metric(rw.cell_mass[g][f]);
        }
    }
    w.end_object();
    w.key("group_mass");
    w.begin_object();
    w.key("privileged");
    w.metric(rw.group_mass[1]);
    w.key("unprivileged");
    w.metric(rw.group_mass[0]);
    w.end_object();
    w.key("label_mass");
    w.begin_object();
    w.key("favorable");
    w.metric(rw.label_mass[1]);
    w.key("unfavorable");
    w.metric(rw.label_mass[0]);
    w.end_object();
    w.key("total_mass");
    w.metric(rw.total_mass);
    w.end_object();
}

inline std::string indent_fragment(const std::string& fragment, int spaces) {
    std::string out;
    for (char c : fragment) {
        out += c;
        if (c == '\n') out.append(spaces, ' ');
    }
    return out;
}

} // namespace detail

// Canonical report JSON: stable key order, 6-decimal fixed metrics.
inline std::string render_report_json(const PipelineReport& rep) {
    JsonWriter w;
    w.begin_object();
    w.key("schema_version");
    w.integer(kReportSchemaVersion);
    w.key("config");
    w.raw(detail::indent_fragment(config_to_json(rep.config).dump(2), 2));
    w.key("decision_log");
    w.begin_array();
    for (const auto& line : rep.decision_log) w.string(line);
    w.end_array();
    w.key("dataset_audit");
    w.begin_array();
    for (const auto& fr : rep.dataset_audit) detail::write_fairness_report(w, fr);
    w.end_array();
    w.key("mitigated");
    w.boolean(rep.mitigated);
    w.key("reweighing_cells");
    if (rep.reweighing_cells) {
        detail::write_reweighing(w, *rep.reweighing_cells);
    } else {
        w.null();
    }
    w.key("learner");
    w.string(rep.learner);
    w.key("results");
    if (rep.has_results) {
        w.begin_object();
        w.key("decision_threshold");
        w.metric(rep.decision_threshold);
        w.key("model_original");
        detail::write_model_summary(w, rep.model_original);
        w.key("model_transformed");
        detail::write_model_summary(w, rep.model_transformed);
        w.key("before");
        detail::write_fairness_report(w, rep.before);
        w.key("after");
        detail::write_fairness_report(w, rep.after);
        w.end_object();
    } else {
        w.null();
    }
    w.key("posthoc");
    if (rep.posthoc) {
        w.begin_object();
        w.key("cost_kind");
        w.string(cost_kind_name(rep.posthoc->mixer.cost_kind));
        w.key("target_group");
        w.string(rep.posthoc->mixer.target_priv ? "privileged" : "unprivileged");
        w.key("mix_probability");
        w.metric(rep.posthoc->mixer.mix_probability);
        w.key("clamped");
        w.boolean(rep.posthoc->mixer.clamped);
        w.key("base_rate");
        w.metric(rep.posthoc->mixer.base_rate);
        w.key("cost_priv");
        w.metric(rep.posthoc->mixer.cost_priv);
        w.key("cost_unpriv");
        w.metric(rep.posthoc->mixer.cost_unpriv);
        w.key("report");
        detail::write_fairness_report(w, rep.posthoc->report);
        w.end_object();
    } else {
        w.null();
    }
    w.key("final_verdict");
    rep.final_verdict.empty() ? w.null() : w.string(rep.final_verdict);
    w.key("error");
    if (rep.error) {
        w.begin_object();
        w.key("stage");
        w.string(rep.error->stage);
        w.key("message");
        w.string(rep.error->message);
        w.end_object();
    } else {
        w.null();
    }
    w.end_object();
    return std::move(w).take() + "\n";
}

// Plain-text table in the before/after layout: rows acc, DI, avg_odd, eq_opp;
// columns Original, Transformed. The DI row carries |1 - DI|.
inline std::string render_report_table(const PipelineReport& rep) {
    auto cell = [](const std::string& s) {
        std::string out = s;
        out.resize(14, ' ');
        return out;
    };
    std::string out;
    out += cell("") + cell("Original") + "Transformed\n";
    out += cell("acc") + cell(fixed6(rep.before.balanced_acc)) + fixed6(rep.after.balanced_acc) + "\n";
    out += cell("DI") + cell(fixed6(rep.before.di_score)) + fixed6(rep.after.di_score) + "\n";
    out += cell("avg_odd") + cell(fixed6(rep.before.avg_odd)) + fixed6(rep.after.avg_odd) + "\n";
    out += cell("eq_opp") + cell(fixed6(rep.before.eq_opp)) + fixed6(rep.after.eq_opp) + "\n";
    return out;
}

// Method comparison CSV: reweighing vs post-processing vs untouched.
inline std::string render_compare_csv(const PipelineReport& rep) {
    std::string out = "method,balanced_accuracy,di_score\n";
    out += "RW," + fixed6(rep.after.balanced_acc) + "," + fixed6(rep.after.di_score) + "\n";
    if (rep.posthoc) {
        out += "CEOD," + fixed6(rep.posthoc->report.balanced_acc) + "," +
               fixed6(rep.posthoc->report.di_score) + "\n";
    }
    out += "none," + fixed6(rep.before.balanced_acc) + "," + fixed6(rep.before.di_score) + "\n";
    return out;
}

// Writes <stem>.json always, <stem>.txt when results exist, and
// <stem>_compare.csv when post-processing ran. Returns the written paths.
inline std::vector<std::string> render_report(const PipelineReport& rep, const std::string& stem) {
    auto write_file = [](const std::string& path, const std::string& content) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write report file: " + path);
        out << content;
    };
    std::vector<std::string> written;
    write_file(stem + ".json", render_report_json(rep));
    written.push_back(stem + ".json");
    if (rep.has_results) {
        write_file(stem + ".txt", render_report_table(rep));
        written.push_back(stem + ".txt");
        if (rep.posthoc) {
            write_file(stem + "_compare.csv", render_compare_csv(rep));
            written.push_back(stem + "_compare.csv");
        }
    }
    return written;
}

} // namespace fairml
