#include "kinemo/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "kinemo/errors.hpp"
#include "kinemo/parallel.hpp"
#include "kinemo/rng.hpp"
#include "kinemo/textio.hpp"

namespace kinemo {

FoldPlan make_folds(const std::vector<std::pair<std::string, Label>>& subjects, int k, int reps,
                    std::uint64_t seed) {
    if (k < 2) throw ConfigError("need at least 2 folds");
    if (reps < 1) throw ConfigError("need at least 1 repetition");
    if (static_cast<int>(subjects.size()) < k)
        throw ConfigError("fewer subjects than folds");
    std::set<Label> labels;
    std::set<std::string> ids;
    for (const auto& [id, label] : subjects) {
        labels.insert(label);
        if (!ids.insert(id).second) throw DataError("duplicate subject id " + id);
    }
    if (labels.size() < 2) throw DataError("fold plan needs at least two classes");

    FoldPlan plan;
    plan.k = k;
    plan.repetitions = reps;
    plan.seed = seed;
    for (int r = 0; r < reps; ++r) {
        // per class: canonical order, seeded shuffle; global round-robin deal
        // keeps both per-class and overall fold sizes within one.
        std::map<std::string, int> assign;
        int next_fold = 0;
        for (Label label : labels) {
            std::vector<std::string> members;
            for (const auto& [id, l] : subjects)
                if (l == label) members.push_back(id);
            std::sort(members.begin(), members.end());
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r),
                                static_cast<std::uint64_t>(label)));
            rng.shuffle(members);
            for (const auto& id : members) {
                assign[id] = next_fold;
                next_fold = (next_fold + 1) % k;
            }
        }
        plan.assignments.push_back(std::move(assign));
    }
    return plan;
}

void aggregate_report(EvalReport& report) {
    const double n = static_cast<double>(report.per_run.size());
    if (n == 0.0) throw EmptyInputError("report with no runs");
    auto field = [](Metrics& m, int i) -> double& {
        switch (i) {
            case 0: return m.accuracy;
            case 1: return m.weighted_f1;
            case 2: return m.precision;
            default: return m.recall;
        }
    };
    for (int i = 0; i < 4; ++i) {
        double mean = 0.0;
        for (auto& run : report.per_run) mean += field(run, i);
        mean /= n;
        double var = 0.0;
        for (auto& run : report.per_run) {
            const double d = field(run, i) - mean;
            var += d * d;
        }
        var /= n;
        field(report.mean, i) = mean;
        field(report.stddev, i) = std::sqrt(var);
    }
}

namespace {

struct SubjectData {
    std::string subject_id;
    Label label = 0;
    std::vector<Chunk> chunks;              // thin-slice chunks, all recordings
    std::vector<Segment> kineme_segments;   // whole-series overlapping segments
};

struct FeatureSet {
    Eigen::MatrixXd X;
    std::vector<Label> y;
    std::vector<std::string> recording_ids;
};

std::vector<int> full_dims() { return {0, 1, 2}; }

Eigen::VectorXd restrict_dims(const Eigen::VectorXd& v, const std::vector<int>& dims) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(dims.size()) * 8);
    Eigen::Index at = 0;
    for (int d : dims) {
        out.segment(at * 8, 8) = v.segment(d * 8, 8);
        ++at;
    }
    return out;
}

// Prepares per-subject chunks and kineme segments once per experiment.
std::vector<SubjectData> collect_subjects(const Dataset& dataset, const ExperimentConfig& cfg) {
    if (dataset.items.empty()) throw EmptyInputError("dataset has no recordings");
    std::map<std::string, SubjectData> by_subject;
    for (const auto& item : dataset.items) {
        auto& sd = by_subject[item.record.subject_id];
        if (!sd.chunks.empty() && sd.label != item.label)
            throw DataError("subject " + item.record.subject_id + " has conflicting labels");
        sd.subject_id = item.record.subject_id;
        sd.label = item.label;
        auto chunks = make_chunks(item.series, cfg.segmentation, item.label);
        for (auto& c : chunks) sd.chunks.push_back(std::move(c));
        auto segs = make_segments(item.series, cfg.segmentation);
        for (auto& s : segs) sd.kineme_segments.push_back(std::move(s));
    }
    std::vector<SubjectData> out;
    for (auto& [id, sd] : by_subject) {
        if (sd.chunks.empty())
            throw DataError("subject " + id + " yields no usable chunks at this chunk length");
        out.push_back(std::move(sd));
    }
    return out;
}

// Features for the given subjects under an already-fitted model.
FeatureSet featurize_subjects(const std::vector<SubjectData>& subjects,
                              const std::vector<std::size_t>& which, const KinemeModel& model,
                              FeatureMode mode, const DiscriminativeSet* dset,
                              const std::vector<int>& dims) {
    std::vector<const Chunk*> chunks;
    for (std::size_t s : which)
        for (const auto& c : subjects[s].chunks) chunks.push_back(&c);

    FeatureSet fs;
    if (chunks.empty()) throw EmptyInputError("no chunks to featurize");
    std::vector<Eigen::VectorXd> rows(chunks.size());
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        if (mode == FeatureMode::two_class) {
            rows[i] = feat_2ckd(*chunks[i], model, *dset).vector;
        } else {
            Eigen::VectorXd v = feat_hckd(*chunks[i], model).vector;
            rows[i] = dims.size() == 3 ? v : restrict_dims(v, dims);
        }
    }
    fs.X.resize(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    fs.y.resize(rows.size());
    fs.recording_ids.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        fs.X.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
        fs.y[i] = chunks[i]->label;
        fs.recording_ids[i] = chunks[i]->recording_id;
    }
    return fs;
}

// Kineme training set for one run: control-only under HCKD, everything
// under 2CKD.
std::vector<Segment> kineme_training_segments(const std::vector<SubjectData>& subjects,
                                              const std::vector<std::size_t>& train,
                                              FeatureMode mode) {
    std::vector<Segment> segs;
    for (std::size_t s : train) {
        if (mode == FeatureMode::healthy_control && subjects[s].label != kControl) continue;
        for (const auto& seg : subjects[s].kineme_segments) segs.push_back(seg);
    }
    return segs;
}

DiscriminativeSet train_discriminative_set(const std::vector<SubjectData>& subjects,
                                           const std::vector<std::size_t>& train,
                                           const KinemeModel& model) {
    std::vector<KinemeAssignment> control, patient;
    for (std::size_t s : train) {
        for (const auto& seg : subjects[s].kineme_segments) {
            auto a = assign_kineme(model, seg);
            (subjects[s].label == kControl ? control : patient).push_back(std::move(a));
        }
    }
    if (control.empty() || patient.empty())
        throw DataError("both classes needed on the training side for 2ckd");
    return select_discriminative(class_histogram(control, model.K),
                                 class_histogram(patient, model.K));
}

// Mean validation weighted F1 over stratified inner folds, per grid point;
// the best point wins, ties to the earliest.
ClassifierSpec select_spec_inner_cv(const ExperimentConfig& cfg, const Grid& grid,
                                    const std::vector<SubjectData>& subjects,
                                    const std::vector<std::size_t>& train,
                                    const FeatureSet& train_feats,
                                    const std::vector<std::vector<std::size_t>>& chunk_of_subject,
                                    std::uint64_t seed, bool multiclass) {
    std::vector<std::pair<std::string, Label>> train_subjects;
    for (std::size_t s : train)
        train_subjects.push_back({subjects[s].subject_id, subjects[s].label});
    const int inner_k =
        std::min<int>(cfg.protocol.inner_folds, static_cast<int>(train.size()) / 2);
    if (inner_k < 2) throw ConfigError("too few training subjects for inner CV");
    const FoldPlan inner = make_folds(train_subjects, inner_k, 1, derive_seed(seed, 7));

    std::vector<double> scores(grid.size(), 0.0);
    parallel_for(grid.size(), cfg.workers, [&](std::size_t gi) {
        double total = 0.0;
        int used = 0;
        for (int fold = 0; fold < inner_k; ++fold) {
            std::vector<Eigen::Index> fit_rows, val_rows;
            for (std::size_t ti = 0; ti < train.size(); ++ti) {
                const bool in_val =
                    inner.assignments[0].at(subjects[train[ti]].subject_id) == fold;
                for (std::size_t row : chunk_of_subject[ti])
                    (in_val ? val_rows : fit_rows).push_back(static_cast<Eigen::Index>(row));
            }
            std::vector<Label> y_fit, y_val;
            for (auto r : fit_rows) y_fit.push_back(train_feats.y[static_cast<std::size_t>(r)]);
            for (auto r : val_rows) y_val.push_back(train_feats.y[static_cast<std::size_t>(r)]);
            if (std::set<Label>(y_fit.begin(), y_fit.end()).size() < 2) continue;
            if (val_rows.empty()) continue;

            Eigen::MatrixXd X_fit(static_cast<Eigen::Index>(fit_rows.size()),
                                  train_feats.X.cols());
            Eigen::MatrixXd X_val(static_cast<Eigen::Index>(val_rows.size()),
                                  train_feats.X.cols());
            for (std::size_t i = 0; i < fit_rows.size(); ++i)
                X_fit.row(static_cast<Eigen::Index>(i)) = train_feats.X.row(fit_rows[i]);
            for (std::size_t i = 0; i < val_rows.size(); ++i)
                X_val.row(static_cast<Eigen::Index>(i)) = train_feats.X.row(val_rows[i]);

            ClassifierSpec spec;
            spec.family = cfg.family;
            spec.hyperparameters = grid[gi];
            spec.seed = derive_seed(seed, gi, static_cast<std::uint64_t>(fold));
            try {
                const TrainedModel m = kinemo::train(spec, X_fit, y_fit);
                total += compute_metrics(y_val, predict(m, X_val), multiclass).weighted_f1;
                ++used;
            } catch (const Error&) {
                // a degenerate inner split scores zero for this fold
            }
        }
        scores[gi] = used > 0 ? total / static_cast<double>(used) : 0.0;
    });

    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    ClassifierSpec spec;
    spec.family = cfg.family;
    spec.hyperparameters = grid[best];
    spec.seed = derive_seed(seed, best);
    return spec;
}

struct RunOutcome {
    Metrics chunk;
    Metrics video;
};

RunOutcome execute_run(const ExperimentConfig& cfg, const std::vector<SubjectData>& subjects,
                       const std::vector<std::size_t>& train,
                       const std::vector<std::size_t>& dev,
                       const std::vector<std::size_t>& test, const Grid& grid,
                       std::uint64_t run_seed, bool multiclass) {
    const std::vector<int> dims = cfg.dims.empty() ? full_dims() : cfg.dims;

    auto kin_segments = kineme_training_segments(subjects, train, cfg.mode);
    KinemeFitConfig kcfg = cfg.kineme;
    kcfg.seed = derive_seed(run_seed, 1);
    const KinemeModel model = fit_kineme_model(kin_segments, kcfg);

    DiscriminativeSet dset;
    const DiscriminativeSet* dset_ptr = nullptr;
    if (cfg.mode == FeatureMode::two_class) {
        dset = train_discriminative_set(subjects, train, model);
        dset_ptr = &dset;
    }

    const FeatureSet train_feats =
        featurize_subjects(subjects, train, model, cfg.mode, dset_ptr, dims);

    // chunk rows per training subject, aligned with `train`
    std::vector<std::vector<std::size_t>> chunk_of_subject(train.size());
    {
        std::size_t row = 0;
        for (std::size_t ti = 0; ti < train.size(); ++ti)
            for (std::size_t c = 0; c < subjects[train[ti]].chunks.size(); ++c)
                chunk_of_subject[ti].push_back(row++);
    }

    ClassifierSpec spec;
    if (!dev.empty()) {
        const FeatureSet dev_feats =
            featurize_subjects(subjects, dev, model, cfg.mode, dset_ptr, dims);
        spec = grid_search(cfg.family, grid, train_feats.X, train_feats.y, dev_feats.X,
                           dev_feats.y, derive_seed(run_seed, 2), multiclass, cfg.workers);
    } else {
        spec = select_spec_inner_cv(cfg, grid, subjects, train, train_feats, chunk_of_subject,
                                    derive_seed(run_seed, 3), multiclass);
    }
    spec.seed = derive_seed(run_seed, 4);

    const TrainedModel final_model = kinemo::train(spec, train_feats.X, train_feats.y);
    const FeatureSet test_feats =
        featurize_subjects(subjects, test, model, cfg.mode, dset_ptr, dims);
    const std::vector<Label> pred = predict(final_model, test_feats.X);

    RunOutcome out;
    out.chunk = compute_metrics(test_feats.y, pred, multiclass);

    // majority vote per recording
    std::map<std::string, std::vector<Label>> by_recording;
    std::map<std::string, Label> truth;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        by_recording[test_feats.recording_ids[i]].push_back(pred[i]);
        truth[test_feats.recording_ids[i]] = test_feats.y[i];
    }
    std::vector<Label> v_true, v_pred;
    for (const auto& [rec, votes] : by_recording) {
        v_true.push_back(truth.at(rec));
        v_pred.push_back(video_majority(votes));
    }
    out.video = compute_metrics(v_true, v_pred, multiclass);
    return out;
}

}  // namespace

std::pair<EvalReport, EvalReport> run_protocol(const Dataset& dataset,
                                               const ExperimentConfig& cfg) {
    cfg.segmentation.validate();
    if (cfg.mode == FeatureMode::two_class && dataset.bands)
        throw ConfigError("2ckd features are defined for binary labels only");
    const bool multiclass = dataset.bands;
    const Grid grid = cfg.grid.empty() ? default_grid(cfg.family) : cfg.grid;

    const std::vector<SubjectData> subjects = collect_subjects(dataset, cfg);

    std::vector<RunOutcome> outcomes;
    if (cfg.protocol.kind == ProtocolKind::fixed_splits) {
        std::vector<std::size_t> train, dev, test;
        for (std::size_t s = 0; s < subjects.size(); ++s) {
            // splits come from the manifest records
            std::string split;
            for (const auto& item : dataset.items)
                if (item.record.subject_id == subjects[s].subject_id && item.record.split)
                    split = *item.record.split;
            if (split == "train")
                train.push_back(s);
            else if (split == "dev")
                dev.push_back(s);
            else if (split == "test")
                test.push_back(s);
            else
                throw ConfigError("subject " + subjects[s].subject_id +
                                  " lacks a split under the fixed-splits protocol");
        }
        if (train.empty() || dev.empty() || test.empty())
            throw ConfigError("fixed-splits protocol needs train, dev and test subjects");
        outcomes.push_back(execute_run(cfg, subjects, train, dev, test, grid,
                                       derive_seed(cfg.seed, 0), multiclass));
    } else {
        std::vector<std::pair<std::string, Label>> ids;
        for (const auto& sd : subjects) ids.push_back({sd.subject_id, sd.label});
        const FoldPlan plan =
            make_folds(ids, cfg.protocol.folds, cfg.protocol.repetitions, cfg.seed);
        for (int rep = 0; rep < plan.repetitions; ++rep) {
            for (int fold = 0; fold < plan.k; ++fold) {
                std::vector<std::size_t> train, test;
                for (std::size_t s = 0; s < subjects.size(); ++s) {
                    if (plan.assignments[static_cast<std::size_t>(rep)].at(
                            subjects[s].subject_id) == fold)
                        test.push_back(s);
                    else
                        train.push_back(s);
                }
                if (test.empty()) continue;
                outcomes.push_back(execute_run(
                    cfg, subjects, train, {}, test, grid,
                    derive_seed(cfg.seed, static_cast<std::uint64_t>(rep) + 17,
                                static_cast<std::uint64_t>(fold) + 31),
                    multiclass));
            }
        }
    }

    EvalReport chunk_report, video_report;
    chunk_report.level = "chunk";
    video_report.level = "video";
    chunk_report.config_snapshot = cfg.config_snapshot;
    video_report.config_snapshot = cfg.config_snapshot;
    for (const auto& o : outcomes) {
        chunk_report.per_run.push_back(o.chunk);
        video_report.per_run.push_back(o.video);
    }
    aggregate_report(chunk_report);
    aggregate_report(video_report);
    return {std::move(chunk_report), std::move(video_report)};
}

std::vector<AblationRow> ablate_chunk_length(const Dataset& dataset, const ExperimentConfig& cfg,
                                             const std::vector<double>& lengths_s) {
    if (lengths_s.empty()) throw ConfigError("no chunk lengths given");
    std::vector<AblationRow> rows;
    for (double len : lengths_s) {
        ExperimentConfig c = cfg;
        c.segmentation.chunk_len_s = len;
        auto [chunk_rep, video_rep] = run_protocol(dataset, c);
        for (const auto* rep : {&chunk_rep, &video_rep}) {
            AblationRow row;
            row.condition = feature_mode_name(cfg.mode);
            row.classifier = family_name(cfg.family);
            row.level = rep->level;
            row.chunk_len_s = len;
            row.metrics = rep->mean;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<AblationRow> ablate_dims(const Dataset& dataset, const ExperimentConfig& cfg,
                                     const std::vector<std::vector<int>>& dim_sets) {
    if (cfg.mode != FeatureMode::healthy_control)
        throw ConfigError("dimension ablation applies to hckd features");
    static const char* kDimNames[] = {"pitch", "yaw", "roll"};
    std::vector<AblationRow> rows;
    for (const auto& dims : dim_sets) {
        if (dims.empty()) throw ConfigError("empty dimension set");
        for (int d : dims)
            if (d < 0 || d > 2) throw ConfigError("dimension index outside {0,1,2}");
        ExperimentConfig c = cfg;
        c.dims = dims;
        auto [chunk_rep, video_rep] = run_protocol(dataset, c);
        std::string cond = "hckd";
        for (int d : dims) cond += std::string("+") + kDimNames[d];
        for (const auto* rep : {&chunk_rep, &video_rep}) {
            AblationRow row;
            row.condition = cond;
            row.classifier = family_name(cfg.family);
            row.level = rep->level;
            row.chunk_len_s = cfg.segmentation.chunk_len_s;
            row.metrics = rep->mean;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void write_ablation_table(const std::string& path, const std::vector<AblationRow>& rows,
                          const std::vector<std::string>& preamble) {
    DelimitedTable table;
    table.preamble = preamble;
    table.header = {"condition", "classifier", "level", "chunk_len_s", "acc", "f1", "pr", "re"};
    for (const auto& r : rows)
        table.rows.push_back({r.condition, r.classifier, r.level, format_double(r.chunk_len_s),
                              format_double(r.metrics.accuracy),
                              format_double(r.metrics.weighted_f1),
                              format_double(r.metrics.precision),
                              format_double(r.metrics.recall)});
    write_delimited(path, table);
}

}  // namespace kinemo
