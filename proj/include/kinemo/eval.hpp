#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "kinemo/features.hpp"
#include "kinemo/learners.hpp"
#include "kinemo/metrics.hpp"
#include "kinemo/segment.hpp"
#include "kinemo/types.hpp"

namespace kinemo {

// One recording with its resolved task label, cleaned and resampled.
struct LabeledSeries {
    SubjectRecord record;
    HeadPoseSeries series;
    Label label = 0;
};

struct Dataset {
    std::string name;
    bool bands = false;
    std::vector<LabeledSeries> items;
};

// Subject-disjoint stratified fold assignments, one map per repetition.
struct FoldPlan {
    int k = 0;
    int repetitions = 0;
    std::uint64_t seed = 0;
    std::vector<std::map<std::string, int>> assignments;
};

FoldPlan make_folds(const std::vector<std::pair<std::string, Label>>& subjects, int k, int reps,
                    std::uint64_t seed);

struct EvalReport {
    std::string level;  // "chunk" or "video"
    std::vector<Metrics> per_run;
    Metrics mean;
    Metrics stddev;  // population sigma over runs
    std::string config_snapshot;
};

void aggregate_report(EvalReport& report);

enum class ProtocolKind { repeated_cv, fixed_splits };

struct ProtocolSettings {
    ProtocolKind kind = ProtocolKind::repeated_cv;
    int folds = 10;
    int repetitions = 5;
    int inner_folds = 5;  // hyperparameter selection inside repeated CV
};

struct ExperimentConfig {
    FeatureMode mode = FeatureMode::healthy_control;
    Family family = Family::svc;
    Grid grid;  // empty selects default_grid(family)
    SegmentationConfig segmentation;
    KinemeFitConfig kineme;
    ProtocolSettings protocol;
    std::vector<int> dims;  // HCKD block restriction, subset of {0,1,2}; empty = all
    std::uint64_t seed = 0;
    int workers = 1;
    std::string config_snapshot;  // embedded verbatim into reports
};

// Full paper protocol: per run fit kinemes on the training side (control
// subjects only under HCKD), build chunk features, select hyperparameters on
// the validation side (fixed splits) or by inner CV (repeated CV), then
// score chunks and majority-voted videos. Returns (chunk, video) reports.
std::pair<EvalReport, EvalReport> run_protocol(const Dataset& dataset,
                                               const ExperimentConfig& cfg);

struct AblationRow {
    std::string condition;
    std::string classifier;
    std::string level;
    double chunk_len_s = 0.0;
    Metrics metrics;
};

std::vector<AblationRow> ablate_chunk_length(const Dataset& dataset, const ExperimentConfig& cfg,
                                             const std::vector<double>& lengths_s);

std::vector<AblationRow> ablate_dims(const Dataset& dataset, const ExperimentConfig& cfg,
                                     const std::vector<std::vector<int>>& dim_sets);

void write_ablation_table(const std::string& path, const std::vector<AblationRow>& rows,
                          const std::vector<std::string>& preamble);

}  // namespace kinemo
