#pragma once

#include <Eigen/Core>
#include <array>
#include <string>
#include <vector>

#include "kinemo/kineme_model.hpp"
#include "kinemo/segment.hpp"

namespace kinemo {

enum class FeatureMode { two_class, healthy_control };

std::string feature_mode_name(FeatureMode mode);

struct KinemeHistogram {
    std::vector<long> counts;      // K entries
    std::vector<double> relative;  // counts / total
};

// The ten most class-differentiating kinemes: five whose relative frequency
// favours controls and five favouring patients. Always 10 distinct ids.
struct DiscriminativeSet {
    std::vector<int> control_ids;
    std::vector<int> patient_ids;
};

// Signed per-dimension sums of a segment's reconstruction difference.
struct ResidualSums {
    double s_pitch = 0.0;
    double s_yaw = 0.0;
    double s_roll = 0.0;
};

struct ChunkFeatures {
    FeatureMode mode = FeatureMode::healthy_control;
    Eigen::VectorXd vector;  // 10 (two_class) or 24 (healthy_control)
    std::string recording_id;
    int chunk_index = 0;
    Label label = 0;
};

KinemeHistogram class_histogram(const std::vector<KinemeAssignment>& assignments, int K);

DiscriminativeSet select_discriminative(const KinemeHistogram& hist_control,
                                        const KinemeHistogram& hist_patient,
                                        int per_class = 5);

ChunkFeatures feat_2ckd(const Chunk& chunk, const KinemeModel& model,
                        const DiscriminativeSet& dset);

// Per-dimension signed sum of (segment values - reconstruction values).
ResidualSums residual(const Segment& segment, const Reconstruction& recon);

// min, max, range, mean, median, population std, skewness, excess kurtosis.
// A zero-variance input yields skewness = kurtosis = 0.
std::array<double, 8> stats8(const std::vector<double>& values);

ChunkFeatures feat_hckd(const Chunk& chunk, const KinemeModel& model);

// Column names matching the exported feature table.
std::vector<std::string> feature_column_names(FeatureMode mode);

// Feature table export/import: recording_id, chunk_index, label, features.
void write_feature_table(const std::string& path, const std::vector<ChunkFeatures>& features,
                         const std::vector<std::string>& preamble);
std::vector<ChunkFeatures> read_feature_table(const std::string& path);

}  // namespace kinemo
