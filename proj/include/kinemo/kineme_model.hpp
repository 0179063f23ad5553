#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "kinemo/gmm.hpp"
#include "kinemo/segment.hpp"

namespace kinemo {

struct KinemeFitConfig {
    int K = 16;
    double variance_target = 0.95;  // fraction of variance the subspace keeps
    int fixed_dim = 0;              // > 0 overrides the variance target
    int n_restarts = 5;
    int em_max_iters = 300;
    double em_tol = 1e-6;
    double variance_floor = 1e-6;
    std::uint64_t seed = 0;
};

// Learned kineme basis: an orthonormal linear projection of mean-centered,
// flattened segments plus a diagonal-covariance Gaussian mixture in that
// space. Mixture means back-project to pitch/yaw/roll trajectories.
struct KinemeModel {
    int K = 0;
    int seg_len_frames = 0;
    double fps = 0.0;
    int dim = 0;                    // subspace dimension d
    Eigen::VectorXd center_offset;  // 3l, training mean of flattened segments
    Eigen::MatrixXd projection;     // d x 3l, orthonormal rows
    DiagGmm mixture;
    double train_loglik = 0.0;
    KinemeFitConfig fit_config;

    void validate() const;  // simplex weights, orthonormal rows, variance floor
};

struct KinemeAssignment {
    int kineme_id = 0;
    Eigen::VectorXd posterior;  // K, sums to 1
};

// Reconstructed l x 3 trajectory (pitch, yaw, roll) for one kineme.
struct Reconstruction {
    Eigen::MatrixXd values;
};

// [pitch | yaw | roll] concatenation with per-dimension mean centering.
Eigen::VectorXd flatten(const Segment& segment);
Eigen::MatrixXd unflatten(const Eigen::VectorXd& flat);  // inverse layout, 3l -> l x 3

KinemeModel fit_kineme_model(const std::vector<Segment>& segments, const KinemeFitConfig& cfg,
                             GmmFitReport* report = nullptr);

KinemeAssignment assign_kineme(const KinemeModel& model, const Segment& segment);
Reconstruction reconstruct(const KinemeModel& model, int kineme_id);

// Projects segments into the model subspace, one row per segment.
Eigen::MatrixXd project_segments(const KinemeModel& model, const std::vector<Segment>& segments);

// Total mixture log density of already-projected rows.
double em_loglik(const KinemeModel& model, const Eigen::MatrixXd& projected);

// Persistence: one structured text document; floats carry 17 significant
// digits so a save/load round-trip is bit-exact.
void save_kineme_model(const std::string& path, const KinemeModel& model);
KinemeModel load_kineme_model(const std::string& path);

}  // namespace kinemo
