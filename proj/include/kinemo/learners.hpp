#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "kinemo/types.hpp"

namespace kinemo {

enum class Family { lr, rf, svc, gbt, mlp };

Family family_from_name(const std::string& name);
std::string family_name(Family family);

// Hyperparameters are kept as text so specs serialize losslessly; typed
// accessors parse on use.
using HyperParams = std::map<std::string, std::string>;

double hyper_double(const HyperParams& h, const std::string& key, double fallback);
int hyper_int(const HyperParams& h, const std::string& key, int fallback);
std::string hyper_str(const HyperParams& h, const std::string& key,
                      const std::string& fallback);

struct ClassifierSpec {
    Family family = Family::lr;
    HyperParams hyperparameters;
    std::uint64_t seed = 0;
};

// Per-feature training mean and standard deviation applied before any fit or
// prediction; zero-variance columns pass through unscaled.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;

    static Standardizer fit(const Eigen::MatrixXd& X);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

class ClassifierImpl;  // internal, per-family fitted state

struct TrainedModel {
    ClassifierSpec spec;
    Standardizer standardizer;
    std::vector<Label> classes;  // ordered label set; impl predicts indices into it
    std::shared_ptr<const ClassifierImpl> impl;
};

// Optional numeric traces recorded during fitting; used by diagnostics and
// tests rather than the prediction path.
struct TrainDiagnostics {
    std::vector<double> gbt_stage_loss;   // training logistic loss after each stage
    std::vector<double> smo_dual_trace;   // dual objective after each SMO step
    double smo_max_kkt_violation = 0.0;
    bool record_smo_dual = false;         // set before train() to fill the trace
};

TrainedModel train(const ClassifierSpec& spec, const Eigen::MatrixXd& X,
                   const std::vector<Label>& y, TrainDiagnostics* diag = nullptr);

std::vector<Label> predict(const TrainedModel& model, const Eigen::MatrixXd& X);

// Hyperparameter lattice in canonical order.
using Grid = std::vector<HyperParams>;

Grid default_grid(Family family);

// Trains every grid point on (X_train, y_train), scores weighted F1 on
// (X_val, y_val), and returns the best point's spec; ties break toward the
// earliest point in lattice order. Points run in parallel with derived seeds.
ClassifierSpec grid_search(Family family, const Grid& grid, const Eigen::MatrixXd& X_train,
                           const std::vector<Label>& y_train, const Eigen::MatrixXd& X_val,
                           const std::vector<Label>& y_val, std::uint64_t seed,
                           bool multiclass = false, int workers = 1);

void save_trained_model(const std::string& path, const TrainedModel& model);
TrainedModel load_trained_model(const std::string& path);

}  // namespace kinemo
