#pragma once

// Internal classifier machinery shared by the per-family translation units
// and exercised directly by numeric tests.

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <nlohmann/json.hpp>
#include <vector>

#include "kinemo/learners.hpp"

namespace kinemo {

class ClassifierImpl {
public:
    virtual ~ClassifierImpl() = default;
    // X is already standardized; returns class indices in [0, n_classes).
    virtual std::vector<int> predict_indices(const Eigen::MatrixXd& X) const = 0;
    virtual nlohmann::json to_json() const = 0;
    virtual std::string kind() const = 0;
};

std::unique_ptr<ClassifierImpl> train_lr(const ClassifierSpec& spec, const Eigen::MatrixXd& X,
                                         const std::vector<int>& y, int n_classes);
std::unique_ptr<ClassifierImpl> train_rf(const ClassifierSpec& spec, const Eigen::MatrixXd& X,
                                         const std::vector<int>& y, int n_classes);
std::unique_ptr<ClassifierImpl> train_svc(const ClassifierSpec& spec, const Eigen::MatrixXd& X,
                                          const std::vector<int>& y, int n_classes,
                                          TrainDiagnostics* diag);
std::unique_ptr<ClassifierImpl> train_gbt(const ClassifierSpec& spec, const Eigen::MatrixXd& X,
                                          const std::vector<int>& y, int n_classes,
                                          TrainDiagnostics* diag);
std::unique_ptr<ClassifierImpl> train_mlp(const ClassifierSpec& spec, const Eigen::MatrixXd& X,
                                          const std::vector<int>& y, int n_classes);

std::unique_ptr<ClassifierImpl> classifier_from_json(const nlohmann::json& j);

// per-family deserializers, dispatched on the "kind" field
std::unique_ptr<ClassifierImpl> lr_from_json(const nlohmann::json& j);
std::unique_ptr<ClassifierImpl> rf_from_json(const nlohmann::json& j);
std::unique_ptr<ClassifierImpl> svc_from_json(const nlohmann::json& j);
std::unique_ptr<ClassifierImpl> gbt_from_json(const nlohmann::json& j);
std::unique_ptr<ClassifierImpl> mlp_from_json(const nlohmann::json& j);

// shared json helpers for float arrays at 17 significant digits
nlohmann::json eigen_vec_to_json(const Eigen::VectorXd& v);
nlohmann::json eigen_mat_to_json(const Eigen::MatrixXd& m);
Eigen::VectorXd eigen_vec_from_json(const nlohmann::json& a);
Eigen::MatrixXd eigen_mat_from_json(const nlohmann::json& a);

// ---- pieces exposed for numeric verification ---------------------------

// Multilayer perceptron with hidden layers (12, 6), ReLU, softmax output.
struct MlpNet {
    Eigen::MatrixXd w1, w2, w3;  // (12 x D), (6 x 12), (C x 6)
    Eigen::VectorXd b1, b2, b3;

    void init(int n_inputs, int n_classes, std::uint64_t seed);
    Eigen::MatrixXd forward(const Eigen::MatrixXd& X) const;  // class probabilities, n x C

    // Mean cross-entropy over the batch plus gradient in a matching net.
    double loss_and_grad(const Eigen::MatrixXd& X, const std::vector<int>& y, MlpNet& grad) const;

    // Flat parameter views for finite-difference checks.
    Eigen::VectorXd flatten_params() const;
    void set_params(const Eigen::VectorXd& theta);
};

// Kernel settings shared by SMO training and prediction.
struct SvcKernel {
    std::string kind = "rbf";  // rbf | poly | sigmoid
    double gamma = 1.0;
    double coef0 = 0.0;
    int degree = 3;

    double operator()(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
};

struct SmoResult {
    Eigen::VectorXd alpha;
    double b = 0.0;
    // indices with alpha > 0 define the support set
};

// Platt's sequential minimal optimization on labels in {-1, +1}.
// When diag && diag->record_smo_dual, the dual objective is appended after
// every successful two-multiplier step and the final maximum KKT violation
// is stored.
SmoResult smo_train(const Eigen::MatrixXd& X, const std::vector<double>& y, double C,
                    const SvcKernel& kernel, double tol, std::uint64_t seed,
                    TrainDiagnostics* diag);

}  // namespace kinemo
