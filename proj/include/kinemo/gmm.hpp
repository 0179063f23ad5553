#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace kinemo {

// Gaussian mixture with diagonal covariances, fitted by EM.
struct DiagGmm {
    Eigen::VectorXd weights;    // K, on the simplex
    Eigen::MatrixXd means;      // K x d
    Eigen::MatrixXd variances;  // K x d, every entry >= variance floor

    int components() const { return static_cast<int>(weights.size()); }
    int dim() const { return static_cast<int>(means.cols()); }

    // Log density of each row of X under the mixture (n-vector).
    Eigen::VectorXd log_density(const Eigen::MatrixXd& X) const;
    // Total log likelihood of X.
    double total_loglik(const Eigen::MatrixXd& X) const;
    // Posterior over components for a single point.
    Eigen::VectorXd posterior(const Eigen::VectorXd& x) const;
};

struct GmmFitOptions {
    int max_iters = 300;
    double tol = 1e-6;            // stop when total log-likelihood gain < tol
    double variance_floor = 1e-6;
    int n_restarts = 5;
    std::uint64_t seed = 0;
};

struct GmmFitReport {
    double init_loglik = 0.0;   // after k-means++ initialization, winning restart
    double final_loglik = 0.0;
    int iterations = 0;
    int rescues = 0;            // empty-component re-seed events, winning restart
    std::vector<double> loglik_trace;  // per-iteration totals, winning restart
};

// Fits a K-component mixture to the rows of X. Each restart seeds means by
// k-means++ with an independently derived stream; the restart with the best
// final log-likelihood wins (ties to the lowest restart index).
DiagGmm fit_gmm(const Eigen::MatrixXd& X, int K, const GmmFitOptions& opts,
                GmmFitReport* report = nullptr);

}  // namespace kinemo
