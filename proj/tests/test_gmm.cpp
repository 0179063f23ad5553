#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "kinemo/errors.hpp"
#include "kinemo/gmm.hpp"
#include "kinemo/rng.hpp"

using namespace kinemo;

namespace {

// Draws n points from a known diagonal-Gaussian mixture.
Eigen::MatrixXd sample_mixture(const std::vector<double>& weights,
                               const std::vector<Eigen::Vector2d>& means, double sigma, int n,
                               std::uint64_t seed, std::vector<int>* labels = nullptr) {
    Rng rng(seed);
    Eigen::MatrixXd X(n, 2);
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        std::size_t k = 0;
        double acc = 0.0;
        for (; k < weights.size(); ++k) {
            acc += weights[k];
            if (u < acc) break;
        }
        if (k == weights.size()) k = weights.size() - 1;
        X(i, 0) = means[k](0) + sigma * rng.normal();
        X(i, 1) = means[k](1) + sigma * rng.normal();
        if (labels) labels->push_back(static_cast<int>(k));
    }
    return X;
}

}  // namespace

TEST_CASE("single standard component scores the known density at its mean") {
    DiagGmm g;
    g.weights = Eigen::VectorXd::Ones(1);
    g.means = Eigen::MatrixXd::Zero(1, 1);
    g.variances = Eigen::MatrixXd::Ones(1, 1);
    Eigen::MatrixXd x(1, 1);
    x(0, 0) = 0.0;
    // log(1/sqrt(2*pi))
    CHECK(g.total_loglik(x) == doctest::Approx(-0.9189385332046727).epsilon(1e-12));
}

TEST_CASE("duplicating a datum doubles its log-likelihood contribution") {
    DiagGmm g;
    g.weights = Eigen::VectorXd::Ones(2) * 0.5;
    g.means = (Eigen::MatrixXd(2, 1) << -1.0, 2.0).finished();
    g.variances = (Eigen::MatrixXd(2, 1) << 0.5, 2.0).finished();
    Eigen::MatrixXd one(1, 1), two(2, 1);
    one(0, 0) = 0.7;
    two(0, 0) = 0.7;
    two(1, 0) = 0.7;
    CHECK(g.total_loglik(two) == doctest::Approx(2.0 * g.total_loglik(one)).epsilon(1e-12));
}

TEST_CASE("posterior sums to one") {
    DiagGmm g;
    g.weights = (Eigen::VectorXd(3) << 0.2, 0.5, 0.3).finished();
    g.means = (Eigen::MatrixXd(3, 2) << 0, 0, 3, 1, -2, 4).finished();
    g.variances = Eigen::MatrixXd::Ones(3, 2);
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        Eigen::VectorXd x(2);
        x << rng.normal() * 3, rng.normal() * 3;
        const Eigen::VectorXd p = g.posterior(x);
        CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(p.minCoeff() >= 0.0);
    }
}

TEST_CASE("em recovers a well-separated three-component mixture") {
    const std::vector<double> w = {0.5, 0.3, 0.2};
    const std::vector<Eigen::Vector2d> mu = {{0.0, 0.0}, {8.0, 0.0}, {0.0, 8.0}};
    const Eigen::MatrixXd X = sample_mixture(w, mu, 1.0, 4000, 99);

    GmmFitOptions opts;
    opts.seed = 1;
    GmmFitReport report;
    const DiagGmm g = fit_gmm(X, 3, opts, &report);

    CHECK(g.weights.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(report.final_loglik >= report.init_loglik);

    // match fitted components to the generators by nearest mean
    std::vector<int> perm = {0, 1, 2};
    std::vector<int> best_perm = perm;
    double best_err = 1e300;
    std::sort(perm.begin(), perm.end());
    do {
        double err = 0.0;
        for (int k = 0; k < 3; ++k)
            err += (g.means.row(perm[static_cast<std::size_t>(k)]).transpose() -
                    Eigen::VectorXd(mu[static_cast<std::size_t>(k)]))
                       .norm();
        if (err < best_err) {
            best_err = err;
            best_perm = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    for (int k = 0; k < 3; ++k) {
        const auto fitted = g.means.row(best_perm[static_cast<std::size_t>(k)]);
        CHECK(std::abs(fitted(0) - mu[static_cast<std::size_t>(k)](0)) < 0.1);
        CHECK(std::abs(fitted(1) - mu[static_cast<std::size_t>(k)](1)) < 0.1);
        CHECK(std::abs(g.weights(best_perm[static_cast<std::size_t>(k)]) -
                       w[static_cast<std::size_t>(k)]) < 0.03);
    }
}

TEST_CASE("per-iteration log-likelihood never decreases across seeds") {
    const std::vector<double> w = {0.4, 0.6};
    const std::vector<Eigen::Vector2d> mu = {{-3.0, 0.0}, {3.0, 0.0}};
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const Eigen::MatrixXd X = sample_mixture(w, mu, 0.8, 600, 1000 + seed);
        GmmFitOptions opts;
        opts.seed = seed;
        opts.n_restarts = 2;
        GmmFitReport report;
        fit_gmm(X, 2, opts, &report);
        CHECK(report.rescues == 0);
        for (std::size_t i = 1; i < report.loglik_trace.size(); ++i)
            CHECK(report.loglik_trace[i] >= report.loglik_trace[i - 1] - 1e-9);
    }
}

TEST_CASE("fitted log-likelihood is at least the k-means++ initialization") {
    const Eigen::MatrixXd X =
        sample_mixture({0.5, 0.5}, {{-2.0, 1.0}, {2.0, -1.0}}, 1.0, 500, 7);
    GmmFitOptions opts;
    opts.seed = 3;
    GmmFitReport report;
    fit_gmm(X, 2, opts, &report);
    CHECK(report.final_loglik >= report.init_loglik - 1e-9);
}

TEST_CASE("same seed gives bit-identical fits") {
    const Eigen::MatrixXd X =
        sample_mixture({0.5, 0.5}, {{-2.0, 1.0}, {2.0, -1.0}}, 1.0, 400, 11);
    GmmFitOptions opts;
    opts.seed = 21;
    const DiagGmm a = fit_gmm(X, 2, opts);
    const DiagGmm b = fit_gmm(X, 2, opts);
    CHECK(a.weights == b.weights);
    CHECK(a.means == b.means);
    CHECK(a.variances == b.variances);
}

TEST_CASE("variances never fall below the floor") {
    // tight cluster forces tiny variances
    Eigen::MatrixXd X(40, 1);
    for (int i = 0; i < 40; ++i) X(i, 0) = (i < 20 ? 0.0 : 5.0) + 1e-9 * i;
    GmmFitOptions opts;
    opts.seed = 2;
    const DiagGmm g = fit_gmm(X, 2, opts);
    CHECK(g.variances.minCoeff() >= opts.variance_floor - 1e-18);
}

TEST_CASE("degenerate input raises") {
    const Eigen::MatrixXd X = Eigen::MatrixXd::Constant(50, 2, 3.14);
    GmmFitOptions opts;
    CHECK_THROWS_AS(fit_gmm(X, 2, opts), DegenerateInputError);
    CHECK_THROWS_AS(fit_gmm(Eigen::MatrixXd::Random(1, 2), 2, opts), InsufficientDataError);
}
