#include "kinemo/gmm.hpp"

#include <cmath>
#include <limits>

#include "kinemo/errors.hpp"
#include "kinemo/rng.hpp"

namespace kinemo {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Per-component log densities for all rows: n x K matrix.
// log N(x; mu_k, diag(var_k)) = -0.5 * (d*log(2pi) + sum log var + sum (x-mu)^2/var)
Eigen::MatrixXd component_log_density(const Eigen::MatrixXd& X, const DiagGmm& g) {
    const auto n = X.rows();
    const int K = g.components();
    const int d = g.dim();
    Eigen::MatrixXd out(n, K);
    for (int k = 0; k < K; ++k) {
        const Eigen::RowVectorXd mu = g.means.row(k);
        const Eigen::VectorXd inv_var = g.variances.row(k).cwiseInverse().transpose();
        const double log_norm =
            -0.5 * (d * kLog2Pi + g.variances.row(k).array().log().sum());
        const Eigen::MatrixXd sq = (X.rowwise() - mu).array().square().matrix();
        out.col(k) = (-0.5 * (sq * inv_var)).array() + log_norm;
    }
    return out;
}

// Row-wise logsumexp of log(w_k) + logdens.
Eigen::VectorXd mixture_log_density(const Eigen::MatrixXd& log_dens,
                                    const Eigen::VectorXd& weights) {
    Eigen::MatrixXd shifted = log_dens;
    shifted.rowwise() += weights.array().log().matrix().transpose();
    const Eigen::VectorXd row_max = shifted.rowwise().maxCoeff();
    const Eigen::VectorXd sums =
        (shifted.colwise() - row_max).array().exp().rowwise().sum().matrix();
    return (row_max.array() + sums.array().log()).matrix();
}

// k-means++ seeding: first centre uniform, then D^2-weighted sampling.
Eigen::MatrixXd kmeanspp_seeds(const Eigen::MatrixXd& X, int K, Rng& rng) {
    const auto n = X.rows();
    Eigen::MatrixXd centers(K, X.cols());
    centers.row(0) = X.row(static_cast<Eigen::Index>(rng.uniform_index(n)));
    Eigen::VectorXd d2 = (X.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int k = 1; k < K; ++k) {
        const double total = d2.sum();
        Eigen::Index pick;
        if (total <= 0.0) {
            pick = static_cast<Eigen::Index>(rng.uniform_index(n));
        } else {
            double target = rng.uniform() * total;
            pick = n - 1;
            double acc = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2(i);
                if (acc >= target) {
                    pick = i;
                    break;
                }
            }
        }
        centers.row(k) = X.row(pick);
        d2 = d2.cwiseMin((X.rowwise() - centers.row(k)).rowwise().squaredNorm());
    }
    return centers;
}

DiagGmm init_from_seeds(const Eigen::MatrixXd& X, const Eigen::MatrixXd& centers,
                        double variance_floor) {
    const auto n = X.rows();
    const int K = static_cast<int>(centers.rows());
    const int d = static_cast<int>(X.cols());

    // hard-assign to the nearest seed
    std::vector<int> assign(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (int k = 0; k < K; ++k) {
            const double dist = (X.row(i) - centers.row(k)).squaredNorm();
            if (dist < best) {
                best = dist;
                arg = k;
            }
        }
        assign[static_cast<std::size_t>(i)] = arg;
    }

    const Eigen::RowVectorXd global_mean = X.colwise().mean();
    Eigen::RowVectorXd global_var =
        (X.rowwise() - global_mean).array().square().colwise().mean().matrix();
    global_var = global_var.cwiseMax(variance_floor);

    DiagGmm g;
    g.weights.resize(K);
    g.means = centers;
    g.variances.resize(K, d);
    for (int k = 0; k < K; ++k) {
        Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(d);
        Eigen::RowVectorXd sq = Eigen::RowVectorXd::Zero(d);
        long count = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (assign[static_cast<std::size_t>(i)] != k) continue;
            sum += X.row(i);
            sq += X.row(i).array().square().matrix();
            ++count;
        }
        if (count > 0) {
            const Eigen::RowVectorXd mean = sum / static_cast<double>(count);
            g.means.row(k) = mean;
            const Eigen::RowVectorXd var =
                sq / static_cast<double>(count) - mean.array().square().matrix();
            g.variances.row(k) = var.cwiseMax(variance_floor);
            g.weights(k) = static_cast<double>(count) / static_cast<double>(n);
        } else {
            g.variances.row(k) = global_var;
            g.weights(k) = 1.0 / static_cast<double>(n);
        }
    }
    g.weights /= g.weights.sum();
    return g;
}

struct EmResult {
    DiagGmm model;
    GmmFitReport report;
};

EmResult run_em(const Eigen::MatrixXd& X, DiagGmm g, const GmmFitOptions& opts) {
    const auto n = X.rows();
    const int K = g.components();
    EmResult res;
    res.report.init_loglik = g.total_loglik(X);

    double prev_ll = res.report.init_loglik;
    res.report.loglik_trace.push_back(prev_ll);

    for (int iter = 0; iter < opts.max_iters; ++iter) {
        // E-step in log space
        Eigen::MatrixXd logp = component_log_density(X, g);
        logp.rowwise() += g.weights.array().log().matrix().transpose();
        const Eigen::VectorXd row_max = logp.rowwise().maxCoeff();
        Eigen::MatrixXd resp = (logp.colwise() - row_max).array().exp().matrix();
        const Eigen::VectorXd row_sum = resp.rowwise().sum();
        resp = row_sum.cwiseInverse().asDiagonal() * resp;

        // M-step; a component that lost all responsibility mass is re-seeded
        // at the point the current mixture explains worst.
        const Eigen::VectorXd nk = resp.colwise().sum().transpose();
        bool rescued = false;
        for (int k = 0; k < K; ++k) {
            if (nk(k) > 1e-10 * static_cast<double>(n)) continue;
            const Eigen::VectorXd dens = g.log_density(X);
            Eigen::Index worst;
            dens.minCoeff(&worst);
            g.means.row(k) = X.row(worst);
            const Eigen::RowVectorXd gm = X.colwise().mean();
            g.variances.row(k) = (X.rowwise() - gm)
                                     .array()
                                     .square()
                                     .colwise()
                                     .mean()
                                     .matrix()
                                     .cwiseMax(opts.variance_floor);
            g.weights(k) = 1.0 / static_cast<double>(n);
            g.weights /= g.weights.sum();
            rescued = true;
            ++res.report.rescues;
        }
        if (!rescued) {
            const Eigen::MatrixXd wsumx = resp.transpose() * X;  // K x d
            for (int k = 0; k < K; ++k) {
                const Eigen::RowVectorXd mu = wsumx.row(k) / nk(k);
                g.means.row(k) = mu;
                const Eigen::RowVectorXd var =
                    (resp.col(k).transpose() *
                     (X.rowwise() - mu).array().square().matrix()) /
                    nk(k);
                g.variances.row(k) = var.cwiseMax(opts.variance_floor);
            }
            g.weights = nk / static_cast<double>(n);
            g.weights /= g.weights.sum();
        }

        const double ll = g.total_loglik(X);
        res.report.loglik_trace.push_back(ll);
        res.report.iterations = iter + 1;
        prev_ll = ll;
        const double gain = ll - res.report.loglik_trace[res.report.loglik_trace.size() - 2];
        if (!rescued && gain >= 0.0 && gain < opts.tol) break;
    }
    res.report.final_loglik = prev_ll;
    res.model = std::move(g);
    return res;
}

}  // namespace

Eigen::VectorXd DiagGmm::log_density(const Eigen::MatrixXd& X) const {
    return mixture_log_density(component_log_density(X, *this), weights);
}

double DiagGmm::total_loglik(const Eigen::MatrixXd& X) const {
    return log_density(X).sum();
}

Eigen::VectorXd DiagGmm::posterior(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd logp = component_log_density(x.transpose(), *this);
    logp.rowwise() += weights.array().log().matrix().transpose();
    const double m = logp.maxCoeff();
    Eigen::VectorXd p = (logp.array() - m).exp().matrix().transpose();
    return p / p.sum();
}

DiagGmm fit_gmm(const Eigen::MatrixXd& X, int K, const GmmFitOptions& opts,
                GmmFitReport* report) {
    if (K < 1) throw ConfigError("mixture needs at least one component");
    if (X.rows() < K) throw InsufficientDataError("fewer points than mixture components");
    if (!X.allFinite()) throw NumericError("non-finite values in mixture input");
    const double total_var = (X.rowwise() - X.colwise().mean()).squaredNorm();
    if (total_var <= 0.0) throw DegenerateInputError("mixture input has zero variance");

    EmResult best;
    bool have_best = false;
    for (int r = 0; r < opts.n_restarts; ++r) {
        Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(r)));
        const Eigen::MatrixXd seeds = kmeanspp_seeds(X, K, rng);
        DiagGmm init = init_from_seeds(X, seeds, opts.variance_floor);
        EmResult res = run_em(X, std::move(init), opts);
        if (!have_best || res.report.final_loglik > best.report.final_loglik) {
            best = std::move(res);
            have_best = true;
        }
    }
    if (report) *report = best.report;
    return best.model;
}

}  // namespace kinemo
