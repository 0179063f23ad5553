#include <cmath>

#include "kinemo/errors.hpp"
#include "kinemo/rng.hpp"
#include "kinemo/textio.hpp"
#include "learners_internal.hpp"

namespace kinemo {

double SvcKernel::operator()(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    if (kind == "rbf") return std::exp(-gamma * (a - b).squaredNorm());
    const double dot = gamma * a.dot(b) + coef0;
    if (kind == "poly") {
        double p = 1.0;
        for (int i = 0; i < degree; ++i) p *= dot;
        return p;
    }
    if (kind == "sigmoid") return std::tanh(dot);
    throw ConfigError("unknown svc kernel '" + kind + "'");
}

namespace {

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, const SvcKernel& kernel) {
    const auto n = X.rows();
    Eigen::MatrixXd K(n, n);
    if (kernel.kind == "rbf") {
        const Eigen::VectorXd sq = X.rowwise().squaredNorm();
        Eigen::MatrixXd d2 = (-2.0 * (X * X.transpose()));
        d2.colwise() += sq;
        d2.rowwise() += sq.transpose();
        K = (-kernel.gamma * d2.cwiseMax(0.0)).array().exp().matrix();
    } else {
        const Eigen::MatrixXd dot =
            (kernel.gamma * (X * X.transpose())).array() + kernel.coef0;
        if (kernel.kind == "poly") {
            K = dot;
            for (int i = 1; i < kernel.degree; ++i) K = K.cwiseProduct(dot);
        } else if (kernel.kind == "sigmoid") {
            K = dot.array().tanh().matrix();
        } else {
            throw ConfigError("unknown svc kernel '" + kernel.kind + "'");
        }
    }
    return K;
}

// Dual objective W(alpha) = sum(alpha) - 0.5 * sum_ij alpha_i alpha_j y_i y_j K_ij
double dual_objective(const Eigen::VectorXd& alpha, const std::vector<double>& y,
                      const Eigen::MatrixXd& K) {
    const auto n = alpha.size();
    Eigen::VectorXd ay(n);
    for (Eigen::Index i = 0; i < n; ++i) ay(i) = alpha(i) * y[static_cast<std::size_t>(i)];
    return alpha.sum() - 0.5 * ay.dot(K * ay);
}

// Platt's SMO with the standard two-loop structure and |E1 - E2| second
// choice heuristic. Randomized fallback scans use a seeded stream.
class SmoSolver {
public:
    SmoSolver(const Eigen::MatrixXd& K, const std::vector<double>& y, double C, double tol,
              std::uint64_t seed, TrainDiagnostics* diag)
        : K_(K), y_(y), C_(C), tol_(tol), rng_(seed), diag_(diag),
          n_(static_cast<Eigen::Index>(y.size())) {
        alpha_ = Eigen::VectorXd::Zero(n_);
        errors_ = Eigen::VectorXd::Zero(n_);
        for (Eigen::Index i = 0; i < n_; ++i) errors_(i) = -y_[static_cast<std::size_t>(i)];
    }

    SmoResult solve() {
        long num_changed = 0;
        bool examine_all = true;
        int guard = 0;
        const int max_sweeps = 2000;
        while ((num_changed > 0 || examine_all) && guard++ < max_sweeps) {
            num_changed = 0;
            if (examine_all) {
                for (Eigen::Index i = 0; i < n_; ++i) num_changed += examine(i);
            } else {
                for (Eigen::Index i = 0; i < n_; ++i)
                    if (alpha_(i) > 0.0 && alpha_(i) < C_) num_changed += examine(i);
            }
            if (examine_all)
                examine_all = false;
            else if (num_changed == 0)
                examine_all = true;
        }
        if (diag_) diag_->smo_max_kkt_violation = max_kkt_violation();
        SmoResult res;
        res.alpha = alpha_;
        res.b = b_;
        return res;
    }

    // max over points of the margin-side KKT violation at tolerance 0
    double max_kkt_violation() const {
        double worst = 0.0;
        for (Eigen::Index i = 0; i < n_; ++i) {
            const double yf = y_[static_cast<std::size_t>(i)] * f(i);
            double v = 0.0;
            if (alpha_(i) <= 1e-12)
                v = std::max(0.0, 1.0 - yf);
            else if (alpha_(i) >= C_ - 1e-12)
                v = std::max(0.0, yf - 1.0);
            else
                v = std::abs(yf - 1.0);
            worst = std::max(worst, v);
        }
        return worst;
    }

private:
    double f(Eigen::Index i) const { return errors_(i) + y_[static_cast<std::size_t>(i)]; }

    long examine(Eigen::Index i2) {
        const double y2 = y_[static_cast<std::size_t>(i2)];
        const double a2 = alpha_(i2);
        const double e2 = errors_(i2);
        const double r2 = e2 * y2;
        const bool violates = (r2 < -tol_ && a2 < C_) || (r2 > tol_ && a2 > 0.0);
        if (!violates) return 0;

        // 1) best |E1 - E2| over non-bound points
        Eigen::Index best = -1;
        double best_gap = -1.0;
        for (Eigen::Index i = 0; i < n_; ++i) {
            if (i == i2 || alpha_(i) <= 0.0 || alpha_(i) >= C_) continue;
            const double gap = std::abs(errors_(i) - e2);
            if (gap > best_gap) {
                best_gap = gap;
                best = i;
            }
        }
        if (best >= 0 && take_step(best, i2)) return 1;

        // 2) all non-bound points from a random start
        const Eigen::Index start1 = static_cast<Eigen::Index>(rng_.uniform_index(n_));
        for (Eigen::Index k = 0; k < n_; ++k) {
            const Eigen::Index i1 = (start1 + k) % n_;
            if (i1 == i2 || alpha_(i1) <= 0.0 || alpha_(i1) >= C_) continue;
            if (take_step(i1, i2)) return 1;
        }
        // 3) the whole set from a random start
        const Eigen::Index start2 = static_cast<Eigen::Index>(rng_.uniform_index(n_));
        for (Eigen::Index k = 0; k < n_; ++k) {
            const Eigen::Index i1 = (start2 + k) % n_;
            if (i1 == i2) continue;
            if (take_step(i1, i2)) return 1;
        }
        return 0;
    }

    bool take_step(Eigen::Index i1, Eigen::Index i2) {
        if (i1 == i2) return false;
        const double y1 = y_[static_cast<std::size_t>(i1)];
        const double y2 = y_[static_cast<std::size_t>(i2)];
        const double a1 = alpha_(i1), a2 = alpha_(i2);
        const double e1 = errors_(i1), e2 = errors_(i2);
        const double s = y1 * y2;

        double lo, hi;
        if (s < 0.0) {
            lo = std::max(0.0, a2 - a1);
            hi = std::min(C_, C_ + a2 - a1);
        } else {
            lo = std::max(0.0, a1 + a2 - C_);
            hi = std::min(C_, a1 + a2);
        }
        if (lo >= hi) return false;

        const double k11 = K_(i1, i1), k12 = K_(i1, i2), k22 = K_(i2, i2);
        const double eta = k11 + k22 - 2.0 * k12;
        double a2_new;
        if (eta > 0.0) {
            a2_new = a2 + y2 * (e1 - e2) / eta;
            a2_new = std::clamp(a2_new, lo, hi);
        } else {
            // evaluate the objective at both clip ends
            const double f1 = y1 * (e1 + b_) - a1 * k11 - s * a2 * k12;
            const double f2 = y2 * (e2 + b_) - s * a1 * k12 - a2 * k22;
            const double l1 = a1 + s * (a2 - lo);
            const double h1 = a1 + s * (a2 - hi);
            const double obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 +
                                  0.5 * lo * lo * k22 + s * lo * l1 * k12;
            const double obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 +
                                  0.5 * hi * hi * k22 + s * hi * h1 * k12;
            if (obj_lo < obj_hi - 1e-12)
                a2_new = lo;
            else if (obj_lo > obj_hi + 1e-12)
                a2_new = hi;
            else
                return false;
        }
        if (std::abs(a2_new - a2) < 1e-12 * (a2_new + a2 + 1e-12)) return false;
        const double a1_new = a1 + s * (a2 - a2_new);

        // threshold update
        const double b1 = e1 + y1 * (a1_new - a1) * k11 + y2 * (a2_new - a2) * k12 + b_;
        const double b2 = e2 + y1 * (a1_new - a1) * k12 + y2 * (a2_new - a2) * k22 + b_;
        double b_new;
        if (a1_new > 0.0 && a1_new < C_)
            b_new = b1;
        else if (a2_new > 0.0 && a2_new < C_)
            b_new = b2;
        else
            b_new = 0.5 * (b1 + b2);

        // error cache update
        const double d1 = y1 * (a1_new - a1), d2 = y2 * (a2_new - a2);
        for (Eigen::Index i = 0; i < n_; ++i)
            errors_(i) += d1 * K_(i1, i) + d2 * K_(i2, i) - (b_new - b_);
        alpha_(i1) = a1_new;
        alpha_(i2) = a2_new;
        b_ = b_new;
        errors_(i1) = f(i1) - y1;
        errors_(i2) = f(i2) - y2;

        if (diag_ && diag_->record_smo_dual)
            diag_->smo_dual_trace.push_back(dual_objective(alpha_, y_, K_));
        return true;
    }

    const Eigen::MatrixXd& K_;
    const std::vector<double>& y_;
    double C_;
    double tol_;
    Rng rng_;
    TrainDiagnostics* diag_;
    Eigen::Index n_;
    Eigen::VectorXd alpha_;
    Eigen::VectorXd errors_;  // E_i = f(x_i) - y_i
    double b_ = 0.0;
};

struct BinarySvc {
    Eigen::MatrixXd support_vectors;
    Eigen::VectorXd coef;  // alpha_i * y_i for support vectors
    double b = 0.0;

    double decision(const Eigen::VectorXd& x, const SvcKernel& kernel) const {
        double sum = -b;
        for (Eigen::Index i = 0; i < support_vectors.rows(); ++i)
            sum += coef(i) * kernel(support_vectors.row(i).transpose(), x);
        return sum;
    }
};

// One-vs-rest support vector classifier; binary problems keep one machine.
class SvcImpl : public ClassifierImpl {
public:
    SvcKernel kernel;
    std::vector<BinarySvc> machines;  // one per class for OvR; one for binary
    int n_classes = 2;

    std::vector<int> predict_indices(const Eigen::MatrixXd& X) const override {
        std::vector<int> out(static_cast<std::size_t>(X.rows()));
        for (Eigen::Index r = 0; r < X.rows(); ++r) {
            const Eigen::VectorXd x = X.row(r).transpose();
            if (n_classes == 2) {
                out[static_cast<std::size_t>(r)] = machines[0].decision(x, kernel) > 0.0 ? 1 : 0;
            } else {
                int arg = 0;
                double best = machines[0].decision(x, kernel);
                for (int c = 1; c < n_classes; ++c) {
                    const double d = machines[static_cast<std::size_t>(c)].decision(x, kernel);
                    if (d > best) {
                        best = d;
                        arg = c;
                    }
                }
                out[static_cast<std::size_t>(r)] = arg;
            }
        }
        return out;
    }

    nlohmann::json to_json() const override {
        nlohmann::json jm = nlohmann::json::array();
        for (const auto& m : machines)
            jm.push_back({{"sv", eigen_mat_to_json(m.support_vectors)},
                          {"coef", eigen_vec_to_json(m.coef)},
                          {"b", format_double(m.b)}});
        return {{"kind", "svc"},
                {"n_classes", n_classes},
                {"kernel", kernel.kind},
                {"gamma", format_double(kernel.gamma)},
                {"coef0", format_double(kernel.coef0)},
                {"degree", kernel.degree},
                {"machines", jm}};
    }

    std::string kind() const override { return "svc"; }
};

BinarySvc fit_binary(const Eigen::MatrixXd& X, const std::vector<double>& y, double C,
                     const SvcKernel& kernel, std::uint64_t seed, TrainDiagnostics* diag) {
    const SmoResult res = [&] {
        return smo_train(X, y, C, kernel, 1e-3, seed, diag);
    }();
    BinarySvc m;
    m.b = res.b;
    std::vector<Eigen::Index> sv;
    for (Eigen::Index i = 0; i < res.alpha.size(); ++i)
        if (res.alpha(i) > 1e-12) sv.push_back(i);
    m.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), X.cols());
    m.coef.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t k = 0; k < sv.size(); ++k) {
        m.support_vectors.row(static_cast<Eigen::Index>(k)) = X.row(sv[k]);
        m.coef(static_cast<Eigen::Index>(k)) =
            res.alpha(sv[k]) * y[static_cast<std::size_t>(sv[k])];
    }
    return m;
}

double resolve_gamma(const std::string& text, const Eigen::MatrixXd& X) {
    if (text == "auto") return 1.0 / static_cast<double>(X.cols());
    if (text == "scale") {
        const Eigen::RowVectorXd mean = X.colwise().mean();
        const double var = (X.rowwise() - mean).array().square().mean();
        return var > 0.0 ? 1.0 / (static_cast<double>(X.cols()) * var)
                         : 1.0 / static_cast<double>(X.cols());
    }
    const double g = parse_double(text, "svc gamma");
    if (!(g > 0.0)) throw ConfigError("svc gamma must be positive");
    return g;
}

}  // namespace

SmoResult smo_train(const Eigen::MatrixXd& X, const std::vector<double>& y, double C,
                    const SvcKernel& kernel, double tol, std::uint64_t seed,
                    TrainDiagnostics* diag) {
    if (static_cast<std::size_t>(X.rows()) != y.size())
        throw ShapeError("smo label count mismatch");
    const Eigen::MatrixXd K = kernel_matrix(X, kernel);
    SmoSolver solver(K, y, C, tol, seed, diag);
    return solver.solve();
}

std::unique_ptr<ClassifierImpl> train_svc(const ClassifierSpec& spec, const Eigen::MatrixXd& X,
                                          const std::vector<int>& y, int n_classes,
                                          TrainDiagnostics* diag) {
    const double C = hyper_double(spec.hyperparameters, "c", 1.0);
    if (!(C > 0.0)) throw ConfigError("svc C must be positive");

    auto impl = std::make_unique<SvcImpl>();
    impl->n_classes = n_classes;
    impl->kernel.kind = hyper_str(spec.hyperparameters, "kernel", "rbf");
    impl->kernel.gamma = resolve_gamma(hyper_str(spec.hyperparameters, "gamma", "scale"), X);
    if (impl->kernel.kind != "rbf" && impl->kernel.kind != "poly" &&
        impl->kernel.kind != "sigmoid")
        throw ConfigError("unknown svc kernel '" + impl->kernel.kind + "'");

    if (n_classes == 2) {
        std::vector<double> yb(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) yb[i] = y[i] == 1 ? 1.0 : -1.0;
        impl->machines.push_back(fit_binary(X, yb, C, impl->kernel, spec.seed, diag));
    } else {
        for (int c = 0; c < n_classes; ++c) {
            std::vector<double> yb(y.size());
            for (std::size_t i = 0; i < y.size(); ++i) yb[i] = y[i] == c ? 1.0 : -1.0;
            impl->machines.push_back(fit_binary(
                X, yb, C, impl->kernel, derive_seed(spec.seed, static_cast<std::uint64_t>(c)),
                diag));
        }
    }
    return impl;
}

std::unique_ptr<ClassifierImpl> svc_from_json(const nlohmann::json& j) {
    auto impl = std::make_unique<SvcImpl>();
    impl->n_classes = j.at("n_classes").get<int>();
    impl->kernel.kind = j.at("kernel").get<std::string>();
    impl->kernel.gamma = parse_double(j.at("gamma").get<std::string>(), "svc gamma");
    impl->kernel.coef0 = parse_double(j.at("coef0").get<std::string>(), "svc coef0");
    impl->kernel.degree = j.at("degree").get<int>();
    for (const auto& jm : j.at("machines")) {
        BinarySvc m;
        m.support_vectors = eigen_mat_from_json(jm.at("sv"));
        m.coef = eigen_vec_from_json(jm.at("coef"));
        m.b = parse_double(jm.at("b").get<std::string>(), "svc b");
        impl->machines.push_back(std::move(m));
    }
    return impl;
}

}  // namespace kinemo
