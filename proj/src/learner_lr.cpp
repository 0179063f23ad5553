#include <cmath>

#include "kinemo/errors.hpp"
#include "learners_internal.hpp"

namespace kinemo {

namespace {

// Multinomial logistic regression, fitted by full-batch gradient descent
// with an adaptive step (halve on non-decrease, grow on success). The l1
// penalty uses the sign subgradient, zero at zero.
class LrImpl : public ClassifierImpl {
public:
    Eigen::MatrixXd weights;  // C x (D+1); last column is the bias

    std::vector<int> predict_indices(const Eigen::MatrixXd& X) const override {
        std::vector<int> out(static_cast<std::size_t>(X.rows()));
        const Eigen::MatrixXd logits = score(X);
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            int arg = 0;
            for (Eigen::Index c = 1; c < logits.cols(); ++c)
                if (logits(i, c) > logits(i, arg)) arg = static_cast<int>(c);
            out[static_cast<std::size_t>(i)] = arg;
        }
        return out;
    }

    Eigen::MatrixXd score(const Eigen::MatrixXd& X) const {
        if (X.cols() + 1 != weights.cols()) throw ShapeError("feature dimension mismatch in lr");
        Eigen::MatrixXd logits = X * weights.leftCols(weights.cols() - 1).transpose();
        logits.rowwise() += weights.col(weights.cols() - 1).transpose();
        return logits;
    }

    nlohmann::json to_json() const override {
        return {{"kind", "lr"}, {"weights", eigen_mat_to_json(weights)}};
    }

    std::string kind() const override { return "lr"; }
};

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
    const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
    Eigen::MatrixXd p = (logits.colwise() - row_max).array().exp().matrix();
    const Eigen::VectorXd sums = p.rowwise().sum();
    return sums.cwiseInverse().asDiagonal() * p;
}

struct Objective {
    const Eigen::MatrixXd& X;
    const std::vector<int>& y;
    int n_classes;
    std::string penalty;
    double lambda;

    double loss(const Eigen::MatrixXd& W) const {
        LrImpl tmp;
        tmp.weights = W;
        const Eigen::MatrixXd logits = tmp.score(X);
        const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
        const Eigen::VectorXd lse =
            row_max.array() +
            (logits.colwise() - row_max).array().exp().rowwise().sum().log();
        double nll = 0.0;
        for (Eigen::Index i = 0; i < X.rows(); ++i)
            nll += lse(i) - logits(i, y[static_cast<std::size_t>(i)]);
        nll /= static_cast<double>(X.rows());
        return nll + penalty_value(W);
    }

    double penalty_value(const Eigen::MatrixXd& W) const {
        if (penalty == "none" || lambda == 0.0) return 0.0;
        const auto coef = W.leftCols(W.cols() - 1);
        if (penalty == "l2") return lambda * coef.squaredNorm();
        if (penalty == "l1") return lambda * coef.cwiseAbs().sum();
        throw ConfigError("unknown lr penalty '" + penalty + "'");
    }

    Eigen::MatrixXd grad(const Eigen::MatrixXd& W) const {
        LrImpl tmp;
        tmp.weights = W;
        const Eigen::MatrixXd P = softmax_rows(tmp.score(X));
        Eigen::MatrixXd delta = P;  // P - onehot(y)
        for (Eigen::Index i = 0; i < X.rows(); ++i)
            delta(i, y[static_cast<std::size_t>(i)]) -= 1.0;
        const double inv_n = 1.0 / static_cast<double>(X.rows());
        Eigen::MatrixXd g(W.rows(), W.cols());
        g.leftCols(W.cols() - 1) = inv_n * (delta.transpose() * X);
        g.col(W.cols() - 1) = inv_n * delta.colwise().sum().transpose();
        if (penalty == "l2" && lambda > 0.0)
            g.leftCols(W.cols() - 1) += 2.0 * lambda * W.leftCols(W.cols() - 1);
        else if (penalty == "l1" && lambda > 0.0)
            g.leftCols(W.cols() - 1) +=
                lambda * W.leftCols(W.cols() - 1).array().sign().matrix();
        return g;
    }
};

}  // namespace

std::unique_ptr<ClassifierImpl> train_lr(const ClassifierSpec& spec, const Eigen::MatrixXd& X,
                                         const std::vector<int>& y, int n_classes) {
    Objective obj{X, y, n_classes, hyper_str(spec.hyperparameters, "penalty", "l2"),
                  hyper_double(spec.hyperparameters, "lambda", 1e-4)};
    if (obj.penalty != "l1" && obj.penalty != "l2" && obj.penalty != "none")
        throw ConfigError("unknown lr penalty '" + obj.penalty + "'");
    if (obj.lambda < 0.0) throw ConfigError("lr lambda must be nonnegative");

    auto impl = std::make_unique<LrImpl>();
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n_classes, X.cols() + 1);
    double step = 1.0;
    double loss = obj.loss(W);
    const int max_iters = 2000;
    for (int iter = 0; iter < max_iters; ++iter) {
        const Eigen::MatrixXd g = obj.grad(W);
        bool accepted = false;
        while (step >= 1e-14) {
            const Eigen::MatrixXd trial = W - step * g;
            const double trial_loss = obj.loss(trial);
            if (trial_loss <= loss - 1e-14) {
                W = trial;
                const double gain = loss - trial_loss;
                loss = trial_loss;
                step *= 1.25;
                accepted = true;
                if (gain < 1e-10 * std::max(1.0, std::abs(loss))) iter = max_iters;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }
    impl->weights = W;
    return impl;
}

std::unique_ptr<ClassifierImpl> lr_from_json(const nlohmann::json& j) {
    auto impl = std::make_unique<LrImpl>();
    impl->weights = eigen_mat_from_json(j.at("weights"));
    return impl;
}

}  // namespace kinemo
