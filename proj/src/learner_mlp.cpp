#include <cmath>

#include "kinemo/errors.hpp"
#include "kinemo/rng.hpp"
#include "kinemo/textio.hpp"
#include "learners_internal.hpp"

namespace kinemo {

namespace {

Eigen::MatrixXd he_init(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    Eigen::MatrixXd m(rows, cols);
    const double scale = std::sqrt(2.0 / static_cast<double>(cols));
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
    return m;
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& z) { return z.cwiseMax(0.0); }

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
    const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
    Eigen::MatrixXd p = (logits.colwise() - row_max).array().exp().matrix();
    const Eigen::VectorXd sums = p.rowwise().sum();
    return sums.cwiseInverse().asDiagonal() * p;
}

}  // namespace

void MlpNet::init(int n_inputs, int n_classes, std::uint64_t seed) {
    Rng rng(seed);
    w1 = he_init(12, n_inputs, rng);
    w2 = he_init(6, 12, rng);
    w3 = he_init(n_classes, 6, rng);
    b1 = Eigen::VectorXd::Zero(12);
    b2 = Eigen::VectorXd::Zero(6);
    b3 = Eigen::VectorXd::Zero(n_classes);
}

Eigen::MatrixXd MlpNet::forward(const Eigen::MatrixXd& X) const {
    Eigen::MatrixXd h1 = X * w1.transpose();
    h1.rowwise() += b1.transpose();
    h1 = relu(h1);
    Eigen::MatrixXd h2 = h1 * w2.transpose();
    h2.rowwise() += b2.transpose();
    h2 = relu(h2);
    Eigen::MatrixXd logits = h2 * w3.transpose();
    logits.rowwise() += b3.transpose();
    return softmax_rows(logits);
}

double MlpNet::loss_and_grad(const Eigen::MatrixXd& X, const std::vector<int>& y,
                             MlpNet& grad) const {
    const auto n = X.rows();
    // forward pass keeping pre-activations
    Eigen::MatrixXd z1 = X * w1.transpose();
    z1.rowwise() += b1.transpose();
    const Eigen::MatrixXd h1 = relu(z1);
    Eigen::MatrixXd z2 = h1 * w2.transpose();
    z2.rowwise() += b2.transpose();
    const Eigen::MatrixXd h2 = relu(z2);
    Eigen::MatrixXd logits = h2 * w3.transpose();
    logits.rowwise() += b3.transpose();
    const Eigen::MatrixXd p = softmax_rows(logits);

    double loss = 0.0;
    Eigen::MatrixXd delta3 = p;  // p - onehot(y), scaled by 1/n below
    for (Eigen::Index i = 0; i < n; ++i) {
        loss -= std::log(std::max(p(i, y[static_cast<std::size_t>(i)]), 1e-300));
        delta3(i, y[static_cast<std::size_t>(i)]) -= 1.0;
    }
    loss /= static_cast<double>(n);
    delta3 /= static_cast<double>(n);

    grad.w3 = delta3.transpose() * h2;
    grad.b3 = delta3.colwise().sum().transpose();
    Eigen::MatrixXd delta2 = (delta3 * w3).cwiseProduct(
        (z2.array() > 0.0).cast<double>().matrix());
    grad.w2 = delta2.transpose() * h1;
    grad.b2 = delta2.colwise().sum().transpose();
    Eigen::MatrixXd delta1 = (delta2 * w2).cwiseProduct(
        (z1.array() > 0.0).cast<double>().matrix());
    grad.w1 = delta1.transpose() * X;
    grad.b1 = delta1.colwise().sum().transpose();
    return loss;
}

Eigen::VectorXd MlpNet::flatten_params() const {
    const Eigen::Index total = w1.size() + w2.size() + w3.size() + b1.size() + b2.size() + b3.size();
    Eigen::VectorXd theta(total);
    Eigen::Index at = 0;
    for (const Eigen::MatrixXd* m : {&w1, &w2, &w3}) {
        theta.segment(at, m->size()) = Eigen::Map<const Eigen::VectorXd>(m->data(), m->size());
        at += m->size();
    }
    for (const Eigen::VectorXd* v : {&b1, &b2, &b3}) {
        theta.segment(at, v->size()) = *v;
        at += v->size();
    }
    return theta;
}

void MlpNet::set_params(const Eigen::VectorXd& theta) {
    Eigen::Index at = 0;
    for (Eigen::MatrixXd* m : {&w1, &w2, &w3}) {
        Eigen::Map<Eigen::VectorXd>(m->data(), m->size()) = theta.segment(at, m->size());
        at += m->size();
    }
    for (Eigen::VectorXd* v : {&b1, &b2, &b3}) {
        *v = theta.segment(at, v->size());
        at += v->size();
    }
}

namespace {

// Feed-forward net with hidden layers of 12 and 6 ReLU units trained by Adam
// on categorical cross-entropy for a fixed 200 epochs.
class MlpImpl : public ClassifierImpl {
public:
    MlpNet net;

    std::vector<int> predict_indices(const Eigen::MatrixXd& X) const override {
        const Eigen::MatrixXd p = net.forward(X);
        std::vector<int> out(static_cast<std::size_t>(X.rows()));
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            int arg = 0;
            for (Eigen::Index c = 1; c < p.cols(); ++c)
                if (p(i, c) > p(i, arg)) arg = static_cast<int>(c);
            out[static_cast<std::size_t>(i)] = arg;
        }
        return out;
    }

    nlohmann::json to_json() const override {
        return {{"kind", "mlp"},
                {"w1", eigen_mat_to_json(net.w1)}, {"b1", eigen_vec_to_json(net.b1)},
                {"w2", eigen_mat_to_json(net.w2)}, {"b2", eigen_vec_to_json(net.b2)},
                {"w3", eigen_mat_to_json(net.w3)}, {"b3", eigen_vec_to_json(net.b3)}};
    }

    std::string kind() const override { return "mlp"; }
};

struct AdamState {
    Eigen::VectorXd m, v;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long t = 0;

    void init(Eigen::Index size) {
        m = Eigen::VectorXd::Zero(size);
        v = Eigen::VectorXd::Zero(size);
    }

    Eigen::VectorXd step(const Eigen::VectorXd& g, double lr) {
        ++t;
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
        const double mc = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double vc = 1.0 - std::pow(beta2, static_cast<double>(t));
        return (lr / mc) * m.cwiseQuotient(((v / vc).cwiseSqrt().array() + eps).matrix());
    }
};

}  // namespace

std::unique_ptr<ClassifierImpl> train_mlp(const ClassifierSpec& spec, const Eigen::MatrixXd& X,
                                          const std::vector<int>& y, int n_classes) {
    const double lr = hyper_double(spec.hyperparameters, "learning_rate", 1e-3);
    const int batch_size = hyper_int(spec.hyperparameters, "batch_size", 32);
    const int epochs = hyper_int(spec.hyperparameters, "epochs", 200);
    if (!(lr > 0.0)) throw ConfigError("mlp learning rate must be positive");
    if (batch_size < 1) throw ConfigError("mlp batch size must be positive");

    auto impl = std::make_unique<MlpImpl>();
    impl->net.init(static_cast<int>(X.cols()), n_classes, derive_seed(spec.seed, 1));

    AdamState adam;
    adam.init(impl->net.flatten_params().size());
    Rng shuffle_rng(derive_seed(spec.seed, 2));
    const auto n = static_cast<std::size_t>(X.rows());
    std::vector<int> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);

    MlpNet grad;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(batch_size)) {
            const std::size_t count = std::min(static_cast<std::size_t>(batch_size), n - start);
            Eigen::MatrixXd xb(static_cast<Eigen::Index>(count), X.cols());
            std::vector<int> yb(count);
            for (std::size_t i = 0; i < count; ++i) {
                xb.row(static_cast<Eigen::Index>(i)) = X.row(order[start + i]);
                yb[i] = y[static_cast<std::size_t>(order[start + i])];
            }
            impl->net.loss_and_grad(xb, yb, grad);
            const Eigen::VectorXd update = adam.step(grad.flatten_params(), lr);
            impl->net.set_params(impl->net.flatten_params() - update);
        }
    }
    return impl;
}

std::unique_ptr<ClassifierImpl> mlp_from_json(const nlohmann::json& j) {
    auto impl = std::make_unique<MlpImpl>();
    impl->net.w1 = eigen_mat_from_json(j.at("w1"));
    impl->net.b1 = eigen_vec_from_json(j.at("b1"));
    impl->net.w2 = eigen_mat_from_json(j.at("w2"));
    impl->net.b2 = eigen_vec_from_json(j.at("b2"));
    impl->net.w3 = eigen_mat_from_json(j.at("w3"));
    impl->net.b3 = eigen_vec_from_json(j.at("b3"));
    return impl;
}

}  // namespace kinemo
