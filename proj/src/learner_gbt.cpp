#include <algorithm>
#include <cmath>

#include "kinemo/errors.hpp"
#include "kinemo/textio.hpp"
#include "learners_internal.hpp"

namespace kinemo {

namespace {

// Regression tree fitted to gradient/hessian pairs with exact greedy splits
// and second-order gain; leaves carry the damped Newton step -G/(H+lambda).
struct RegNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct RegTree {
    std::vector<RegNode> nodes;

    double predict(const Eigen::RowVectorXd& x) const {
        int at = 0;
        while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
            const auto& nd = nodes[static_cast<std::size_t>(at)];
            at = x(nd.feature) <= nd.threshold ? nd.left : nd.right;
        }
        return nodes[static_cast<std::size_t>(at)].value;
    }
};

constexpr double kLambdaReg = 1.0;

double leaf_weight(double G, double H) { return -G / (H + kLambdaReg); }

double score(double G, double H) { return G * G / (H + kLambdaReg); }

class RegTreeBuilder {
public:
    RegTreeBuilder(const Eigen::MatrixXd& X, const Eigen::VectorXd& g, const Eigen::VectorXd& h,
                   int max_depth)
        : X_(X), g_(g), h_(h), max_depth_(max_depth) {}

    RegTree build() {
        tree_.nodes.clear();
        std::vector<int> indices(static_cast<std::size_t>(X_.rows()));
        for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<int>(i);
        grow(std::move(indices), 0);
        return std::move(tree_);
    }

private:
    int grow(std::vector<int> indices, int depth) {
        double G = 0.0, H = 0.0;
        for (int i : indices) {
            G += g_(i);
            H += h_(i);
        }
        const int node_id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.push_back({});
        tree_.nodes[static_cast<std::size_t>(node_id)].value = leaf_weight(G, H);
        if (depth >= max_depth_ || indices.size() < 2) return node_id;

        double best_gain = 0.0;
        int best_feat = -1;
        double best_thresh = 0.0;
        const double parent_score = score(G, H);
        for (int f = 0; f < X_.cols(); ++f) {
            std::vector<int> order = indices;
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                const double va = X_(a, f), vb = X_(b, f);
                if (va != vb) return va < vb;
                return a < b;
            });
            double GL = 0.0, HL = 0.0;
            for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
                GL += g_(order[pos]);
                HL += h_(order[pos]);
                const double v = X_(order[pos], f);
                const double v_next = X_(order[pos + 1], f);
                if (v == v_next) continue;
                const double gain =
                    0.5 * (score(GL, HL) + score(G - GL, H - HL) - parent_score);
                if (gain > best_gain + 1e-15) {
                    best_gain = gain;
                    best_feat = f;
                    best_thresh = 0.5 * (v + v_next);
                }
            }
        }
        if (best_feat < 0) return node_id;

        std::vector<int> left_idx, right_idx;
        for (int i : indices)
            (X_(i, best_feat) <= best_thresh ? left_idx : right_idx).push_back(i);
        if (left_idx.empty() || right_idx.empty()) return node_id;
        const int left = grow(std::move(left_idx), depth + 1);
        const int right = grow(std::move(right_idx), depth + 1);
        auto& node = tree_.nodes[static_cast<std::size_t>(node_id)];
        node.feature = best_feat;
        node.threshold = best_thresh;
        node.left = left;
        node.right = right;
        return node_id;
    }

    const Eigen::MatrixXd& X_;
    const Eigen::VectorXd& g_;
    const Eigen::VectorXd& h_;
    int max_depth_;
    RegTree tree_;
};

// Stagewise boosted trees on the logistic loss; multi-class keeps one tree
// per class per stage over softmax gradients.
class GbtImpl : public ClassifierImpl {
public:
    int n_classes = 2;
    double learning_rate = 0.1;
    Eigen::VectorXd base_score;            // per-class initial raw score
    std::vector<std::vector<RegTree>> stages;  // stages x classes (1 for binary)

    Eigen::MatrixXd raw_scores(const Eigen::MatrixXd& X) const {
        const int outputs = n_classes == 2 ? 1 : n_classes;
        Eigen::MatrixXd F(X.rows(), outputs);
        for (Eigen::Index i = 0; i < X.rows(); ++i) F.row(i) = base_score.transpose();
        for (const auto& stage : stages)
            for (int c = 0; c < outputs; ++c)
                for (Eigen::Index i = 0; i < X.rows(); ++i)
                    F(i, c) += learning_rate *
                               stage[static_cast<std::size_t>(c)].predict(X.row(i));
        return F;
    }

    std::vector<int> predict_indices(const Eigen::MatrixXd& X) const override {
        const Eigen::MatrixXd F = raw_scores(X);
        std::vector<int> out(static_cast<std::size_t>(X.rows()));
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            if (n_classes == 2) {
                out[static_cast<std::size_t>(i)] = F(i, 0) > 0.0 ? 1 : 0;
            } else {
                int arg = 0;
                for (Eigen::Index c = 1; c < F.cols(); ++c)
                    if (F(i, c) > F(i, arg)) arg = static_cast<int>(c);
                out[static_cast<std::size_t>(i)] = arg;
            }
        }
        return out;
    }

    nlohmann::json to_json() const override {
        nlohmann::json js = nlohmann::json::array();
        for (const auto& stage : stages) {
            nlohmann::json jc = nlohmann::json::array();
            for (const auto& tree : stage) {
                nlohmann::json jn = nlohmann::json::array();
                for (const auto& nd : tree.nodes)
                    jn.push_back({{"f", nd.feature},
                                  {"t", format_double(nd.threshold)},
                                  {"l", nd.left},
                                  {"r", nd.right},
                                  {"v", format_double(nd.value)}});
                jc.push_back(std::move(jn));
            }
            js.push_back(std::move(jc));
        }
        return {{"kind", "gbt"},
                {"n_classes", n_classes},
                {"learning_rate", format_double(learning_rate)},
                {"base_score", eigen_vec_to_json(base_score)},
                {"stages", js}};
    }

    std::string kind() const override { return "gbt"; }
};

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
    const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
    Eigen::MatrixXd p = (logits.colwise() - row_max).array().exp().matrix();
    const Eigen::VectorXd sums = p.rowwise().sum();
    return sums.cwiseInverse().asDiagonal() * p;
}

}  // namespace

std::unique_ptr<ClassifierImpl> train_gbt(const ClassifierSpec& spec, const Eigen::MatrixXd& X,
                                          const std::vector<int>& y, int n_classes,
                                          TrainDiagnostics* diag) {
    const int n_estimators = hyper_int(spec.hyperparameters, "n_estimators", 100);
    const int max_depth = hyper_int(spec.hyperparameters, "max_depth", 3);
    const double lr = hyper_double(spec.hyperparameters, "learning_rate", 0.1);
    if (n_estimators < 1) throw ConfigError("gbt needs at least one estimator");
    if (max_depth < 1) throw ConfigError("gbt max_depth must be positive");
    if (!(lr > 0.0)) throw ConfigError("gbt learning rate must be positive");

    auto impl = std::make_unique<GbtImpl>();
    impl->n_classes = n_classes;
    impl->learning_rate = lr;
    const auto n = X.rows();
    const int outputs = n_classes == 2 ? 1 : n_classes;

    impl->base_score.resize(outputs);
    if (n_classes == 2) {
        double pos = 0.0;
        for (int c : y) pos += c;
        const double p = std::clamp(pos / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
        impl->base_score(0) = std::log(p / (1.0 - p));
    } else {
        impl->base_score.setZero();
    }

    Eigen::MatrixXd F(n, outputs);
    for (Eigen::Index i = 0; i < n; ++i) F.row(i) = impl->base_score.transpose();

    for (int stage = 0; stage < n_estimators; ++stage) {
        std::vector<RegTree> trees;
        if (n_classes == 2) {
            Eigen::VectorXd g(n), h(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                const double p = sigmoid(F(i, 0));
                g(i) = p - static_cast<double>(y[static_cast<std::size_t>(i)]);
                h(i) = std::max(p * (1.0 - p), 1e-16);
            }
            RegTreeBuilder builder(X, g, h, max_depth);
            trees.push_back(builder.build());
            for (Eigen::Index i = 0; i < n; ++i)
                F(i, 0) += lr * trees[0].predict(X.row(i));
        } else {
            const Eigen::MatrixXd P = softmax_rows(F);
            for (int c = 0; c < outputs; ++c) {
                Eigen::VectorXd g(n), h(n);
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double p = P(i, c);
                    g(i) = p - (y[static_cast<std::size_t>(i)] == c ? 1.0 : 0.0);
                    h(i) = std::max(p * (1.0 - p), 1e-16);
                }
                RegTreeBuilder builder(X, g, h, max_depth);
                trees.push_back(builder.build());
            }
            for (int c = 0; c < outputs; ++c)
                for (Eigen::Index i = 0; i < n; ++i)
                    F(i, c) += lr * trees[static_cast<std::size_t>(c)].predict(X.row(i));
        }
        impl->stages.push_back(std::move(trees));

        if (diag) {
            double loss = 0.0;
            if (n_classes == 2) {
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double p =
                        std::clamp(sigmoid(F(i, 0)), 1e-15, 1.0 - 1e-15);
                    loss -= y[static_cast<std::size_t>(i)] == 1 ? std::log(p)
                                                                : std::log(1.0 - p);
                }
            } else {
                const Eigen::MatrixXd P = softmax_rows(F);
                for (Eigen::Index i = 0; i < n; ++i)
                    loss -= std::log(
                        std::max(P(i, y[static_cast<std::size_t>(i)]), 1e-300));
            }
            diag->gbt_stage_loss.push_back(loss / static_cast<double>(n));
        }
    }
    return impl;
}

std::unique_ptr<ClassifierImpl> gbt_from_json(const nlohmann::json& j) {
    auto impl = std::make_unique<GbtImpl>();
    impl->n_classes = j.at("n_classes").get<int>();
    impl->learning_rate = parse_double(j.at("learning_rate").get<std::string>(), "gbt lr");
    impl->base_score = eigen_vec_from_json(j.at("base_score"));
    for (const auto& js : j.at("stages")) {
        std::vector<RegTree> stage;
        for (const auto& jc : js) {
            RegTree t;
            for (const auto& jn : jc) {
                RegNode nd;
                nd.feature = jn.at("f").get<int>();
                nd.threshold = parse_double(jn.at("t").get<std::string>(), "gbt threshold");
                nd.left = jn.at("l").get<int>();
                nd.right = jn.at("r").get<int>();
                nd.value = parse_double(jn.at("v").get<std::string>(), "gbt value");
                t.nodes.push_back(nd);
            }
            stage.push_back(std::move(t));
        }
        impl->stages.push_back(std::move(stage));
    }
    return impl;
}

}  // namespace kinemo
