#include <algorithm>
#include <numeric>

#include "kinemo/errors.hpp"
#include "kinemo/rng.hpp"
#include "kinemo/textio.hpp"
#include "learners_internal.hpp"

namespace kinemo {

namespace {

struct TreeNode {
    int feature = -1;       // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int leaf_class = 0;
};

struct Tree {
    std::vector<TreeNode> nodes;

    int predict(const Eigen::RowVectorXd& x) const {
        int at = 0;
        while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
            const auto& nd = nodes[static_cast<std::size_t>(at)];
            at = x(nd.feature) <= nd.threshold ? nd.left : nd.right;
        }
        return nodes[static_cast<std::size_t>(at)].leaf_class;
    }
};

double gini(const std::vector<long>& counts, long total) {
    if (total == 0) return 0.0;
    double g = 1.0;
    for (long c : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        g -= p * p;
    }
    return g;
}

int majority_class(const std::vector<long>& counts) {
    int best = 0;
    for (std::size_t c = 1; c < counts.size(); ++c)
        if (counts[c] > counts[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
    return best;
}

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& X, const std::vector<int>& y, int n_classes,
                int max_depth, int max_features, Rng& rng)
        : X_(X), y_(y), n_classes_(n_classes), max_depth_(max_depth),
          max_features_(std::min<int>(max_features, static_cast<int>(X.cols()))), rng_(rng) {}

    Tree build(std::vector<int> indices) {
        tree_.nodes.clear();
        grow(std::move(indices), 0);
        return std::move(tree_);
    }

private:
    int grow(std::vector<int> indices, int depth) {
        std::vector<long> counts(static_cast<std::size_t>(n_classes_), 0);
        for (int i : indices) ++counts[static_cast<std::size_t>(y_[static_cast<std::size_t>(i)])];
        const long total = static_cast<long>(indices.size());
        const double parent_gini = gini(counts, total);

        const int node_id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.push_back({});
        tree_.nodes[static_cast<std::size_t>(node_id)].leaf_class = majority_class(counts);

        if (depth >= max_depth_ || total < 2 || parent_gini == 0.0) return node_id;

        // candidate features: a random subset without replacement
        std::vector<int> feats(static_cast<std::size_t>(X_.cols()));
        std::iota(feats.begin(), feats.end(), 0);
        for (int k = 0; k < max_features_; ++k) {
            const auto j = k + static_cast<int>(rng_.uniform_index(feats.size() - static_cast<std::size_t>(k)));
            std::swap(feats[static_cast<std::size_t>(k)], feats[static_cast<std::size_t>(j)]);
        }
        feats.resize(static_cast<std::size_t>(max_features_));

        double best_gain = 0.0;
        int best_feat = -1;
        double best_thresh = 0.0;
        for (int f : feats) {
            std::vector<int> order = indices;
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                const double va = X_(a, f), vb = X_(b, f);
                if (va != vb) return va < vb;
                return a < b;
            });
            std::vector<long> left_counts(static_cast<std::size_t>(n_classes_), 0);
            std::vector<long> right_counts = counts;
            for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
                const int idx = order[pos];
                const int cls = y_[static_cast<std::size_t>(idx)];
                ++left_counts[static_cast<std::size_t>(cls)];
                --right_counts[static_cast<std::size_t>(cls)];
                const double v = X_(idx, f);
                const double v_next = X_(order[pos + 1], f);
                if (v == v_next) continue;
                const long nl = static_cast<long>(pos) + 1;
                const long nr = total - nl;
                const double child =
                    (static_cast<double>(nl) * gini(left_counts, nl) +
                     static_cast<double>(nr) * gini(right_counts, nr)) /
                    static_cast<double>(total);
                const double gain = parent_gini - child;
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
    const std::vector<int>& y_;
    int n_classes_;
    int max_depth_;
    int max_features_;
    Rng& rng_;
    Tree tree_;
};

class RfImpl : public ClassifierImpl {
public:
    std::vector<Tree> trees;
    int n_classes = 2;

    std::vector<int> predict_indices(const Eigen::MatrixXd& X) const override {
        std::vector<int> out(static_cast<std::size_t>(X.rows()));
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            std::vector<long> votes(static_cast<std::size_t>(n_classes), 0);
            for (const auto& t : trees) ++votes[static_cast<std::size_t>(t.predict(X.row(i)))];
            out[static_cast<std::size_t>(i)] = majority_class(votes);
        }
        return out;
    }

    nlohmann::json to_json() const override {
        nlohmann::json jt = nlohmann::json::array();
        for (const auto& t : trees) {
            nlohmann::json jn = nlohmann::json::array();
            for (const auto& nd : t.nodes)
                jn.push_back({{"f", nd.feature},
                              {"t", format_double(nd.threshold)},
                              {"l", nd.left},
                              {"r", nd.right},
                              {"c", nd.leaf_class}});
            jt.push_back(std::move(jn));
        }
        return {{"kind", "rf"}, {"n_classes", n_classes}, {"trees", jt}};
    }

    std::string kind() const override { return "rf"; }
};

}  // namespace

std::unique_ptr<ClassifierImpl> train_rf(const ClassifierSpec& spec, const Eigen::MatrixXd& X,
                                         const std::vector<int>& y, int n_classes) {
    const int n_estimators = hyper_int(spec.hyperparameters, "n_estimators", 8);
    const int max_depth = hyper_int(spec.hyperparameters, "max_depth", 7);
    const int max_features = hyper_int(spec.hyperparameters, "max_features", 7);
    if (n_estimators < 1) throw ConfigError("rf needs at least one estimator");
    if (max_depth < 1) throw ConfigError("rf max_depth must be positive");
    if (max_features < 1) throw ConfigError("rf max_features must be positive");

    auto impl = std::make_unique<RfImpl>();
    impl->n_classes = n_classes;
    const auto n = static_cast<std::size_t>(X.rows());
    for (int t = 0; t < n_estimators; ++t) {
        Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(t)));
        std::vector<int> indices(n);
        for (std::size_t i = 0; i < n; ++i)
            indices[i] = static_cast<int>(rng.uniform_index(n));  // bootstrap sample
        TreeBuilder builder(X, y, n_classes, max_depth, max_features, rng);
        impl->trees.push_back(builder.build(std::move(indices)));
    }
    return impl;
}

std::unique_ptr<ClassifierImpl> rf_from_json(const nlohmann::json& j) {
    auto impl = std::make_unique<RfImpl>();
    impl->n_classes = j.at("n_classes").get<int>();
    for (const auto& jt : j.at("trees")) {
        Tree t;
        for (const auto& jn : jt) {
            TreeNode nd;
            nd.feature = jn.at("f").get<int>();
            nd.threshold = parse_double(jn.at("t").get<std::string>(), "rf threshold");
            nd.left = jn.at("l").get<int>();
            nd.right = jn.at("r").get<int>();
            nd.leaf_class = jn.at("c").get<int>();
            t.nodes.push_back(nd);
        }
        impl->trees.push_back(std::move(t));
    }
    return impl;
}

}  // namespace kinemo
