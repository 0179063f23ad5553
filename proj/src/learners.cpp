#include "kinemo/learners.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "kinemo/errors.hpp"
#include "kinemo/metrics.hpp"
#include "kinemo/parallel.hpp"
#include "kinemo/rng.hpp"
#include "kinemo/textio.hpp"
#include "learners_internal.hpp"

namespace kinemo {

Family family_from_name(const std::string& name) {
    if (name == "lr") return Family::lr;
    if (name == "rf") return Family::rf;
    if (name == "svc") return Family::svc;
    if (name == "gbt" || name == "xgb") return Family::gbt;
    if (name == "mlp") return Family::mlp;
    throw ConfigError("unknown classifier family '" + name + "'");
}

std::string family_name(Family family) {
    switch (family) {
        case Family::lr: return "lr";
        case Family::rf: return "rf";
        case Family::svc: return "svc";
        case Family::gbt: return "gbt";
        case Family::mlp: return "mlp";
    }
    return "?";
}

double hyper_double(const HyperParams& h, const std::string& key, double fallback) {
    auto it = h.find(key);
    if (it == h.end()) return fallback;
    return parse_double(it->second, "hyperparameter " + key);
}

int hyper_int(const HyperParams& h, const std::string& key, int fallback) {
    auto it = h.find(key);
    if (it == h.end()) return fallback;
    return static_cast<int>(parse_long(it->second, "hyperparameter " + key));
}

std::string hyper_str(const HyperParams& h, const std::string& key,
                      const std::string& fallback) {
    auto it = h.find(key);
    return it == h.end() ? fallback : it->second;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
    Standardizer s;
    s.mean = X.colwise().mean().transpose();
    const Eigen::MatrixXd centered = X.rowwise() - s.mean.transpose();
    s.scale = (centered.array().square().colwise().mean()).sqrt().matrix().transpose();
    for (Eigen::Index i = 0; i < s.scale.size(); ++i)
        if (s.scale(i) <= 0.0) s.scale(i) = 1.0;
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
    if (X.cols() != mean.size())
        throw ShapeError("feature dimension " + std::to_string(X.cols()) +
                         " does not match standardizer dimension " + std::to_string(mean.size()));
    Eigen::MatrixXd out = X.rowwise() - mean.transpose();
    out = out * scale.cwiseInverse().asDiagonal();
    return out;
}

TrainedModel train(const ClassifierSpec& spec, const Eigen::MatrixXd& X,
                   const std::vector<Label>& y, TrainDiagnostics* diag) {
    if (static_cast<std::size_t>(X.rows()) != y.size())
        throw ShapeError("row count does not match label count");
    if (X.rows() == 0) throw EmptyInputError("empty training set");
    if (!X.allFinite()) throw NumericError("non-finite values in training features");

    TrainedModel model;
    model.spec = spec;
    const std::set<Label> label_set(y.begin(), y.end());
    model.classes.assign(label_set.begin(), label_set.end());
    if (model.classes.size() < 2)
        throw DegenerateInputError("training labels contain a single class");
    std::map<Label, int> index_of;
    std::map<Label, long> per_class;
    for (std::size_t i = 0; i < model.classes.size(); ++i)
        index_of[model.classes[i]] = static_cast<int>(i);
    std::vector<int> yi(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        yi[i] = index_of.at(y[i]);
        ++per_class[y[i]];
    }
    for (const auto& [label, count] : per_class)
        if (count < 2)
            throw InsufficientDataError("class " + std::to_string(label) +
                                        " has fewer than 2 training rows");

    model.standardizer = Standardizer::fit(X);
    const Eigen::MatrixXd Xs = model.standardizer.apply(X);
    const int n_classes = static_cast<int>(model.classes.size());

    std::unique_ptr<ClassifierImpl> impl;
    switch (spec.family) {
        case Family::lr: impl = train_lr(spec, Xs, yi, n_classes); break;
        case Family::rf: impl = train_rf(spec, Xs, yi, n_classes); break;
        case Family::svc: impl = train_svc(spec, Xs, yi, n_classes, diag); break;
        case Family::gbt: impl = train_gbt(spec, Xs, yi, n_classes, diag); break;
        case Family::mlp: impl = train_mlp(spec, Xs, yi, n_classes); break;
    }
    model.impl = std::move(impl);
    return model;
}

std::vector<Label> predict(const TrainedModel& model, const Eigen::MatrixXd& X) {
    if (!model.impl) throw ConfigError("predict called on an un-trained model");
    const Eigen::MatrixXd Xs = model.standardizer.apply(X);
    const std::vector<int> idx = model.impl->predict_indices(Xs);
    std::vector<Label> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        out[i] = model.classes[static_cast<std::size_t>(idx[i])];
    return out;
}

namespace {

std::string num(double v) {
    // short canonical text for grid values
    std::string s = format_double(v);
    return s;
}

}  // namespace

Grid default_grid(Family family) {
    Grid grid;
    switch (family) {
        case Family::lr: {
            for (const char* penalty : {"l1", "l2"})
                for (int e = -6; e <= 3; ++e)
                    grid.push_back({{"penalty", penalty}, {"lambda", num(std::pow(10.0, e))}});
            grid.push_back({{"penalty", "none"}, {"lambda", "0"}});
            break;
        }
        case Family::rf: {
            for (int est = 2; est <= 8; ++est)
                for (int depth = 3; depth <= 7; ++depth)
                    for (int feat = 3; feat <= 7; ++feat)
                        grid.push_back({{"n_estimators", std::to_string(est)},
                                        {"max_depth", std::to_string(depth)},
                                        {"max_features", std::to_string(feat)}});
            break;
        }
        case Family::svc: {
            for (const char* kernel : {"rbf", "poly", "sigmoid"})
                for (double c : {0.1, 1.0, 10.0, 100.0}) {
                    for (int e = -4; e <= 0; ++e)
                        grid.push_back({{"kernel", kernel},
                                        {"c", num(c)},
                                        {"gamma", num(std::pow(10.0, e))}});
                    grid.push_back({{"kernel", kernel}, {"c", num(c)}, {"gamma", "scale"}});
                    grid.push_back({{"kernel", kernel}, {"c", num(c)}, {"gamma", "auto"}});
                }
            break;
        }
        case Family::gbt: {
            for (int est : {50, 100, 150})
                for (int depth = 3; depth <= 7; ++depth)
                    for (double lr : {0.0005, 0.001, 0.005, 0.01, 0.05, 0.1})
                        grid.push_back({{"n_estimators", std::to_string(est)},
                                        {"max_depth", std::to_string(depth)},
                                        {"learning_rate", num(lr)}});
            break;
        }
        case Family::mlp: {
            for (double lr : {1e-4, 1e-3, 1e-2})
                for (int batch : {16, 24, 32, 64})
                    grid.push_back({{"learning_rate", num(lr)},
                                    {"batch_size", std::to_string(batch)}});
            break;
        }
    }
    return grid;
}

ClassifierSpec grid_search(Family family, const Grid& grid, const Eigen::MatrixXd& X_train,
                           const std::vector<Label>& y_train, const Eigen::MatrixXd& X_val,
                           const std::vector<Label>& y_val, std::uint64_t seed, bool multiclass,
                           int workers) {
    if (grid.empty()) throw ConfigError("empty hyperparameter grid");
    if (std::set<Label>(y_val.begin(), y_val.end()).size() < 2)
        throw ConfigError("validation set must contain at least two classes");

    std::vector<double> scores(grid.size(), -1.0);
    parallel_for(grid.size(), workers, [&](std::size_t i) {
        ClassifierSpec spec;
        spec.family = family;
        spec.hyperparameters = grid[i];
        spec.seed = derive_seed(seed, i);
        const TrainedModel m = train(spec, X_train, y_train);
        const std::vector<Label> pred = predict(m, X_val);
        scores[i] = compute_metrics(y_val, pred, multiclass).weighted_f1;
    });

    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;

    ClassifierSpec out;
    out.family = family;
    out.hyperparameters = grid[best];
    out.seed = derive_seed(seed, best);
    return out;
}

nlohmann::json eigen_vec_to_json(const Eigen::VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(format_double(v(i)));
    return a;
}

nlohmann::json eigen_mat_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(format_double(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::VectorXd eigen_vec_from_json(const nlohmann::json& a) {
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = parse_double(a[i].get<std::string>(), "array");
    return v;
}

Eigen::MatrixXd eigen_mat_from_json(const nlohmann::json& a) {
    if (a.empty()) return Eigen::MatrixXd(0, 0);
    Eigen::MatrixXd m(a.size(), a[0].size());
    for (std::size_t r = 0; r < a.size(); ++r)
        for (std::size_t c = 0; c < a[r].size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                parse_double(a[r][c].get<std::string>(), "matrix");
    return m;
}

std::unique_ptr<ClassifierImpl> classifier_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "lr") return lr_from_json(j);
    if (kind == "rf") return rf_from_json(j);
    if (kind == "svc") return svc_from_json(j);
    if (kind == "gbt") return gbt_from_json(j);
    if (kind == "mlp") return mlp_from_json(j);
    throw ParseError("unknown classifier kind '" + kind + "'");
}

void save_trained_model(const std::string& path, const TrainedModel& model) {
    if (!model.impl) throw ConfigError("cannot save an un-trained model");
    nlohmann::json j;
    j["format"] = "kinemo/classifier/v1";
    j["family"] = family_name(model.spec.family);
    j["hyperparameters"] = model.spec.hyperparameters;
    j["seed"] = model.spec.seed;
    nlohmann::json mean = nlohmann::json::array(), scale = nlohmann::json::array();
    for (Eigen::Index i = 0; i < model.standardizer.mean.size(); ++i) {
        mean.push_back(format_double(model.standardizer.mean(i)));
        scale.push_back(format_double(model.standardizer.scale(i)));
    }
    j["standardizer"] = {{"mean", mean}, {"scale", scale}};
    j["classes"] = model.classes;
    j["params"] = model.impl->to_json();
    write_text_file(path, j.dump(2) + "\n");
}

TrainedModel load_trained_model(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("classifier file " + path + ": " + e.what());
    }
    try {
        if (j.at("format") != "kinemo/classifier/v1")
            throw ParseError("unrecognized classifier format in " + path);
        TrainedModel m;
        m.spec.family = family_from_name(j.at("family").get<std::string>());
        m.spec.hyperparameters = j.at("hyperparameters").get<HyperParams>();
        m.spec.seed = j.at("seed").get<std::uint64_t>();
        const auto& std_j = j.at("standardizer");
        const auto& mean = std_j.at("mean");
        const auto& scale = std_j.at("scale");
        m.standardizer.mean.resize(mean.size());
        m.standardizer.scale.resize(scale.size());
        for (std::size_t i = 0; i < mean.size(); ++i) {
            m.standardizer.mean(static_cast<Eigen::Index>(i)) =
                parse_double(mean[i].get<std::string>(), "standardizer mean");
            m.standardizer.scale(static_cast<Eigen::Index>(i)) =
                parse_double(scale[i].get<std::string>(), "standardizer scale");
        }
        m.classes = j.at("classes").get<std::vector<Label>>();
        m.impl = classifier_from_json(j.at("params"));
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("classifier file " + path + ": " + e.what());
    }
}

}  // namespace kinemo
