#include "kinemo/kineme_model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <sstream>

#include "kinemo/errors.hpp"
#include "kinemo/textio.hpp"

#include <nlohmann/json.hpp>

namespace kinemo {

void KinemeModel::validate() const {
    if (K < 2) throw ConfigError("kineme model needs K >= 2");
    if (mixture.components() != K || mixture.dim() != dim)
        throw ShapeError("mixture shape inconsistent with model header");
    if (std::abs(mixture.weights.sum() - 1.0) > 1e-9)
        throw NumericError("mixture weights do not sum to 1");
    if (mixture.weights.minCoeff() < 0.0) throw NumericError("negative mixture weight");
    if ((mixture.variances.array() < fit_config.variance_floor - 1e-15).any())
        throw NumericError("mixture variance below floor");
    const Eigen::MatrixXd gram = projection * projection.transpose();
    if ((gram - Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff() > 1e-9)
        throw NumericError("projection rows are not orthonormal");
}

Eigen::VectorXd flatten(const Segment& segment) {
    const auto l = segment.values.rows();
    if (l < 1 || segment.values.cols() != 3) throw ShapeError("segment must be l x 3");
    Eigen::VectorXd out(3 * l);
    for (int dim = 0; dim < 3; ++dim) {
        const double mean = segment.values.col(dim).mean();
        out.segment(dim * l, l) = segment.values.col(dim).array() - mean;
    }
    return out;
}

Eigen::MatrixXd unflatten(const Eigen::VectorXd& flat) {
    if (flat.size() % 3 != 0) throw ShapeError("flattened segment length must be divisible by 3");
    const auto l = flat.size() / 3;
    Eigen::MatrixXd out(l, 3);
    for (int dim = 0; dim < 3; ++dim) out.col(dim) = flat.segment(dim * l, l);
    return out;
}

namespace {

Eigen::MatrixXd flatten_all(const std::vector<Segment>& segments) {
    const auto n = static_cast<Eigen::Index>(segments.size());
    const auto l = segments.front().values.rows();
    Eigen::MatrixXd X(n, 3 * l);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (segments[static_cast<std::size_t>(i)].values.rows() != l)
            throw ShapeError("segments have mixed lengths");
        X.row(i) = flatten(segments[static_cast<std::size_t>(i)]).transpose();
    }
    return X;
}

// Fixes each eigenvector's sign so the entry of largest magnitude is
// positive; keeps the projection reproducible across eigensolver details.
void canonicalize_rows(Eigen::MatrixXd& P) {
    for (Eigen::Index r = 0; r < P.rows(); ++r) {
        Eigen::Index arg = 0;
        P.row(r).cwiseAbs().maxCoeff(&arg);
        if (P(r, arg) < 0.0) P.row(r) = -P.row(r);
    }
}

}  // namespace

KinemeModel fit_kineme_model(const std::vector<Segment>& segments, const KinemeFitConfig& cfg,
                             GmmFitReport* report) {
    if (cfg.K < 2) throw ConfigError("K must be >= 2");
    if (segments.size() < 10 * static_cast<std::size_t>(cfg.K))
        throw InsufficientDataError("need at least 10*K segments, have " +
                                    std::to_string(segments.size()));

    const Eigen::MatrixXd X = flatten_all(segments);
    const auto n = X.rows();
    const auto p = X.cols();

    KinemeModel model;
    model.K = cfg.K;
    model.seg_len_frames = static_cast<int>(p / 3);
    model.fps = 0.0;  // caller may stamp the rate; persistence keeps it
    model.fit_config = cfg;
    model.center_offset = X.colwise().mean().transpose();

    const Eigen::MatrixXd Xc = X.rowwise() - model.center_offset.transpose();
    const double total_var = Xc.squaredNorm() / static_cast<double>(n);
    if (total_var <= 1e-300) throw DegenerateInputError("all segments are identical");

    const Eigen::MatrixXd cov = (Xc.transpose() * Xc) / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
    // eigenvalues ascending; walk from the top
    const Eigen::VectorXd evals = solver.eigenvalues();
    const Eigen::MatrixXd evecs = solver.eigenvectors();

    const int max_dim = static_cast<int>(std::min<Eigen::Index>(p, n));
    int d;
    if (cfg.fixed_dim > 0) {
        d = std::min(cfg.fixed_dim, max_dim);
    } else {
        d = 0;
        double captured = 0.0;
        for (int i = 0; i < max_dim; ++i) {
            const double ev = evals(p - 1 - i);
            if (ev <= 0.0) break;
            captured += ev;
            ++d;
            if (captured >= cfg.variance_target * total_var) break;
        }
        if (d == 0) d = 1;
    }

    model.dim = d;
    model.projection.resize(d, p);
    for (int i = 0; i < d; ++i) model.projection.row(i) = evecs.col(p - 1 - i).transpose();
    canonicalize_rows(model.projection);

    const Eigen::MatrixXd Y = Xc * model.projection.transpose();

    GmmFitOptions opts;
    opts.max_iters = cfg.em_max_iters;
    opts.tol = cfg.em_tol;
    opts.variance_floor = cfg.variance_floor;
    opts.n_restarts = cfg.n_restarts;
    opts.seed = cfg.seed;
    GmmFitReport rep;
    model.mixture = fit_gmm(Y, cfg.K, opts, &rep);
    model.train_loglik = rep.final_loglik;
    if (report) *report = rep;

    model.validate();
    return model;
}

KinemeAssignment assign_kineme(const KinemeModel& model, const Segment& segment) {
    if (segment.values.rows() != model.seg_len_frames)
        throw ShapeError("segment length " + std::to_string(segment.values.rows()) +
                         " does not match model l = " + std::to_string(model.seg_len_frames));
    const Eigen::VectorXd y = model.projection * (flatten(segment) - model.center_offset);
    KinemeAssignment a;
    a.posterior = model.mixture.posterior(y);
    // argmax with ties resolved to the lowest id
    a.kineme_id = 0;
    double best = a.posterior(0);
    for (int k = 1; k < model.K; ++k) {
        if (a.posterior(k) > best) {
            best = a.posterior(k);
            a.kineme_id = k;
        }
    }
    return a;
}

Reconstruction reconstruct(const KinemeModel& model, int kineme_id) {
    if (kineme_id < 0 || kineme_id >= model.K)
        throw DomainError("kineme id " + std::to_string(kineme_id) + " outside [0, " +
                          std::to_string(model.K) + ")");
    const Eigen::VectorXd flat =
        model.projection.transpose() * model.mixture.means.row(kineme_id).transpose() +
        model.center_offset;
    Reconstruction r;
    r.values = unflatten(flat);
    return r;
}

Eigen::MatrixXd project_segments(const KinemeModel& model,
                                 const std::vector<Segment>& segments) {
    Eigen::MatrixXd Y(static_cast<Eigen::Index>(segments.size()), model.dim);
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
        const auto& seg = segments[static_cast<std::size_t>(i)];
        if (seg.values.rows() != model.seg_len_frames)
            throw ShapeError("segment length does not match model");
        Y.row(i) =
            (model.projection * (flatten(seg) - model.center_offset)).transpose();
    }
    return Y;
}

double em_loglik(const KinemeModel& model, const Eigen::MatrixXd& projected) {
    if (projected.cols() != model.dim) throw ShapeError("projected rows must have d columns");
    return model.mixture.total_loglik(projected);
}

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(format_double(v(i)));
    return arr;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(format_double(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& arr, const std::string& what) {
    if (!arr.is_array()) throw ParseError(what + " is not an array");
    Eigen::VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = parse_double(arr[i].get<std::string>(), what);
    return v;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows, const std::string& what) {
    if (!rows.is_array() || rows.empty()) throw ParseError(what + " is not a non-empty array");
    const std::size_t nc = rows[0].size();
    Eigen::MatrixXd m(rows.size(), nc);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != nc) throw ParseError(what + " has ragged rows");
        for (std::size_t c = 0; c < nc; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                parse_double(rows[r][c].get<std::string>(), what);
    }
    return m;
}

}  // namespace

void save_kineme_model(const std::string& path, const KinemeModel& model) {
    nlohmann::json j;
    j["format"] = "kinemo/kineme-model/v1";
    j["k"] = model.K;
    j["seg_len_frames"] = model.seg_len_frames;
    j["fps"] = format_double(model.fps);
    j["dim"] = model.dim;
    j["center_offset"] = vector_to_json(model.center_offset);
    j["projection"] = matrix_to_json(model.projection);
    j["weights"] = vector_to_json(model.mixture.weights);
    j["means"] = matrix_to_json(model.mixture.means);
    j["variances"] = matrix_to_json(model.mixture.variances);
    j["train_loglik"] = format_double(model.train_loglik);
    j["fit_config"] = {
        {"k", model.fit_config.K},
        {"variance_target", format_double(model.fit_config.variance_target)},
        {"fixed_dim", model.fit_config.fixed_dim},
        {"n_restarts", model.fit_config.n_restarts},
        {"em_max_iters", model.fit_config.em_max_iters},
        {"em_tol", format_double(model.fit_config.em_tol)},
        {"variance_floor", format_double(model.fit_config.variance_floor)},
        {"seed", model.fit_config.seed},
    };
    write_text_file(path, j.dump(2) + "\n");
}

KinemeModel load_kineme_model(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("model file " + path + ": " + e.what());
    }
    try {
        if (j.at("format") != "kinemo/kineme-model/v1")
            throw ParseError("unrecognized model format in " + path);
        KinemeModel m;
        m.K = j.at("k").get<int>();
        m.seg_len_frames = j.at("seg_len_frames").get<int>();
        m.fps = parse_double(j.at("fps").get<std::string>(), "fps");
        m.dim = j.at("dim").get<int>();
        m.center_offset = vector_from_json(j.at("center_offset"), "center_offset");
        m.projection = matrix_from_json(j.at("projection"), "projection");
        m.mixture.weights = vector_from_json(j.at("weights"), "weights");
        m.mixture.means = matrix_from_json(j.at("means"), "means");
        m.mixture.variances = matrix_from_json(j.at("variances"), "variances");
        m.train_loglik = parse_double(j.at("train_loglik").get<std::string>(), "train_loglik");
        const auto& fc = j.at("fit_config");
        m.fit_config.K = fc.at("k").get<int>();
        m.fit_config.variance_target =
            parse_double(fc.at("variance_target").get<std::string>(), "variance_target");
        m.fit_config.fixed_dim = fc.at("fixed_dim").get<int>();
        m.fit_config.n_restarts = fc.at("n_restarts").get<int>();
        m.fit_config.em_max_iters = fc.at("em_max_iters").get<int>();
        m.fit_config.em_tol = parse_double(fc.at("em_tol").get<std::string>(), "em_tol");
        m.fit_config.variance_floor =
            parse_double(fc.at("variance_floor").get<std::string>(), "variance_floor");
        m.fit_config.seed = fc.at("seed").get<std::uint64_t>();
        m.validate();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("model file " + path + ": " + e.what());
    }
}

}  // namespace kinemo
