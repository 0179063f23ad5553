#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "kinemo/errors.hpp"
#include "kinemo/kineme_model.hpp"
#include "kinemo/rng.hpp"

using namespace kinemo;

namespace {

constexpr int kSegLen = 30;

Eigen::MatrixXd prototype(int which) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(kSegLen, 3);
    for (int t = 0; t < kSegLen; ++t) {
        const double u = static_cast<double>(t) / kSegLen;
        switch (which) {
            case 0: m(t, 0) = 0.20 * std::sin(2.0 * M_PI * u); break;
            case 1: m(t, 1) = 0.15 * std::sin(4.0 * M_PI * u); break;
            default:
                m(t, 2) = 0.12 * (u - 0.5);
                m(t, 0) = 0.08 * std::cos(2.0 * M_PI * u);
        }
    }
    return m;
}

Eigen::MatrixXd centered(const Eigen::MatrixXd& values) {
    Eigen::MatrixXd out = values;
    for (int c = 0; c < 3; ++c) out.col(c).array() -= out.col(c).mean();
    return out;
}

Segment mk_segment(const Eigen::MatrixXd& values, long start = 0) {
    Segment s;
    s.recording_id = "t";
    s.start_frame = start;
    s.values = values;
    return s;
}

// prototype + posture offset + iid noise; the offset must wash out
std::vector<Segment> sample_segments(int per_proto, double noise, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Segment> segs;
    for (int p = 0; p < 3; ++p) {
        const Eigen::MatrixXd proto = prototype(p);
        for (int i = 0; i < per_proto; ++i) {
            Eigen::MatrixXd v = proto;
            for (int c = 0; c < 3; ++c) v.col(c).array() += rng.uniform(-0.3, 0.3);
            for (int t = 0; t < kSegLen; ++t)
                for (int c = 0; c < 3; ++c) v(t, c) += noise * rng.normal();
            segs.push_back(mk_segment(v));
        }
    }
    return segs;
}

KinemeFitConfig proto_cfg(std::uint64_t seed) {
    KinemeFitConfig cfg;
    cfg.K = 3;
    cfg.variance_target = 0.95;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("flatten centers each angular dimension") {
    Eigen::MatrixXd constant = Eigen::MatrixXd::Constant(kSegLen, 3, 0.2);
    const Eigen::VectorXd flat = flatten(mk_segment(constant));
    CHECK(flat.cwiseAbs().maxCoeff() < 1e-15);

    Eigen::MatrixXd two(2, 3);
    two << 1.0, 3.0, 5.0,
           2.0, 7.0, 4.0;
    const Eigen::VectorXd f = flatten(mk_segment(two));
    // layout [pitch | yaw | roll], each block centered
    CHECK(f(0) == doctest::Approx(-0.5));
    CHECK(f(1) == doctest::Approx(0.5));
    CHECK(f(2) == doctest::Approx(-2.0));
    CHECK(f(3) == doctest::Approx(2.0));
    CHECK(f(4) == doctest::Approx(0.5));
    CHECK(f(5) == doctest::Approx(-0.5));
}

TEST_CASE("unflatten inverts flatten on the centered matrix") {
    Rng rng(3);
    Eigen::MatrixXd v(kSegLen, 3);
    for (int t = 0; t < kSegLen; ++t)
        for (int c = 0; c < 3; ++c) v(t, c) = 0.3 * rng.normal();
    const Eigen::MatrixXd round = unflatten(flatten(mk_segment(v)));
    CHECK((round - centered(v)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("fit recovers prototype motion shapes") {
    const auto segs = sample_segments(80, 0.01, 42);
    const KinemeModel model = fit_kineme_model(segs, proto_cfg(1));
    CHECK(model.K == 3);
    CHECK(model.seg_len_frames == kSegLen);

    // every prototype must be matched by some back-projected mixture mean
    for (int p = 0; p < 3; ++p) {
        const Eigen::MatrixXd target = centered(prototype(p));
        double best = 1e300;
        for (int k = 0; k < model.K; ++k) {
            const Reconstruction r = reconstruct(model, k);
            best = std::min(best, (r.values - target).cwiseAbs().maxCoeff());
        }
        CHECK(best < 0.05);
    }
}

TEST_CASE("identical segments are degenerate input") {
    std::vector<Segment> segs(40, mk_segment(Eigen::MatrixXd::Constant(kSegLen, 3, 0.1)));
    CHECK_THROWS_AS(fit_kineme_model(segs, proto_cfg(0)), DegenerateInputError);
}

TEST_CASE("too few segments raise insufficient data") {
    const auto segs = sample_segments(5, 0.01, 4);  // 15 < 10*K
    CHECK_THROWS_AS(fit_kineme_model(segs, proto_cfg(0)), InsufficientDataError);
}

TEST_CASE("assignment posterior is a distribution and argmax matches brute force") {
    const auto segs = sample_segments(40, 0.01, 8);
    const KinemeModel model = fit_kineme_model(segs, proto_cfg(2));
    Rng rng(9);
    for (int i = 0; i < 30; ++i) {
        const auto& seg = segs[static_cast<std::size_t>(rng.uniform_index(segs.size()))];
        const KinemeAssignment a = assign_kineme(model, seg);
        CHECK(a.posterior.sum() == doctest::Approx(1.0).epsilon(1e-9));
        // brute-force density evaluation over all components
        const Eigen::VectorXd y = model.projection * (flatten(seg) - model.center_offset);
        int best = 0;
        double best_logp = -1e300;
        for (int k = 0; k < model.K; ++k) {
            double logp = std::log(model.mixture.weights(k));
            for (int d = 0; d < model.dim; ++d) {
                const double var = model.mixture.variances(k, d);
                const double diff = y(d) - model.mixture.means(k, d);
                logp += -0.5 * (std::log(2.0 * M_PI * var) + diff * diff / var);
            }
            if (logp > best_logp) {
                best_logp = logp;
                best = k;
            }
        }
        CHECK(a.kineme_id == best);
    }
}

TEST_CASE("reconstruct then assign is a fixed point on separated kinemes") {
    const auto segs = sample_segments(60, 0.01, 5);
    const KinemeModel model = fit_kineme_model(segs, proto_cfg(3));
    for (int k = 0; k < model.K; ++k) {
        const Reconstruction r = reconstruct(model, k);
        Segment seg = mk_segment(r.values);
        CHECK(assign_kineme(model, seg).kineme_id == k);
    }
}

TEST_CASE("reconstructions have zero per-dimension mean") {
    const auto segs = sample_segments(50, 0.02, 6);
    const KinemeModel model = fit_kineme_model(segs, proto_cfg(4));
    for (int k = 0; k < model.K; ++k) {
        const Reconstruction r = reconstruct(model, k);
        for (int c = 0; c < 3; ++c) CHECK(std::abs(r.values.col(c).mean()) < 1e-9);
    }
}

TEST_CASE("reconstruct is pure and rejects out-of-range ids") {
    const auto segs = sample_segments(40, 0.01, 7);
    const KinemeModel model = fit_kineme_model(segs, proto_cfg(5));
    const Reconstruction a = reconstruct(model, 1);
    const Reconstruction b = reconstruct(model, 1);
    CHECK(a.values == b.values);
    CHECK_THROWS_AS(reconstruct(model, model.K), DomainError);
    CHECK_THROWS_AS(reconstruct(model, -1), DomainError);
}

TEST_CASE("length-mismatched segments raise shape errors") {
    const auto segs = sample_segments(40, 0.01, 10);
    const KinemeModel model = fit_kineme_model(segs, proto_cfg(6));
    Segment bad = mk_segment(Eigen::MatrixXd::Zero(kSegLen + 1, 3));
    CHECK_THROWS_AS(assign_kineme(model, bad), ShapeError);
}

TEST_CASE("projection rows are orthonormal") {
    const auto segs = sample_segments(40, 0.05, 11);
    const KinemeModel model = fit_kineme_model(segs, proto_cfg(7));
    const Eigen::MatrixXd gram = model.projection * model.projection.transpose();
    CHECK((gram - Eigen::MatrixXd::Identity(model.dim, model.dim)).cwiseAbs().maxCoeff() <
          1e-9);
}

TEST_CASE("fit is deterministic given a seed") {
    const auto segs = sample_segments(40, 0.02, 12);
    const KinemeModel a = fit_kineme_model(segs, proto_cfg(8));
    const KinemeModel b = fit_kineme_model(segs, proto_cfg(8));
    CHECK(a.center_offset == b.center_offset);
    CHECK(a.projection == b.projection);
    CHECK(a.mixture.weights == b.mixture.weights);
    CHECK(a.mixture.means == b.mixture.means);
    CHECK(a.mixture.variances == b.mixture.variances);
    CHECK(a.train_loglik == b.train_loglik);
}

TEST_CASE("em log-likelihood is additive over duplicated rows") {
    const auto segs = sample_segments(40, 0.02, 13);
    const KinemeModel model = fit_kineme_model(segs, proto_cfg(9));
    const Eigen::MatrixXd Y = project_segments(model, segs);
    Eigen::MatrixXd one = Y.topRows(1);
    Eigen::MatrixXd two(2, Y.cols());
    two << one, one;
    CHECK(em_loglik(model, two) ==
          doctest::Approx(2.0 * em_loglik(model, one)).epsilon(1e-12));
}

TEST_CASE("model persistence round-trips bit-exactly") {
    const auto segs = sample_segments(50, 0.02, 14);
    KinemeModel model = fit_kineme_model(segs, proto_cfg(10));
    model.fps = 30.0;

    const auto dir = std::filesystem::temp_directory_path() / "kinemo_model_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "model.json").string();
    save_kineme_model(path, model);
    const KinemeModel back = load_kineme_model(path);

    CHECK(back.K == model.K);
    CHECK(back.seg_len_frames == model.seg_len_frames);
    CHECK(back.fps == model.fps);
    CHECK(back.dim == model.dim);
    CHECK(back.center_offset == model.center_offset);
    CHECK(back.projection == model.projection);
    CHECK(back.mixture.weights == model.mixture.weights);
    CHECK(back.mixture.means == model.mixture.means);
    CHECK(back.mixture.variances == model.mixture.variances);
    CHECK(back.train_loglik == model.train_loglik);
    CHECK(back.fit_config.seed == model.fit_config.seed);

    // assignments agree before and after the round trip
    for (const auto& seg : segs) {
        CHECK(assign_kineme(model, seg).kineme_id == assign_kineme(back, seg).kineme_id);
    }
}
