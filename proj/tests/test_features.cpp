#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "kinemo/errors.hpp"
#include "kinemo/features.hpp"
#include "kinemo/rng.hpp"
#include "kinemo/textio.hpp"
#include "oracle_helpers.hpp"

using namespace kinemo;

namespace {

KinemeAssignment mk_assignment(int id, int K) {
    KinemeAssignment a;
    a.kineme_id = id;
    a.posterior = Eigen::VectorXd::Zero(K);
    a.posterior(id) = 1.0;
    return a;
}

KinemeHistogram hist_from(const std::vector<double>& relative) {
    KinemeHistogram h;
    h.relative = relative;
    h.counts.assign(relative.size(), 1);
    return h;
}

Segment mk_segment(const Eigen::MatrixXd& values) {
    Segment s;
    s.recording_id = "t";
    s.values = values;
    return s;
}

// small fitted model shared by the oracle comparisons
KinemeModel fitted_model(std::uint64_t seed, int K = 4, int seg_len = 20) {
    Rng rng(seed);
    std::vector<Segment> segs;
    for (int p = 0; p < K; ++p) {
        for (int i = 0; i < 45; ++i) {
            Eigen::MatrixXd v(seg_len, 3);
            for (int t = 0; t < seg_len; ++t) {
                const double u = static_cast<double>(t) / seg_len;
                v(t, 0) = 0.1 * std::sin(2.0 * M_PI * (p + 1) * u) + 0.01 * rng.normal();
                v(t, 1) = 0.1 * std::cos(2.0 * M_PI * (p + 1) * u) + 0.01 * rng.normal();
                v(t, 2) = 0.05 * u * (p + 1) + 0.01 * rng.normal();
            }
            segs.push_back(mk_segment(v));
        }
    }
    KinemeFitConfig cfg;
    cfg.K = K;
    cfg.seed = seed;
    return fit_kineme_model(segs, cfg);
}

Chunk random_chunk(const KinemeModel& model, Rng& rng, int n_segments) {
    Chunk c;
    c.recording_id = "t";
    c.chunk_index = 0;
    c.label = 1;
    for (int i = 0; i < n_segments; ++i) {
        Eigen::MatrixXd v(model.seg_len_frames, 3);
        for (int t = 0; t < model.seg_len_frames; ++t)
            for (int d = 0; d < 3; ++d) v(t, d) = 0.2 * rng.normal();
        c.segments.push_back(mk_segment(v));
    }
    return c;
}

}  // namespace

TEST_CASE("histogram relative frequencies follow the counts") {
    std::vector<KinemeAssignment> assignments;
    const std::vector<int> plan = {0, 0, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3, 3, 3, 3, 3};
    for (int id : plan) assignments.push_back(mk_assignment(id, 4));
    const KinemeHistogram h = class_histogram(assignments, 4);
    CHECK(h.counts == std::vector<long>{2, 2, 4, 8});
    CHECK(h.relative[0] == doctest::Approx(0.125));
    CHECK(h.relative[1] == doctest::Approx(0.125));
    CHECK(h.relative[2] == doctest::Approx(0.25));
    CHECK(h.relative[3] == doctest::Approx(0.5));
}

TEST_CASE("uniform assignments give 1/K everywhere") {
    std::vector<KinemeAssignment> assignments;
    for (int id = 0; id < 8; ++id) assignments.push_back(mk_assignment(id, 8));
    const KinemeHistogram h = class_histogram(assignments, 8);
    for (double r : h.relative) CHECK(r == doctest::Approx(1.0 / 8.0));
    const double total = std::accumulate(h.relative.begin(), h.relative.end(), 0.0);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("empty assignments are an error") {
    CHECK_THROWS_AS(class_histogram({}, 4), EmptyInputError);
}

TEST_CASE("selection picks the extreme frequency differences") {
    const auto dset = select_discriminative(hist_from({0.5, 0.3, 0.2}),
                                            hist_from({0.2, 0.3, 0.5}), 1);
    CHECK(dset.control_ids == std::vector<int>{0});
    CHECK(dset.patient_ids == std::vector<int>{2});
}

TEST_CASE("identical histograms still yield ten distinct ids") {
    std::vector<double> uniform(16, 1.0 / 16.0);
    const auto dset = select_discriminative(hist_from(uniform), hist_from(uniform));
    CHECK(dset.control_ids == std::vector<int>{0, 1, 2, 3, 4});
    CHECK(dset.patient_ids == std::vector<int>{5, 6, 7, 8, 9});
    std::vector<int> all = dset.control_ids;
    all.insert(all.end(), dset.patient_ids.begin(), dset.patient_ids.end());
    std::sort(all.begin(), all.end());
    CHECK(std::unique(all.begin(), all.end()) == all.end());
}

TEST_CASE("selection matches an exhaustive sort oracle on random histograms") {
    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> hc(16), hp(16);
        double sc = 0.0, sp = 0.0;
        for (int i = 0; i < 16; ++i) {
            hc[static_cast<std::size_t>(i)] = rng.uniform();
            hp[static_cast<std::size_t>(i)] = rng.uniform();
            sc += hc[static_cast<std::size_t>(i)];
            sp += hp[static_cast<std::size_t>(i)];
        }
        for (int i = 0; i < 16; ++i) {
            hc[static_cast<std::size_t>(i)] /= sc;
            hp[static_cast<std::size_t>(i)] /= sp;
        }
        const auto dset = select_discriminative(hist_from(hc), hist_from(hp));

        // oracle: full sort of deltas, ties by id
        std::vector<int> ids(16);
        std::iota(ids.begin(), ids.end(), 0);
        auto delta = [&](int i) {
            return hc[static_cast<std::size_t>(i)] - hp[static_cast<std::size_t>(i)];
        };
        std::vector<int> desc = ids;
        std::sort(desc.begin(), desc.end(), [&](int a, int b) {
            return delta(a) != delta(b) ? delta(a) > delta(b) : a < b;
        });
        const std::vector<int> expect_control(desc.begin(), desc.begin() + 5);
        std::vector<int> rest(desc.begin() + 5, desc.end());
        std::sort(rest.begin(), rest.end(), [&](int a, int b) {
            return delta(a) != delta(b) ? delta(a) < delta(b) : a < b;
        });
        const std::vector<int> expect_patient(rest.begin(), rest.begin() + 5);

        CHECK(dset.control_ids == expect_control);
        CHECK(dset.patient_ids == expect_patient);
    }
}

TEST_CASE("selection is invariant to common positive rescaling of raw counts") {
    Rng rng(23);
    std::vector<KinemeAssignment> control, patient;
    for (int i = 0; i < 200; ++i) {
        control.push_back(mk_assignment(static_cast<int>(rng.uniform_index(16)), 16));
        patient.push_back(mk_assignment(static_cast<int>(rng.uniform_index(16)), 16));
    }
    const auto base = select_discriminative(class_histogram(control, 16),
                                            class_histogram(patient, 16));
    // replicate every assignment three times: raw counts scale, eta does not
    std::vector<KinemeAssignment> control3, patient3;
    for (int rep = 0; rep < 3; ++rep) {
        control3.insert(control3.end(), control.begin(), control.end());
        patient3.insert(patient3.end(), patient.begin(), patient.end());
    }
    const auto scaled = select_discriminative(class_histogram(control3, 16),
                                              class_histogram(patient3, 16));
    CHECK(base.control_ids == scaled.control_ids);
    CHECK(base.patient_ids == scaled.patient_ids);
}

TEST_CASE("too few kinemes for the selection is an error") {
    std::vector<double> five(5, 0.2);
    CHECK_THROWS_AS(select_discriminative(hist_from(five), hist_from(five)),
                    InsufficientDataError);
}

TEST_CASE("residual of a perfect reconstruction is zero") {
    Eigen::MatrixXd v(10, 3);
    for (int t = 0; t < 10; ++t)
        for (int c = 0; c < 3; ++c) v(t, c) = 0.01 * t + 0.1 * c;
    Reconstruction r;
    r.values = v;
    const ResidualSums s = residual(mk_segment(v), r);
    CHECK(s.s_pitch == 0.0);
    CHECK(s.s_yaw == 0.0);
    CHECK(s.s_roll == 0.0);
}

TEST_CASE("a constant +1 pitch difference over 60 frames sums to 60") {
    Eigen::MatrixXd seg = Eigen::MatrixXd::Zero(60, 3);
    seg.col(0).array() = 1.0;
    Reconstruction r;
    r.values = Eigen::MatrixXd::Zero(60, 3);
    const ResidualSums s = residual(mk_segment(seg), r);
    CHECK(s.s_pitch == 60.0);
    CHECK(s.s_yaw == 0.0);
}

TEST_CASE("alternating differences cancel") {
    Eigen::MatrixXd seg = Eigen::MatrixXd::Zero(40, 3);
    for (int t = 0; t < 40; ++t) seg(t, 0) = t % 2 ? 1.0 : -1.0;
    Reconstruction r;
    r.values = Eigen::MatrixXd::Zero(40, 3);
    CHECK(residual(mk_segment(seg), r).s_pitch == 0.0);
}

TEST_CASE("residual shape mismatch raises") {
    Reconstruction r;
    r.values = Eigen::MatrixXd::Zero(9, 3);
    CHECK_THROWS_AS(residual(mk_segment(Eigen::MatrixXd::Zero(10, 3)), r), ShapeError);
}

TEST_CASE("stats8 matches the worked example") {
    const auto s = stats8({1.0, 2.0, 3.0, 4.0});
    CHECK(s[0] == 1.0);
    CHECK(s[1] == 4.0);
    CHECK(s[2] == 3.0);
    CHECK(s[3] == 2.5);
    CHECK(s[4] == 2.5);
    CHECK(s[5] == doctest::Approx(std::sqrt(1.25)).epsilon(1e-12));
    CHECK(s[6] == doctest::Approx(0.0));
    CHECK(s[7] == doctest::Approx(-1.36).epsilon(1e-12));
}

TEST_CASE("stats8 of a constant vector follows the degenerate convention") {
    const auto s = stats8({5.0, 5.0, 5.0});
    CHECK(s == std::array<double, 8>{5.0, 5.0, 0.0, 5.0, 5.0, 0.0, 0.0, 0.0});
}

TEST_CASE("vectors symmetric about their mean have zero skewness") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v;
        for (int i = 0; i < 20; ++i) {
            const double x = rng.normal();
            v.push_back(1.0 + x);
            v.push_back(1.0 - x);
        }
        CHECK(std::abs(stats8(v)[6]) < 1e-12);
    }
}

TEST_CASE("stats8 matches the direct-moment oracle on random vectors") {
    Rng rng(37);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_index(30));
        std::vector<double> v(static_cast<std::size_t>(n));
        for (auto& x : v) x = 10.0 * rng.normal();
        const auto got = stats8(v);
        const auto want = oracle::stats8(v);
        for (int i = 0; i < 8; ++i)
            CHECK(got[static_cast<std::size_t>(i)] ==
                  doctest::Approx(want[static_cast<std::size_t>(i)]).epsilon(1e-9));
    }
    CHECK_THROWS_AS(stats8({}), EmptyInputError);
}

TEST_CASE("hckd features match the brute-force pipeline oracle") {
    const KinemeModel model = fitted_model(51);
    Rng rng(52);
    for (int trial = 0; trial < 100; ++trial) {
        const Chunk chunk = random_chunk(model, rng, 3 + static_cast<int>(rng.uniform_index(12)));
        const ChunkFeatures f = feat_hckd(chunk, model);
        const Eigen::VectorXd want = oracle::hckd_bruteforce(chunk, model);
        REQUIRE(f.vector.size() == 24);
        for (int i = 0; i < 24; ++i) CHECK(f.vector(i) == want(i));
    }
}

TEST_CASE("hckd blocks satisfy the internal ordering invariants") {
    const KinemeModel model = fitted_model(61);
    Rng rng(62);
    for (int trial = 0; trial < 20; ++trial) {
        const Chunk chunk = random_chunk(model, rng, 8);
        const Eigen::VectorXd v = feat_hckd(chunk, model).vector;
        for (int b = 0; b < 3; ++b) {
            const double mn = v(8 * b + 0), mx = v(8 * b + 1), range = v(8 * b + 2);
            const double median = v(8 * b + 4);
            CHECK(range == mx - mn);
            CHECK(mn <= median);
            CHECK(median <= mx);
            CHECK(mn >= 0.0);  // magnitudes are nonnegative
        }
    }
}

TEST_CASE("hckd is invariant to segment processing order") {
    const KinemeModel model = fitted_model(71);
    Rng rng(72);
    Chunk chunk = random_chunk(model, rng, 9);
    const Eigen::VectorXd a = feat_hckd(chunk, model).vector;
    std::reverse(chunk.segments.begin(), chunk.segments.end());
    const Eigen::VectorXd b = feat_hckd(chunk, model).vector;
    for (int i = 0; i < 24; ++i) CHECK(a(i) == b(i));
}

TEST_CASE("a chunk of perfect reconstructions has an all-zero hckd vector") {
    const KinemeModel model = fitted_model(81);
    Chunk chunk;
    chunk.recording_id = "t";
    for (int k = 0; k < model.K; ++k)
        chunk.segments.push_back(mk_segment(reconstruct(model, k).values));
    const Eigen::VectorXd v = feat_hckd(chunk, model).vector;
    CHECK(v.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("single-segment chunks collapse the statistics") {
    const KinemeModel model = fitted_model(91);
    Rng rng(92);
    const Chunk chunk = random_chunk(model, rng, 1);
    const Eigen::VectorXd v = feat_hckd(chunk, model).vector;
    for (int b = 0; b < 3; ++b) {
        CHECK(v(8 * b + 0) == v(8 * b + 1));  // min == max
        CHECK(v(8 * b + 0) == v(8 * b + 3));  // == mean
        CHECK(v(8 * b + 0) == v(8 * b + 4));  // == median
        CHECK(v(8 * b + 2) == 0.0);           // range
        CHECK(v(8 * b + 5) == 0.0);           // std
        CHECK(v(8 * b + 6) == 0.0);           // skew
        CHECK(v(8 * b + 7) == 0.0);           // kurt
    }
    CHECK_THROWS_AS(feat_hckd(Chunk{}, model), EmptyInputError);
}

TEST_CASE("2ckd features match the direct tally oracle") {
    const KinemeModel model = fitted_model(101, 6);
    DiscriminativeSet dset;
    dset.control_ids = {0, 2, 4};
    dset.patient_ids = {1, 3, 5};
    Rng rng(102);
    for (int trial = 0; trial < 100; ++trial) {
        const Chunk chunk = random_chunk(model, rng, 4 + static_cast<int>(rng.uniform_index(8)));
        const ChunkFeatures f = feat_2ckd(chunk, model, dset);
        const Eigen::VectorXd want =
            oracle::tckd_bruteforce(chunk, model, dset.control_ids, dset.patient_ids);
        REQUIRE(f.vector.size() == 6);
        for (int i = 0; i < 6; ++i) CHECK(f.vector(i) == want(i));
        CHECK(f.vector.minCoeff() >= 0.0);
        CHECK(f.vector.sum() <= 1.0 + 1e-12);
    }
}

TEST_CASE("a chunk concentrated on one selected kineme puts all mass there") {
    const KinemeModel model = fitted_model(111, 4);
    DiscriminativeSet dset;
    dset.control_ids = {0, 1};
    dset.patient_ids = {2, 3};
    Chunk chunk;
    chunk.recording_id = "t";
    for (int i = 0; i < 5; ++i)
        chunk.segments.push_back(mk_segment(reconstruct(model, 0).values));
    const ChunkFeatures f = feat_2ckd(chunk, model, dset);
    CHECK(f.vector(0) == 1.0);
    CHECK(f.vector.tail(3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("feature tables round-trip through disk") {
    const KinemeModel model = fitted_model(121);
    Rng rng(122);
    std::vector<ChunkFeatures> feats;
    for (int i = 0; i < 5; ++i) {
        ChunkFeatures f = feat_hckd(random_chunk(model, rng, 6), model);
        f.chunk_index = i;
        f.recording_id = "rec" + std::to_string(i % 2);
        feats.push_back(std::move(f));
    }
    const auto dir = std::filesystem::temp_directory_path() / "kinemo_features_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "features.csv").string();
    write_feature_table(path, feats, {"seed: 5"});
    const auto back = read_feature_table(path);
    REQUIRE(back.size() == feats.size());
    for (std::size_t i = 0; i < feats.size(); ++i) {
        CHECK(back[i].recording_id == feats[i].recording_id);
        CHECK(back[i].chunk_index == feats[i].chunk_index);
        CHECK(back[i].label == feats[i].label);
        CHECK(back[i].vector == feats[i].vector);  // 17-digit text is lossless
    }
}
