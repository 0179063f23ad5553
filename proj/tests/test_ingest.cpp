#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "kinemo/errors.hpp"
#include "kinemo/ingest.hpp"
#include "kinemo/textio.hpp"

using namespace kinemo;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const auto dir = std::filesystem::temp_directory_path() / "kinemo_ingest_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / name).string();
    write_text_file(path, content);
    return path;
}

}  // namespace

TEST_CASE("pose csv passes through identity values") {
    const std::string path = write_temp(
        "basic.csv",
        "frame,timestamp,pose_pitch,pose_yaw,pose_roll,success\n"
        "0,0.0,0.1,0.0,-0.1,1\n"
        "1,0.033,0.1,0.0,-0.1,1\n"
        "2,0.066,0.1,0.0,-0.1,1\n");
    const HeadPoseSeries s = load_headpose_csv(path, PoseSchema{}, 30.0);
    REQUIRE(s.size() == 3);
    CHECK(s.pitch[0] == 0.1);
    CHECK(s.yaw[1] == 0.0);
    CHECK(s.roll[2] == -0.1);
    CHECK(s.fps == 30.0);
    for (bool v : s.valid_mask) CHECK(v);
}

TEST_CASE("degree sources convert to radians") {
    const std::string path = write_temp("degrees.csv",
                                        "pose_pitch,pose_yaw,pose_roll\n"
                                        "90,0,-45\n");
    PoseSchema schema;
    schema.degrees = true;
    schema.success_col = "";
    const HeadPoseSeries s = load_headpose_csv(path, schema, 30.0);
    CHECK(s.pitch[0] == doctest::Approx(M_PI / 2).epsilon(1e-12));
    CHECK(s.roll[0] == doctest::Approx(-M_PI / 4).epsilon(1e-12));
}

TEST_CASE("degrees to radians round trip") {
    for (double deg : {-179.0, -90.0, -1.5, 0.0, 0.25, 45.0, 120.0}) {
        const double rad = deg * M_PI / 180.0;
        CHECK(rad * 180.0 / M_PI == doctest::Approx(deg).epsilon(1e-9));
    }
}

TEST_CASE("missing mapped column raises a schema error naming it") {
    const std::string path = write_temp("noroll.csv",
                                        "pose_pitch,pose_yaw\n"
                                        "0.1,0.2\n");
    PoseSchema schema;
    schema.success_col = "";
    try {
        load_headpose_csv(path, schema, 30.0);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("pose_roll") != std::string::npos);
    }
}

TEST_CASE("non-numeric cell raises a parse error with the row index") {
    const std::string path = write_temp("bad.csv",
                                        "pose_pitch,pose_yaw,pose_roll\n"
                                        "0.1,0.2,0.3\n"
                                        "0.1,oops,0.3\n");
    PoseSchema schema;
    schema.success_col = "";
    try {
        load_headpose_csv(path, schema, 30.0);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }
}

TEST_CASE("empty file raises an empty-input error") {
    const std::string path = write_temp("empty.csv", "");
    CHECK_THROWS_AS(load_headpose_csv(path, PoseSchema{}, 30.0), EmptyInputError);
    const std::string header_only =
        write_temp("header_only.csv", "pose_pitch,pose_yaw,pose_roll\n");
    CHECK_THROWS_AS(load_headpose_csv(header_only, PoseSchema{}, 30.0), EmptyInputError);
}

TEST_CASE("tracker failure rows get a false mask") {
    const std::string path = write_temp("failures.csv",
                                        "pose_pitch,pose_yaw,pose_roll,success\n"
                                        "0.1,0.0,0.0,1\n"
                                        "0.9,0.9,0.9,0\n"
                                        "0.2,0.0,0.0,1\n");
    const HeadPoseSeries s = load_headpose_csv(path, PoseSchema{}, 30.0);
    CHECK(s.valid_mask[0]);
    CHECK_FALSE(s.valid_mask[1]);
    CHECK(s.valid_mask[2]);
}

namespace {

HeadPoseSeries mk_series(std::vector<double> pitch, double fps,
                         std::vector<bool> mask = {}) {
    HeadPoseSeries s;
    s.recording_id = "t";
    s.fps = fps;
    s.pitch = pitch;
    s.yaw.assign(pitch.size(), 0.0);
    s.roll.assign(pitch.size(), 0.0);
    s.valid_mask = mask.empty() ? std::vector<bool>(pitch.size(), true) : mask;
    return s;
}

}  // namespace

TEST_CASE("short gaps interpolate to the linear midpoint") {
    HeadPoseSeries s = mk_series({0.0, 0.25, 1.0}, 30.0, {true, false, true});
    s.pitch[1] = 0.25;  // junk value under an invalid mask
    const HeadPoseSeries out = clean_and_resample(s, 30.0, 0.5);
    REQUIRE(out.size() == 3);
    CHECK(out.pitch[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(out.valid_mask[1]);
}

TEST_CASE("gaps longer than max_gap_s stay invalid") {
    std::vector<bool> mask(40, true);
    for (int i = 5; i < 30; ++i) mask[i] = false;  // 25 frames ~ 0.83 s at 30 fps
    HeadPoseSeries s = mk_series(std::vector<double>(40, 0.1), 30.0, mask);
    const HeadPoseSeries out = clean_and_resample(s, 30.0, 0.5);
    CHECK_FALSE(out.valid_mask[10]);
    CHECK(out.valid_mask[2]);
}

TEST_CASE("identity resample returns the series unchanged") {
    HeadPoseSeries s = mk_series({0.1, 0.2, 0.3, 0.4}, 30.0);
    const HeadPoseSeries out = clean_and_resample(s, 30.0, 0.5);
    CHECK(out.pitch == s.pitch);
    CHECK(out.yaw == s.yaw);
    const HeadPoseSeries again = clean_and_resample(out, 30.0, 0.5);
    CHECK(again.pitch == out.pitch);  // idempotent
}

TEST_CASE("downsampling a constant series preserves the value at half length") {
    HeadPoseSeries s = mk_series(std::vector<double>(120, 0.3), 60.0);
    const HeadPoseSeries out = clean_and_resample(s, 30.0, 0.5);
    CHECK(out.fps == 30.0);
    CHECK(out.size() == 60);  // duration (119/60 s) * 30 + 1
    for (double v : out.pitch) CHECK(v == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("series with zero valid frames is unusable") {
    HeadPoseSeries s = mk_series({0.1, 0.1}, 30.0, {false, false});
    CHECK_THROWS_AS(clean_and_resample(s, 30.0, 0.5), UnusableSeriesError);
}

TEST_CASE("bdi dichotomization follows the 13/14 boundary") {
    CHECK(bdi_to_binary(13) == kControl);
    CHECK(bdi_to_binary(14) == kDepressed);
    CHECK(bdi_to_binary(0) == kControl);
    CHECK(bdi_to_binary(63) == kDepressed);
    CHECK_THROWS_AS(bdi_to_binary(-1), DomainError);
    CHECK_THROWS_AS(bdi_to_binary(64), DomainError);
}

TEST_CASE("bdi bands cover the documented ranges") {
    CHECK(bdi_to_band(13) == Band::minimal);
    CHECK(bdi_to_band(14) == Band::mild);
    CHECK(bdi_to_band(19) == Band::mild);
    CHECK(bdi_to_band(20) == Band::moderate);
    CHECK(bdi_to_band(28) == Band::moderate);
    CHECK(bdi_to_band(29) == Band::severe);
    CHECK(bdi_to_band(63) == Band::severe);
    CHECK_THROWS_AS(bdi_to_band(99), DomainError);
}

TEST_CASE("binary rule and band rule agree on the control region") {
    for (int s = 0; s <= 63; ++s) {
        const bool is_control = bdi_to_binary(s) == kControl;
        const bool is_minimal = bdi_to_band(s) == Band::minimal;
        CHECK(is_control == is_minimal);
    }
}

TEST_CASE("manifest round-trips records") {
    Manifest m;
    m.dataset_name = "demo";
    SubjectRecord a;
    a.subject_id = "s1";
    a.recording_path = "poses/s1.csv";
    a.bdi_score = 7;
    a.split = "train";
    SubjectRecord b;
    b.subject_id = "s2";
    b.recording_path = "poses/s2.csv";
    b.binary_label = kDepressed;
    m.records = {a, b};

    const auto dir = std::filesystem::temp_directory_path() / "kinemo_ingest_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "manifest.txt").string();
    save_manifest(path, m);
    const Manifest back = load_manifest(path);
    CHECK(back.dataset_name == "demo");
    REQUIRE(back.records.size() == 2);
    CHECK(back.records[0].subject_id == "s1");
    CHECK(back.records[0].bdi_score == 7);
    CHECK(back.records[0].split == "train");
    CHECK(back.records[1].binary_label == kDepressed);
    CHECK_FALSE(back.records[1].split.has_value());
}

TEST_CASE("manifest validation rejects duplicates and unlabeled records") {
    Manifest m;
    m.dataset_name = "demo";
    SubjectRecord a;
    a.subject_id = "s1";
    a.recording_path = "p.csv";
    a.bdi_score = 7;
    m.records = {a, a};
    CHECK_THROWS_AS(m.validate(), DataError);

    SubjectRecord no_label;
    no_label.subject_id = "s2";
    no_label.recording_path = "q.csv";
    m.records = {no_label};
    CHECK_THROWS_AS(m.validate(), DataError);
}

TEST_CASE("record_label resolves binary and band tasks") {
    SubjectRecord rec;
    rec.subject_id = "s";
    rec.recording_path = "p";
    rec.bdi_score = 25;
    CHECK(record_label(rec, false) == kDepressed);
    CHECK(record_label(rec, true) == static_cast<Label>(Band::moderate));
    rec.bdi_score.reset();
    rec.binary_label = kControl;
    CHECK(record_label(rec, false) == kControl);
    CHECK_THROWS_AS(record_label(rec, true), DataError);
}
