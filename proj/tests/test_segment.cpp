#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "kinemo/errors.hpp"
#include "kinemo/segment.hpp"

using namespace kinemo;

namespace {

HeadPoseSeries ramp_series(double seconds, double fps) {
    const auto n = static_cast<std::size_t>(std::lround(seconds * fps));
    HeadPoseSeries s;
    s.recording_id = "ramp";
    s.fps = fps;
    s.pitch.resize(n);
    s.yaw.resize(n);
    s.roll.resize(n);
    s.valid_mask.assign(n, true);
    for (std::size_t i = 0; i < n; ++i) {
        s.pitch[i] = 1e-4 * static_cast<double>(i % 1000);
        s.yaw[i] = -1e-4 * static_cast<double>(i % 997);
        s.roll[i] = 1e-5 * static_cast<double>(i % 101);
    }
    return s;
}

SegmentationConfig cfg(double seg_s, double overlap, double chunk_s) {
    SegmentationConfig c;
    c.seg_len_s = seg_s;
    c.overlap_frac = overlap;
    c.chunk_len_s = chunk_s;
    return c;
}

}  // namespace

TEST_CASE("10 s at 30 fps with 2 s segments and half overlap gives 9 starts") {
    const auto segs = make_segments(ramp_series(10, 30), cfg(2, 0.5, 10));
    REQUIRE(segs.size() == 9);
    for (std::size_t i = 0; i < segs.size(); ++i)
        CHECK(segs[i].start_frame == static_cast<long>(30 * i));
    CHECK(segs[0].values.rows() == 60);
    CHECK(segs[0].values.cols() == 3);
}

TEST_CASE("a series exactly one segment long yields one segment") {
    const auto segs = make_segments(ramp_series(5, 30), cfg(5, 0.5, 5));
    CHECK(segs.size() == 1);
}

TEST_CASE("a series shorter than the segment yields nothing") {
    const auto segs = make_segments(ramp_series(4, 30), cfg(5, 0.5, 5));
    CHECK(segs.empty());
}

TEST_CASE("segment count matches floor((F - l)/stride) + 1 on valid series") {
    for (double dur : {7.0, 12.5, 30.0, 61.0}) {
        for (double seg : {1.0, 2.0, 5.0}) {
            for (double ov : {0.0, 0.25, 0.5, 0.75}) {
                const HeadPoseSeries s = ramp_series(dur, 30);
                SegmentationConfig c = cfg(seg, ov, std::max(dur, seg));
                const auto segs = make_segments(s, c);
                const long F = static_cast<long>(s.size());
                const long l = c.seg_len_frames(30);
                const long stride = c.stride_frames(30);
                const long expect = F >= l ? (F - l) / stride + 1 : 0;
                CHECK(static_cast<long>(segs.size()) == expect);
            }
        }
    }
}

TEST_CASE("segment values are exact slices of the source") {
    const HeadPoseSeries s = ramp_series(12, 30);
    const auto segs = make_segments(s, cfg(2, 0.5, 12));
    for (const auto& seg : segs) {
        for (int t = 0; t < seg.values.rows(); ++t) {
            const auto idx = static_cast<std::size_t>(seg.start_frame + t);
            CHECK(seg.values(t, 0) == s.pitch[idx]);
            CHECK(seg.values(t, 1) == s.yaw[idx]);
            CHECK(seg.values(t, 2) == s.roll[idx]);
        }
    }
}

TEST_CASE("windows crossing invalid frames are skipped") {
    HeadPoseSeries s = ramp_series(10, 30);
    s.valid_mask[45] = false;  // poisons windows covering frame 45
    const auto segs = make_segments(s, cfg(2, 0.5, 10));
    for (const auto& seg : segs) {
        CHECK((seg.start_frame + 60 <= 45 || seg.start_frame > 45));
    }
    CHECK(segs.size() == 7);  // starts 0 and 30 are poisoned
}

TEST_CASE("300 s makes five 60 s chunks") {
    const auto chunks = make_chunks(ramp_series(300, 30), cfg(5, 0.5, 60), 1);
    REQUIRE(chunks.size() == 5);
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        CHECK(chunks[i].chunk_index == static_cast<int>(i));
        CHECK(chunks[i].label == 1);
    }
}

TEST_CASE("a 299 s series drops the trailing remainder") {
    const auto chunks = make_chunks(ramp_series(299, 30), cfg(5, 0.5, 60), 0);
    CHECK(chunks.size() == 4);
}

TEST_CASE("75 s chunks with 5 s segments at half overlap hold 29 segments") {
    // window starts every 2.5 s: 0, 2.5, ..., 70 -> 29 windows
    const auto chunks = make_chunks(ramp_series(75, 30), cfg(5, 0.5, 75), 0);
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0].segments.size() == 29);
}

TEST_CASE("chunks partition a prefix of the timeline") {
    const auto chunks = make_chunks(ramp_series(200, 30), cfg(5, 0.5, 60), 0);
    REQUIRE(chunks.size() == 3);
    const long chunk_frames = 60 * 30;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        for (const auto& seg : chunks[i].segments) {
            CHECK(seg.start_frame >= static_cast<long>(i) * chunk_frames);
            CHECK(seg.start_frame + seg.values.rows() <=
                  static_cast<long>(i + 1) * chunk_frames);
        }
    }
}

TEST_CASE("segments do not straddle chunk boundaries") {
    // 2.4 s segments against 6 s chunks: last in-chunk start is 3.6 s
    const auto chunks = make_chunks(ramp_series(12, 30), cfg(2.4, 0.5, 6), 0);
    REQUIRE(chunks.size() == 2);
    for (const auto& c : chunks)
        CHECK(c.segments.size() == 4);  // starts 0, 1.2, 2.4, 3.6 within the chunk
}

TEST_CASE("config validation rejects bad values") {
    CHECK_THROWS_AS(cfg(0, 0.5, 10).validate(), ConfigError);
    CHECK_THROWS_AS(cfg(2, 1.0, 10).validate(), ConfigError);
    CHECK_THROWS_AS(cfg(2, -0.1, 10).validate(), ConfigError);
    CHECK_THROWS_AS(cfg(5, 0.5, 4).validate(), ConfigError);
    CHECK_NOTHROW(cfg(5, 0.0, 5).validate());
}
