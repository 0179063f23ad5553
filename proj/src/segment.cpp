#include "kinemo/segment.hpp"

#include <cmath>

#include "kinemo/errors.hpp"

namespace kinemo {

void SegmentationConfig::validate() const {
    if (!(seg_len_s > 0.0)) throw ConfigError("seg_len_s must be positive");
    if (overlap_frac < 0.0 || overlap_frac >= 1.0)
        throw ConfigError("overlap_frac must lie in [0, 1)");
    if (chunk_len_s < seg_len_s) throw ConfigError("chunk_len_s must be >= seg_len_s");
}

int SegmentationConfig::seg_len_frames(double fps) const {
    const int l = static_cast<int>(std::lround(seg_len_s * fps));
    if (l < 1) throw ConfigError("segment length is below one frame at this fps");
    return l;
}

int SegmentationConfig::stride_frames(double fps) const {
    const int l = seg_len_frames(fps);
    int stride = static_cast<int>(std::lround(l * (1.0 - overlap_frac)));
    if (stride < 1) stride = 1;
    return stride;
}

namespace {

// Windows over [begin, end) starting every `stride` frames relative to
// `begin`; windows touching an invalid frame or crossing `end` are skipped.
std::vector<Segment> segments_in_range(const HeadPoseSeries& series, long begin, long end, int l,
                                       int stride) {
    std::vector<Segment> out;
    for (long start = begin; start + l <= end; start += stride) {
        bool all_valid = true;
        for (long t = start; t < start + l; ++t) {
            if (!series.valid_mask[static_cast<std::size_t>(t)]) {
                all_valid = false;
                break;
            }
        }
        if (!all_valid) continue;
        Segment seg;
        seg.recording_id = series.recording_id;
        seg.start_frame = start;
        seg.values.resize(l, 3);
        for (int t = 0; t < l; ++t) {
            const auto idx = static_cast<std::size_t>(start + t);
            seg.values(t, 0) = series.pitch[idx];
            seg.values(t, 1) = series.yaw[idx];
            seg.values(t, 2) = series.roll[idx];
        }
        out.push_back(std::move(seg));
    }
    return out;
}

}  // namespace

std::vector<Segment> make_segments(const HeadPoseSeries& series, const SegmentationConfig& cfg) {
    cfg.validate();
    series.validate();
    const int l = cfg.seg_len_frames(series.fps);
    const int stride = cfg.stride_frames(series.fps);
    return segments_in_range(series, 0, static_cast<long>(series.size()), l, stride);
}

std::vector<Chunk> make_chunks(const HeadPoseSeries& series, const SegmentationConfig& cfg,
                               Label label) {
    cfg.validate();
    series.validate();
    const int l = cfg.seg_len_frames(series.fps);
    const int stride = cfg.stride_frames(series.fps);
    const long chunk_frames = std::lround(cfg.chunk_len_s * series.fps);
    const long n = static_cast<long>(series.size());
    const long n_chunks = n / chunk_frames;  // trailing remainder discarded

    std::vector<Chunk> out;
    for (long c = 0; c < n_chunks; ++c) {
        const long begin = c * chunk_frames;
        const long end = begin + chunk_frames;
        auto segs = segments_in_range(series, begin, end, l, stride);
        if (segs.empty()) continue;  // chunk entirely inside a tracking dropout
        Chunk chunk;
        chunk.recording_id = series.recording_id;
        chunk.chunk_index = static_cast<int>(c);
        chunk.segments = std::move(segs);
        chunk.label = label;
        out.push_back(std::move(chunk));
    }
    return out;
}

}  // namespace kinemo
