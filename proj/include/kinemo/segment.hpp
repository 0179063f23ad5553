#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "kinemo/types.hpp"

namespace kinemo {

struct SegmentationConfig {
    double seg_len_s = 5.0;
    double overlap_frac = 0.5;   // in [0, 1)
    double chunk_len_s = 60.0;

    void validate() const;
    int seg_len_frames(double fps) const;  // l = round(seg_len_s * fps)
    int stride_frames(double fps) const;   // round(l * (1 - overlap_frac)), >= 1
};

// A fixed-length window of consecutive valid frames. `values` is the exact
// l x 3 slice of the source series, columns ordered pitch, yaw, roll.
struct Segment {
    std::string recording_id;
    long start_frame = 0;
    Eigen::MatrixXd values;
};

// A non-overlapping thin-slice span holding the segments that fit inside it.
struct Chunk {
    std::string recording_id;
    int chunk_index = 0;
    std::vector<Segment> segments;
    Label label = 0;
};

std::vector<Segment> make_segments(const HeadPoseSeries& series, const SegmentationConfig& cfg);
std::vector<Chunk> make_chunks(const HeadPoseSeries& series, const SegmentationConfig& cfg,
                               Label label);

}  // namespace kinemo
