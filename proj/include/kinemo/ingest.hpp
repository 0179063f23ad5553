#pragma once

#include <map>
#include <string>

#include "kinemo/types.hpp"

namespace kinemo {

// Column-name mapping for delimited pose files. Pitch/yaw/roll are required;
// the success column is optional (all frames valid when absent).
struct PoseSchema {
    std::string pitch_col = "pose_pitch";
    std::string yaw_col = "pose_yaw";
    std::string roll_col = "pose_roll";
    std::string success_col = "success";
    bool degrees = false;  // source unit; stored values are always radians
    char delimiter = ',';
};

HeadPoseSeries load_headpose_csv(const std::string& path, const PoseSchema& schema, double fps);

// Fills tracking gaps no longer than max_gap_s by linear interpolation, then
// resamples to target_fps. Longer gaps stay invalid and are skipped by
// segmentation downstream.
HeadPoseSeries clean_and_resample(const HeadPoseSeries& series, double target_fps,
                                  double max_gap_s);

Label bdi_to_binary(int score);   // score <= 13 -> control
Band bdi_to_band(int score);      // 0-13 / 14-19 / 20-28 / 29-63

// Key/value record file: blocks separated by blank lines, "key: value" lines.
Manifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const Manifest& manifest);

// Label for a record under the requested task; throws when not derivable.
Label record_label(const SubjectRecord& rec, bool bands);

}  // namespace kinemo
