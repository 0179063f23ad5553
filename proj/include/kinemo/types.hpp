#pragma once

#include <optional>
#include <string>
#include <vector>

namespace kinemo {

// Class labels are small integer codes ordered by severity:
// binary: 0 = control, 1 = depressed; bands: 0 = minimal .. 3 = severe.
using Label = int;

inline constexpr Label kControl = 0;
inline constexpr Label kDepressed = 1;

enum class Band : int { minimal = 0, mild = 1, moderate = 2, severe = 3 };

std::string label_name(Label label, bool bands);

// Per-frame pitch/yaw/roll angles (radians) for one recording. All four
// per-frame arrays share the same length; fps > 0; angles finite, |a| < pi.
struct HeadPoseSeries {
    std::string subject_id;
    std::string recording_id;
    double fps = 0.0;
    std::vector<double> pitch;
    std::vector<double> yaw;
    std::vector<double> roll;
    std::vector<bool> valid_mask;

    std::size_t size() const { return pitch.size(); }
    void validate() const;  // throws on any invariant violation
};

struct SubjectRecord {
    std::string subject_id;
    std::string recording_path;
    std::optional<int> bdi_score;        // 0..63
    std::optional<Label> binary_label;   // kControl / kDepressed
    std::optional<std::string> split;    // train / dev / test
};

struct Manifest {
    std::string dataset_name;
    std::vector<SubjectRecord> records;

    void validate() const;  // unique (subject_id, path), label presence, ranges
};

}  // namespace kinemo
