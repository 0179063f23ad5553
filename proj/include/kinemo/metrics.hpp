#pragma once

#include <vector>

#include "kinemo/types.hpp"

namespace kinemo {

struct Metrics {
    double accuracy = 0.0;
    double weighted_f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

// Weighted F1 is the class-size-weighted mean of per-class F1 (zero-denominator
// classes score 0). In binary mode (multiclass = false) precision/recall are
// reported for the positive (depressed) class; in multi-class mode they are
// class-size weighted.
Metrics compute_metrics(const std::vector<Label>& y_true, const std::vector<Label>& y_pred,
                        bool multiclass = false);

// Modal label; ties break toward the more severe label (binary: depressed).
Label video_majority(const std::vector<Label>& chunk_predictions);

}  // namespace kinemo
