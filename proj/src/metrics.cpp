#include "kinemo/metrics.hpp"

#include <algorithm>
#include <map>

#include "kinemo/errors.hpp"

namespace kinemo {

Metrics compute_metrics(const std::vector<Label>& y_true, const std::vector<Label>& y_pred,
                        bool multiclass) {
    if (y_true.size() != y_pred.size()) throw ShapeError("metrics: label vectors differ in size");
    if (y_true.empty()) throw EmptyInputError("metrics of empty label vectors");

    std::map<Label, long> support, tp, fp, fn;
    long correct = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        ++support[y_true[i]];
        if (y_true[i] == y_pred[i]) {
            ++correct;
            ++tp[y_true[i]];
        } else {
            ++fn[y_true[i]];
            ++fp[y_pred[i]];
        }
    }
    const double n = static_cast<double>(y_true.size());

    auto cls_precision = [&](Label c) {
        const double denom = static_cast<double>(tp[c] + fp[c]);
        return denom > 0.0 ? static_cast<double>(tp[c]) / denom : 0.0;
    };
    auto cls_recall = [&](Label c) {
        const double denom = static_cast<double>(tp[c] + fn[c]);
        return denom > 0.0 ? static_cast<double>(tp[c]) / denom : 0.0;
    };
    auto cls_f1 = [&](Label c) {
        const double p = cls_precision(c), r = cls_recall(c);
        return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    };

    Metrics m;
    m.accuracy = static_cast<double>(correct) / n;

    double wf1 = 0.0, wpr = 0.0, wre = 0.0;
    for (const auto& [c, s] : support) {
        const double w = static_cast<double>(s) / n;
        wf1 += w * cls_f1(c);
        wpr += w * cls_precision(c);
        wre += w * cls_recall(c);
    }
    m.weighted_f1 = wf1;

    if (multiclass) {
        m.precision = wpr;
        m.recall = wre;
    } else {
        m.precision = cls_precision(kDepressed);
        m.recall = cls_recall(kDepressed);
    }
    return m;
}

Label video_majority(const std::vector<Label>& chunk_predictions) {
    if (chunk_predictions.empty()) throw EmptyInputError("majority of empty prediction list");
    std::map<Label, long> counts;
    for (Label l : chunk_predictions) ++counts[l];
    long best_count = -1;
    Label best = 0;
    for (const auto& [label, count] : counts) {
        // >= prefers the higher (more severe) label on ties; map iterates ascending
        if (count >= best_count) {
            best_count = count;
            best = label;
        }
    }
    return best;
}

}  // namespace kinemo
