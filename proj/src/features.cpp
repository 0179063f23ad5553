#include "kinemo/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kinemo/errors.hpp"
#include "kinemo/textio.hpp"

namespace kinemo {

std::string feature_mode_name(FeatureMode mode) {
    return mode == FeatureMode::two_class ? "2ckd" : "hckd";
}

KinemeHistogram class_histogram(const std::vector<KinemeAssignment>& assignments, int K) {
    if (assignments.empty()) throw EmptyInputError("no assignments to histogram");
    KinemeHistogram h;
    h.counts.assign(static_cast<std::size_t>(K), 0);
    for (const auto& a : assignments) {
        if (a.kineme_id < 0 || a.kineme_id >= K)
            throw DomainError("assignment id outside [0, K)");
        ++h.counts[static_cast<std::size_t>(a.kineme_id)];
    }
    const double total = static_cast<double>(assignments.size());
    h.relative.resize(h.counts.size());
    for (std::size_t i = 0; i < h.counts.size(); ++i)
        h.relative[i] = static_cast<double>(h.counts[i]) / total;
    return h;
}

DiscriminativeSet select_discriminative(const KinemeHistogram& hist_control,
                                        const KinemeHistogram& hist_patient, int per_class) {
    const std::size_t K = hist_control.relative.size();
    if (hist_patient.relative.size() != K)
        throw ShapeError("class histograms have different K");
    if (K < 2 * static_cast<std::size_t>(per_class))
        throw InsufficientDataError("K < 2 * per_class kinemes available");

    std::vector<double> delta(K);
    for (std::size_t i = 0; i < K; ++i)
        delta[i] = hist_control.relative[i] - hist_patient.relative[i];

    std::vector<int> ids(K);
    std::iota(ids.begin(), ids.end(), 0);

    DiscriminativeSet out;
    // control side: largest delta first, ties to the lower id
    std::vector<int> by_desc = ids;
    std::stable_sort(by_desc.begin(), by_desc.end(), [&](int a, int b) {
        if (delta[static_cast<std::size_t>(a)] != delta[static_cast<std::size_t>(b)])
            return delta[static_cast<std::size_t>(a)] > delta[static_cast<std::size_t>(b)];
        return a < b;
    });
    out.control_ids.assign(by_desc.begin(), by_desc.begin() + per_class);

    // patient side: most negative delta first among the remaining ids
    std::vector<int> by_asc;
    for (int id : ids)
        if (std::find(out.control_ids.begin(), out.control_ids.end(), id) ==
            out.control_ids.end())
            by_asc.push_back(id);
    std::stable_sort(by_asc.begin(), by_asc.end(), [&](int a, int b) {
        if (delta[static_cast<std::size_t>(a)] != delta[static_cast<std::size_t>(b)])
            return delta[static_cast<std::size_t>(a)] < delta[static_cast<std::size_t>(b)];
        return a < b;
    });
    out.patient_ids.assign(by_asc.begin(), by_asc.begin() + per_class);
    return out;
}

ChunkFeatures feat_2ckd(const Chunk& chunk, const KinemeModel& model,
                        const DiscriminativeSet& dset) {
    if (chunk.segments.empty()) throw EmptyInputError("chunk has no segments");
    std::vector<long> counts(static_cast<std::size_t>(model.K), 0);
    for (const auto& seg : chunk.segments)
        ++counts[static_cast<std::size_t>(assign_kineme(model, seg).kineme_id)];
    const double n_c = static_cast<double>(chunk.segments.size());

    ChunkFeatures f;
    f.mode = FeatureMode::two_class;
    f.recording_id = chunk.recording_id;
    f.chunk_index = chunk.chunk_index;
    f.label = chunk.label;
    f.vector.resize(static_cast<Eigen::Index>(dset.control_ids.size() + dset.patient_ids.size()));
    Eigen::Index j = 0;
    for (int id : dset.control_ids)
        f.vector(j++) = static_cast<double>(counts[static_cast<std::size_t>(id)]) / n_c;
    for (int id : dset.patient_ids)
        f.vector(j++) = static_cast<double>(counts[static_cast<std::size_t>(id)]) / n_c;
    return f;
}

ResidualSums residual(const Segment& segment, const Reconstruction& recon) {
    if (segment.values.rows() != recon.values.rows() || recon.values.cols() != 3)
        throw ShapeError("segment and reconstruction shapes differ");
    // summed frame by frame so results are identical across build flags
    double sums[3] = {0.0, 0.0, 0.0};
    for (Eigen::Index t = 0; t < segment.values.rows(); ++t)
        for (int c = 0; c < 3; ++c) sums[c] += segment.values(t, c) - recon.values(t, c);
    return {sums[0], sums[1], sums[2]};
}

std::array<double, 8> stats8(const std::vector<double>& values) {
    if (values.empty()) throw EmptyInputError("stats8 of empty vector");
    const std::size_t n = values.size();
    for (double v : values)
        if (!std::isfinite(v)) throw NumericError("non-finite value in stats8 input");

    // moments run over the sorted copy so the result is a pure function of
    // the value multiset (bit-exact under input permutation)
    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    const double vmin = sorted.front();
    const double vmax = sorted.back();
    double sum = 0.0;
    for (double v : sorted) sum += v;
    const double mean = sum / static_cast<double>(n);
    const double median = (n % 2 == 1)
                              ? sorted[n / 2]
                              : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : sorted) {
        const double d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= static_cast<double>(n);
    m3 /= static_cast<double>(n);
    m4 /= static_cast<double>(n);

    const double std_dev = std::sqrt(m2);
    double skew = 0.0, kurt = 0.0;
    if (m2 > 0.0) {
        skew = m3 / (std_dev * std_dev * std_dev);
        kurt = m4 / (m2 * m2) - 3.0;
    }
    return {vmin, vmax, vmax - vmin, mean, median, std_dev, skew, kurt};
}

ChunkFeatures feat_hckd(const Chunk& chunk, const KinemeModel& model) {
    if (chunk.segments.empty()) throw EmptyInputError("chunk has no segments");
    const std::size_t n_c = chunk.segments.size();
    std::vector<double> as_p(n_c), as_y(n_c), as_r(n_c);
    for (std::size_t i = 0; i < n_c; ++i) {
        const auto& seg = chunk.segments[i];
        const KinemeAssignment a = assign_kineme(model, seg);
        const Reconstruction r = reconstruct(model, a.kineme_id);
        const ResidualSums s = residual(seg, r);
        as_p[i] = std::abs(s.s_pitch);
        as_y[i] = std::abs(s.s_yaw);
        as_r[i] = std::abs(s.s_roll);
    }
    ChunkFeatures f;
    f.mode = FeatureMode::healthy_control;
    f.recording_id = chunk.recording_id;
    f.chunk_index = chunk.chunk_index;
    f.label = chunk.label;
    f.vector.resize(24);
    const auto sp = stats8(as_p);
    const auto sy = stats8(as_y);
    const auto sr = stats8(as_r);
    for (int i = 0; i < 8; ++i) {
        f.vector(i) = sp[static_cast<std::size_t>(i)];
        f.vector(8 + i) = sy[static_cast<std::size_t>(i)];
        f.vector(16 + i) = sr[static_cast<std::size_t>(i)];
    }
    return f;
}

std::vector<std::string> feature_column_names(FeatureMode mode) {
    std::vector<std::string> names;
    if (mode == FeatureMode::two_class) {
        for (int i = 0; i < 10; ++i) names.push_back("k_freq_" + std::to_string(i));
        return names;
    }
    static const char* dims[] = {"p", "y", "r"};
    static const char* stats[] = {"min", "max", "range", "mean",
                                  "median", "std", "skew", "kurt"};
    for (const char* d : dims)
        for (const char* s : stats) names.push_back(std::string(d) + "_" + s);
    return names;
}

void write_feature_table(const std::string& path, const std::vector<ChunkFeatures>& features,
                         const std::vector<std::string>& preamble) {
    if (features.empty()) throw EmptyInputError("no features to write");
    DelimitedTable table;
    table.preamble = preamble;
    table.header = {"recording_id", "chunk_index", "label"};
    for (const auto& name : feature_column_names(features.front().mode))
        table.header.push_back(name);
    for (const auto& f : features) {
        std::vector<std::string> row = {f.recording_id, std::to_string(f.chunk_index),
                                        std::to_string(f.label)};
        for (Eigen::Index i = 0; i < f.vector.size(); ++i)
            row.push_back(format_double(f.vector(i)));
        table.rows.push_back(std::move(row));
    }
    write_delimited(path, table);
}

std::vector<ChunkFeatures> read_feature_table(const std::string& path) {
    const DelimitedTable table = read_delimited(path);
    if (table.header.size() < 4) throw SchemaError("feature table has too few columns");
    const FeatureMode mode =
        table.header[3] == "k_freq_0" ? FeatureMode::two_class : FeatureMode::healthy_control;
    std::vector<ChunkFeatures> out;
    out.reserve(table.rows.size());
    const std::size_t n_feat = table.header.size() - 3;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string where = path + " row " + std::to_string(r);
        ChunkFeatures f;
        f.mode = mode;
        f.recording_id = row[0];
        f.chunk_index = static_cast<int>(parse_long(row[1], where));
        f.label = static_cast<Label>(parse_long(row[2], where));
        f.vector.resize(static_cast<Eigen::Index>(n_feat));
        for (std::size_t i = 0; i < n_feat; ++i)
            f.vector(static_cast<Eigen::Index>(i)) = parse_double(row[3 + i], where);
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace kinemo
