#include "kinemo/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "kinemo/errors.hpp"
#include "kinemo/textio.hpp"

namespace kinemo {

std::string label_name(Label label, bool bands) {
    if (bands) {
        switch (label) {
            case 0: return "minimal";
            case 1: return "mild";
            case 2: return "moderate";
            case 3: return "severe";
        }
    } else {
        switch (label) {
            case 0: return "control";
            case 1: return "depressed";
        }
    }
    return "label" + std::to_string(label);
}

void HeadPoseSeries::validate() const {
    if (pitch.empty()) throw EmptyInputError("series " + recording_id + " has no frames");
    if (yaw.size() != pitch.size() || roll.size() != pitch.size() ||
        valid_mask.size() != pitch.size())
        throw ShapeError("series " + recording_id + " has mismatched channel lengths");
    if (!(fps > 0.0)) throw DomainError("series " + recording_id + " fps must be positive");
    for (std::size_t i = 0; i < pitch.size(); ++i) {
        for (double a : {pitch[i], yaw[i], roll[i]}) {
            if (!std::isfinite(a))
                throw NumericError("non-finite angle in " + recording_id + " at frame " +
                                   std::to_string(i));
            if (std::abs(a) >= M_PI)
                throw DomainError("angle out of (-pi, pi) in " + recording_id + " at frame " +
                                  std::to_string(i));
        }
    }
}

void Manifest::validate() const {
    if (records.empty()) throw EmptyInputError("manifest has no records");
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& r : records) {
        if (r.subject_id.empty()) throw DataError("manifest record without subject_id");
        if (r.recording_path.empty())
            throw DataError("manifest record for " + r.subject_id + " without path");
        if (!r.bdi_score && !r.binary_label)
            throw DataError("manifest record for " + r.subject_id + " has neither bdi nor label");
        if (r.bdi_score && (*r.bdi_score < 0 || *r.bdi_score > 63))
            throw DomainError("bdi score " + std::to_string(*r.bdi_score) + " for " +
                              r.subject_id + " outside [0, 63]");
        if (!seen.insert({r.subject_id, r.recording_path}).second)
            throw DataError("duplicate manifest record " + r.subject_id + " / " +
                            r.recording_path);
    }
}

HeadPoseSeries load_headpose_csv(const std::string& path, const PoseSchema& schema, double fps) {
    if (!(fps > 0.0)) throw DomainError("fps must be positive");
    DelimitedTable table = read_delimited(path, schema.delimiter);
    if (table.rows.empty()) throw EmptyInputError("no data rows in " + path);

    const int cp = table.column(schema.pitch_col);
    const int cy = table.column(schema.yaw_col);
    const int cr = table.column(schema.roll_col);
    if (cp < 0) throw SchemaError("missing column '" + schema.pitch_col + "' in " + path);
    if (cy < 0) throw SchemaError("missing column '" + schema.yaw_col + "' in " + path);
    if (cr < 0) throw SchemaError("missing column '" + schema.roll_col + "' in " + path);
    const int cs = schema.success_col.empty() ? -1 : table.column(schema.success_col);

    const double unit = schema.degrees ? M_PI / 180.0 : 1.0;

    HeadPoseSeries series;
    series.fps = fps;
    // recording id defaults to the file stem
    std::string stem = path;
    if (auto pos = stem.find_last_of('/'); pos != std::string::npos) stem = stem.substr(pos + 1);
    if (auto pos = stem.find_last_of('.'); pos != std::string::npos) stem = stem.substr(0, pos);
    series.recording_id = stem;

    const std::size_t n = table.rows.size();
    series.pitch.reserve(n);
    series.yaw.reserve(n);
    series.roll.reserve(n);
    series.valid_mask.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = table.rows[i];
        const std::string where = path + " row " + std::to_string(i);
        series.pitch.push_back(unit * parse_double(row[cp], where));
        series.yaw.push_back(unit * parse_double(row[cy], where));
        series.roll.push_back(unit * parse_double(row[cr], where));
        bool valid = true;
        if (cs >= 0) valid = parse_double(row[cs], where) != 0.0;
        series.valid_mask.push_back(valid);
    }
    series.validate();
    return series;
}

namespace {

// Linearly interpolates invalid interior runs no longer than max_gap frames.
void fill_short_gaps(HeadPoseSeries& s, std::size_t max_gap_frames) {
    const std::size_t n = s.size();
    std::size_t i = 0;
    while (i < n) {
        if (s.valid_mask[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && !s.valid_mask[j]) ++j;
        const bool has_left = i > 0;
        const bool has_right = j < n;
        const std::size_t gap = j - i;
        if (has_left && has_right && gap <= max_gap_frames) {
            const std::size_t l = i - 1, r = j;
            const double span = static_cast<double>(r - l);
            for (std::size_t t = i; t < j; ++t) {
                const double w = static_cast<double>(t - l) / span;
                s.pitch[t] = s.pitch[l] + w * (s.pitch[r] - s.pitch[l]);
                s.yaw[t] = s.yaw[l] + w * (s.yaw[r] - s.yaw[l]);
                s.roll[t] = s.roll[l] + w * (s.roll[r] - s.roll[l]);
                s.valid_mask[t] = true;
            }
        }
        i = j;
    }
}

}  // namespace

HeadPoseSeries clean_and_resample(const HeadPoseSeries& series, double target_fps,
                                  double max_gap_s) {
    if (!(target_fps > 0.0)) throw DomainError("target_fps must be positive");
    series.validate();
    if (std::none_of(series.valid_mask.begin(), series.valid_mask.end(), [](bool b) { return b; }))
        throw UnusableSeriesError(series.recording_id + " has zero valid frames");

    HeadPoseSeries work = series;
    const std::size_t max_gap_frames =
        static_cast<std::size_t>(std::floor(max_gap_s * series.fps + 1e-9));
    fill_short_gaps(work, max_gap_frames);

    // Same rate: gap filling only, no resampling, so the operation is exact.
    if (std::abs(target_fps - series.fps) < 1e-12) return work;

    const std::size_t n = work.size();
    const double duration = static_cast<double>(n - 1) / work.fps;
    const std::size_t m = static_cast<std::size_t>(std::floor(duration * target_fps + 1e-9)) + 1;

    HeadPoseSeries out;
    out.subject_id = work.subject_id;
    out.recording_id = work.recording_id;
    out.fps = target_fps;
    out.pitch.resize(m);
    out.yaw.resize(m);
    out.roll.resize(m);
    out.valid_mask.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double t = static_cast<double>(i) / target_fps * work.fps;  // source frame index
        std::size_t l = static_cast<std::size_t>(std::floor(t));
        if (l >= n - 1) l = n - 1;
        const std::size_t r = std::min(l + 1, n - 1);
        const double w = t - static_cast<double>(l);
        out.pitch[i] = work.pitch[l] + w * (work.pitch[r] - work.pitch[l]);
        out.yaw[i] = work.yaw[l] + w * (work.yaw[r] - work.yaw[l]);
        out.roll[i] = work.roll[l] + w * (work.roll[r] - work.roll[l]);
        out.valid_mask[i] = work.valid_mask[l] && work.valid_mask[r];
    }
    return out;
}

Label bdi_to_binary(int score) {
    if (score < 0 || score > 63)
        throw DomainError("bdi score " + std::to_string(score) + " outside [0, 63]");
    return score <= 13 ? kControl : kDepressed;
}

Band bdi_to_band(int score) {
    if (score < 0 || score > 63)
        throw DomainError("bdi score " + std::to_string(score) + " outside [0, 63]");
    if (score <= 13) return Band::minimal;
    if (score <= 19) return Band::mild;
    if (score <= 28) return Band::moderate;
    return Band::severe;
}

Manifest load_manifest(const std::string& path) {
    const std::string text = read_text_file(path);
    Manifest manifest;
    std::istringstream in(text);
    std::string line;
    std::map<std::string, std::string> block;
    std::size_t lineno = 0;

    auto flush_block = [&]() {
        if (block.empty()) return;
        if (block.count("dataset_name") && !block.count("subject_id")) {
            manifest.dataset_name = block.at("dataset_name");
            block.clear();
            return;
        }
        SubjectRecord rec;
        auto take = [&](const char* key) -> std::optional<std::string> {
            auto it = block.find(key);
            if (it == block.end()) return std::nullopt;
            return it->second;
        };
        if (auto v = take("subject_id")) rec.subject_id = *v;
        if (auto v = take("path")) rec.recording_path = *v;
        if (auto v = take("bdi")) rec.bdi_score = static_cast<int>(parse_long(*v, path + " bdi"));
        if (auto v = take("label")) {
            if (*v == "control") rec.binary_label = kControl;
            else if (*v == "depressed") rec.binary_label = kDepressed;
            else throw ParseError("unknown label '" + *v + "' in " + path);
        }
        if (auto v = take("split")) {
            if (*v != "train" && *v != "dev" && *v != "test")
                throw ParseError("unknown split '" + *v + "' in " + path);
            rec.split = *v;
        }
        manifest.records.push_back(std::move(rec));
        block.clear();
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string t = trim(line);
        if (t.empty()) {
            flush_block();
            continue;
        }
        if (t[0] == '#') continue;
        const auto pos = t.find(':');
        if (pos == std::string::npos)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected 'key: value'");
        block[trim(t.substr(0, pos))] = trim(t.substr(pos + 1));
    }
    flush_block();
    manifest.validate();
    return manifest;
}

void save_manifest(const std::string& path, const Manifest& manifest) {
    std::ostringstream out;
    out << "dataset_name: " << manifest.dataset_name << "\n\n";
    for (const auto& r : manifest.records) {
        out << "subject_id: " << r.subject_id << "\n";
        out << "path: " << r.recording_path << "\n";
        if (r.bdi_score) out << "bdi: " << *r.bdi_score << "\n";
        if (r.binary_label) out << "label: " << label_name(*r.binary_label, false) << "\n";
        if (r.split) out << "split: " << *r.split << "\n";
        out << "\n";
    }
    write_text_file(path, out.str());
}

Label record_label(const SubjectRecord& rec, bool bands) {
    if (bands) {
        if (!rec.bdi_score)
            throw DataError("record " + rec.subject_id + " needs a bdi score for band labels");
        return static_cast<Label>(bdi_to_band(*rec.bdi_score));
    }
    if (rec.binary_label) return *rec.binary_label;
    if (rec.bdi_score) return bdi_to_binary(*rec.bdi_score);
    throw DataError("record " + rec.subject_id + " has no usable label");
}

}  // namespace kinemo
