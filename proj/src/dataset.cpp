#include "actionsense/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "actionsense/error.hpp"
#include "actionsense/rng.hpp"

namespace actionsense {

using nlohmann::json;

namespace {

std::string canonicalize_label(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    size_t begin = raw.find_first_not_of(" \t");
    size_t end = raw.find_last_not_of(" \t");
    if (begin == std::string::npos) return out;
    for (size_t i = begin; i <= end; ++i) {
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(raw[i]))));
    }
    return out;
}

std::string join_labels(const std::vector<std::string>& labels) {
    std::string out;
    for (size_t i = 0; i < labels.size(); ++i) {
        if (i) out += ", ";
        out += labels[i];
    }
    return out;
}

} // namespace

LabelVocabulary::LabelVocabulary(std::vector<std::string> labels) {
    labels_.reserve(labels.size());
    std::unordered_set<std::string> seen;
    for (auto& raw : labels) {
        std::string canon = canonicalize_label(raw);
        if (canon.empty()) throw ValidationError("vocabulary contains an empty label");
        if (!seen.insert(canon).second) {
            throw ValidationError("duplicate label in vocabulary: " + canon);
        }
        labels_.push_back(std::move(canon));
    }
    if (labels_.size() < 2) {
        throw ValidationError("vocabulary needs at least 2 labels, got " +
                              std::to_string(labels_.size()));
    }
}

const LabelVocabulary& LabelVocabulary::canonical() {
    static const LabelVocabulary vocab(std::vector<std::string>{"kick", "punch", "slap"});
    return vocab;
}

std::optional<int> LabelVocabulary::find(const std::string& label) const {
    const std::string canon = canonicalize_label(label);
    for (size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] == canon) return static_cast<int>(i);
    }
    return std::nullopt;
}

int LabelVocabulary::index_of(const std::string& label) const {
    if (auto idx = find(label)) return *idx;
    throw UnknownLabel("unknown label '" + label + "'; allowed labels: " + join_labels(labels_));
}

const std::string& LabelVocabulary::name(int index) const {
    if (index < 0 || index >= size()) {
        throw IndexOutOfRange("label index " + std::to_string(index) + " outside vocabulary of " +
                              std::to_string(size()));
    }
    return labels_[static_cast<size_t>(index)];
}

const char* to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
        case Split::unassigned: return "unassigned";
    }
    return "unassigned";
}

std::optional<Split> split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    if (s == "unassigned") return Split::unassigned;
    return std::nullopt;
}

const VideoRecord* DatasetManifest::find(const std::string& video_id) const {
    for (const auto& rec : records) {
        if (rec.video_id == video_id) return &rec;
    }
    return nullptr;
}

namespace {

[[noreturn]] void parse_fail(const std::filesystem::path& path, int line_no, const std::string& why) {
    throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + why);
}

VideoRecord parse_record(const json& row, const std::filesystem::path& path, int line_no) {
    VideoRecord rec;
    if (!row.is_object()) parse_fail(path, line_no, "row is not a JSON object");
    if (!row.contains("video_id") || !row["video_id"].is_string()) {
        parse_fail(path, line_no, "missing string field 'video_id'");
    }
    if (!row.contains("source") || !row["source"].is_string()) {
        parse_fail(path, line_no, "missing string field 'source'");
    }
    if (!row.contains("label") || !row["label"].is_string()) {
        parse_fail(path, line_no, "missing string field 'label'");
    }
    rec.video_id = row["video_id"].get<std::string>();
    rec.source = row["source"].get<std::string>();
    rec.label = row["label"].get<std::string>();
    if (rec.video_id.empty()) parse_fail(path, line_no, "empty video_id");
    if (row.contains("split")) {
        if (!row["split"].is_string()) parse_fail(path, line_no, "'split' must be a string");
        auto split = split_from_string(row["split"].get<std::string>());
        if (!split) {
            parse_fail(path, line_no, "invalid split '" + row["split"].get<std::string>() +
                                          "' (expected train/val/test/unassigned)");
        }
        rec.split = *split;
    }
    if (row.contains("fps")) {
        if (!row["fps"].is_number_integer() || row["fps"].get<int64_t>() <= 0) {
            parse_fail(path, line_no, "'fps' must be a positive integer");
        }
        rec.fps_hint = static_cast<int>(row["fps"].get<int64_t>());
    }
    if (row.contains("duration_s")) {
        if (!row["duration_s"].is_number() || row["duration_s"].get<double>() <= 0.0) {
            parse_fail(path, line_no, "'duration_s' must be a positive number");
        }
        rec.duration_hint_s = row["duration_s"].get<double>();
    }
    return rec;
}

} // namespace

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest file: " + path.string());

    DatasetManifest manifest;
    std::string line;
    int line_no = 0;
    bool saw_header = false;
    std::unordered_set<std::string> ids;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json row;
        try {
            row = json::parse(line);
        } catch (const json::parse_error& e) {
            parse_fail(path, line_no, std::string("invalid JSON: ") + e.what());
        }
        if (!saw_header) {
            if (!row.is_object() || row.value("format", "") != "actionsense-manifest") {
                parse_fail(path, line_no,
                           "first line must be the header "
                           "{\"format\":\"actionsense-manifest\",\"version\":1,\"labels\":[...]}");
            }
            if (row.value("version", 0) != 1) {
                parse_fail(path, line_no, "unsupported manifest version");
            }
            if (!row.contains("labels") || !row["labels"].is_array()) {
                parse_fail(path, line_no, "header is missing the 'labels' array");
            }
            manifest.vocabulary = LabelVocabulary(row["labels"].get<std::vector<std::string>>());
            if (row.contains("seed")) manifest.seed = row["seed"].get<uint64_t>();
            saw_header = true;
            continue;
        }
        VideoRecord rec = parse_record(row, path, line_no);
        if (!ids.insert(rec.video_id).second) {
            throw ValidationError("duplicate video_id '" + rec.video_id + "' in " + path.string());
        }
        if (!manifest.vocabulary.find(rec.label)) {
            throw ValidationError("video '" + rec.video_id + "' has unknown label '" + rec.label +
                                  "'; allowed labels: " + join_labels(manifest.vocabulary.labels()));
        }
        rec.label = manifest.vocabulary.name(manifest.vocabulary.index_of(rec.label));
        manifest.records.push_back(std::move(rec));
    }
    if (!saw_header) throw ParseError(path.string() + ": empty manifest (missing header line)");
    return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest file: " + path.string());

    json header = {{"format", "actionsense-manifest"},
                   {"version", 1},
                   {"labels", manifest.vocabulary.labels()},
                   {"seed", manifest.seed}};
    out << header.dump() << "\n";

    std::vector<const VideoRecord*> ordered;
    ordered.reserve(manifest.records.size());
    for (const auto& rec : manifest.records) ordered.push_back(&rec);
    std::sort(ordered.begin(), ordered.end(),
              [](const VideoRecord* a, const VideoRecord* b) { return a->video_id < b->video_id; });

    for (const VideoRecord* rec : ordered) {
        json row = {{"video_id", rec->video_id},
                    {"source", rec->source},
                    {"label", rec->label},
                    {"split", to_string(rec->split)}};
        if (rec->fps_hint) row["fps"] = *rec->fps_hint;
        if (rec->duration_hint_s) row["duration_s"] = *rec->duration_hint_s;
        out << row.dump() << "\n";
    }
    if (!out) throw IoError("failed writing manifest file: " + path.string());
}

std::vector<int> apportion_largest_remainder(int count, const SplitRatios& ratios) {
    const double sum = ratios.train + ratios.val + ratios.test;
    if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 || std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError("split ratios must be non-negative and sum to 1");
    }
    const double r[3] = {ratios.train, ratios.val, ratios.test};
    std::vector<int> counts(3, 0);
    double frac[3];
    int assigned = 0;
    for (int b = 0; b < 3; ++b) {
        const double quota = count * r[b];
        counts[b] = static_cast<int>(std::floor(quota));
        frac[b] = quota - counts[b];
        assigned += counts[b];
    }
    // hand out remaining seats by largest fractional part, lowest bucket on ties
    int remaining = count - assigned;
    while (remaining > 0) {
        int best = -1;
        for (int b = 0; b < 3; ++b) {
            if (best < 0 || frac[b] > frac[best]) best = b;
        }
        counts[best] += 1;
        frac[best] = -1.0;
        --remaining;
    }
    // stratification guarantee: every non-zero ratio bucket gets at least one
    for (int b = 0; b < 3; ++b) {
        while (r[b] > 0.0 && counts[b] == 0) {
            int donor = -1;
            for (int d = 0; d < 3; ++d) {
                if (counts[d] >= 2 && (donor < 0 || counts[d] > counts[donor])) donor = d;
            }
            if (donor < 0) break;
            counts[donor] -= 1;
            counts[b] += 1;
        }
    }
    return counts;
}

DatasetManifest split_dataset(const DatasetManifest& manifest, const SplitRatios& ratios,
                              uint64_t seed) {
    const double sum = ratios.train + ratios.val + ratios.test;
    if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 || std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError("split ratios must be non-negative and sum to 1");
    }
    int nonzero_buckets = 0;
    for (double r : {ratios.train, ratios.val, ratios.test}) {
        if (r > 0.0) ++nonzero_buckets;
    }

    DatasetManifest out = manifest;
    out.seed = seed;
    // canonical order first: the split is a pure function of the sorted record set
    std::sort(out.records.begin(), out.records.end(),
              [](const VideoRecord& a, const VideoRecord& b) { return a.video_id < b.video_id; });

    std::mt19937_64 gen(seed);
    for (int cls = 0; cls < out.vocabulary.size(); ++cls) {
        std::vector<VideoRecord*> members;
        for (auto& rec : out.records) {
            if (rec.label == out.vocabulary.name(cls)) members.push_back(&rec);
        }
        if (static_cast<int>(members.size()) < nonzero_buckets) {
            throw InsufficientData("class '" + out.vocabulary.name(cls) + "' has " +
                                   std::to_string(members.size()) + " videos but the ratios need " +
                                   std::to_string(nonzero_buckets) + " non-empty splits");
        }
        shuffle_in_place(members, gen);
        const std::vector<int> counts =
            apportion_largest_remainder(static_cast<int>(members.size()), ratios);
        size_t next = 0;
        const Split buckets[3] = {Split::train, Split::val, Split::test};
        for (int b = 0; b < 3; ++b) {
            for (int k = 0; k < counts[b]; ++k) members[next++]->split = buckets[b];
        }
    }
    return out;
}

std::vector<double> one_hot(const std::string& label, const LabelVocabulary& vocabulary) {
    const int idx = vocabulary.index_of(label); // throws UnknownLabel
    std::vector<double> out(static_cast<size_t>(vocabulary.size()), 0.0);
    out[static_cast<size_t>(idx)] = 1.0;
    return out;
}

} // namespace actionsense
