#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace actionsense {

class LabelVocabulary {
public:
    LabelVocabulary() = default;
    // Canonicalizes (trim, lowercase) and validates: unique, non-empty, >= 2 labels.
    explicit LabelVocabulary(std::vector<std::string> labels);

    // kick, punch, slap — the order fixes one-hot indices for trained models.
    static const LabelVocabulary& canonical();

    int index_of(const std::string& label) const; // throws UnknownLabel
    std::optional<int> find(const std::string& label) const;
    const std::string& name(int index) const;
    int size() const { return static_cast<int>(labels_.size()); }
    const std::vector<std::string>& labels() const { return labels_; }
    bool operator==(const LabelVocabulary&) const = default;

private:
    std::vector<std::string> labels_;
};

enum class Split { train, val, test, unassigned };

const char* to_string(Split s);
std::optional<Split> split_from_string(const std::string& s);

struct VideoRecord {
    std::string video_id;
    std::string source; // video file or frame directory
    std::string label;
    Split split = Split::unassigned;
    std::optional<int> fps_hint;
    std::optional<double> duration_hint_s;
};

struct DatasetManifest {
    LabelVocabulary vocabulary;
    std::vector<VideoRecord> records;
    uint64_t seed = 0; // seed used for the split, recorded by split_dataset

    const VideoRecord* find(const std::string& video_id) const;
};

struct SplitRatios {
    double train = 0.70;
    double val = 0.15;
    double test = 0.15;
};

// JSON-lines manifest with a required header line (format actionsense-manifest v1).
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Stratified per class at video granularity. Deterministic given
// (records sorted by video_id, ratios, seed). Largest-remainder rounding,
// with every non-zero ratio bucket guaranteed at least one video per class.
DatasetManifest split_dataset(const DatasetManifest& manifest, const SplitRatios& ratios,
                              uint64_t seed);

// counts per (train, val, test) bucket for one class of `count` videos
std::vector<int> apportion_largest_remainder(int count, const SplitRatios& ratios);

std::vector<double> one_hot(const std::string& label, const LabelVocabulary& vocabulary);

} // namespace actionsense
