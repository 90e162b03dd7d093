#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actionsense/dataset.hpp"

namespace actionsense {

struct FeatureRowMeta {
    std::string video_id;
    int64_t frame_index = 0;
    std::optional<int> label_index;
    Split split = Split::unassigned;
};

// Extraction provenance stored in the index header; resuming a cache
// requires an exact match.
struct CacheMeta {
    std::string backbone_name;
    std::string preprocessing;
    int fps = 30;
    std::vector<std::string> labels;

    bool operator==(const CacheMeta&) const = default;
};

// In-memory view of a feature cache: a rows x cols float32 matrix plus one
// meta entry per row. Rows belonging to one video are contiguous and in
// frame order.
struct FeatureTable {
    uint32_t cols = 0;
    std::vector<float> data;
    std::vector<FeatureRowMeta> meta;
    CacheMeta info;

    size_t rows() const { return meta.size(); }
    std::span<const float> row(size_t i) const {
        return std::span<const float>(data.data() + i * cols, cols);
    }
    std::span<float> row(size_t i) {
        return std::span<float>(data.data() + i * cols, cols);
    }
    bool contains_video(const std::string& video_id) const;
};

// Binary layout: magic "AFV1", u32 version(=1), u32 rows, u32 cols,
// little-endian, then rows*cols float32 values. The companion JSON-lines
// index (<path>.index.jsonl) starts with a meta header line and then maps
// each row to {video_id, frame_index, label_index, split}.
std::filesystem::path feature_index_path(const std::filesystem::path& cache_path);

void save_feature_cache(const FeatureTable& table, const std::filesystem::path& cache_path);
FeatureTable load_feature_cache(const std::filesystem::path& cache_path);

// Rewrites only the index (split/label refresh); feature bytes stay put.
void save_feature_index(const FeatureTable& table, const std::filesystem::path& cache_path);

// Streaming writer used by extract so partial runs leave a loadable prefix.
class FeatureCacheWriter {
public:
    enum class OpenMode { create, append };

    FeatureCacheWriter(const std::filesystem::path& cache_path, uint32_t cols, CacheMeta meta,
                       OpenMode mode = OpenMode::create);
    ~FeatureCacheWriter();

    FeatureCacheWriter(const FeatureCacheWriter&) = delete;
    FeatureCacheWriter& operator=(const FeatureCacheWriter&) = delete;

    // appends all rows of one video; flushes so a crash keeps whole videos
    void append_video(const std::vector<FeatureRowMeta>& meta, std::span<const float> row_data);
    void finish();

    uint32_t rows() const { return rows_; }

private:
    void write_header();

    std::filesystem::path cache_path_;
    FILE* data_file_ = nullptr;
    FILE* index_file_ = nullptr;
    uint32_t cols_ = 0;
    uint32_t rows_ = 0;
    bool finished_ = false;
};

} // namespace actionsense
