#include "actionsense/feature_cache.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "actionsense/error.hpp"

namespace actionsense {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'A', 'F', 'V', '1'};
constexpr uint32_t kVersion = 1;

void write_u32(FILE* f, uint32_t v) {
    uint8_t bytes[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                        static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
    if (fwrite(bytes, 1, 4, f) != 4) throw IoError("failed writing feature cache header");
}

uint32_t read_u32(std::istream& in, const std::string& what) {
    uint8_t bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (in.gcount() != 4) throw FormatError("feature cache truncated while reading " + what);
    return static_cast<uint32_t>(bytes[0]) | (static_cast<uint32_t>(bytes[1]) << 8) |
           (static_cast<uint32_t>(bytes[2]) << 16) | (static_cast<uint32_t>(bytes[3]) << 24);
}

json meta_header(const CacheMeta& meta, uint32_t cols) {
    return json{{"format", "actionsense-features-index"},
                {"version", 1},
                {"backbone", meta.backbone_name},
                {"preprocessing", meta.preprocessing},
                {"fps", meta.fps},
                {"labels", meta.labels},
                {"cols", cols}};
}

json row_meta_json(const FeatureRowMeta& meta, size_t row) {
    json j{{"row", row},
           {"video_id", meta.video_id},
           {"frame_index", meta.frame_index},
           {"split", to_string(meta.split)}};
    if (meta.label_index) {
        j["label_index"] = *meta.label_index;
    } else {
        j["label_index"] = nullptr;
    }
    return j;
}

FeatureRowMeta parse_row_meta(const json& j, const std::filesystem::path& path, int line_no) {
    FeatureRowMeta meta;
    if (!j.contains("video_id") || !j["video_id"].is_string()) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) +
                          ": index row missing video_id");
    }
    meta.video_id = j["video_id"].get<std::string>();
    meta.frame_index = j.value("frame_index", int64_t{0});
    if (j.contains("label_index") && !j["label_index"].is_null()) {
        meta.label_index = j["label_index"].get<int>();
    }
    if (auto split = split_from_string(j.value("split", "unassigned"))) {
        meta.split = *split;
    } else {
        throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad split value");
    }
    return meta;
}

struct BinaryHeader {
    uint32_t rows = 0;
    uint32_t cols = 0;
};

BinaryHeader read_binary_header(std::istream& in, const std::filesystem::path& path) {
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError("bad feature cache magic in " + path.string());
    }
    const uint32_t version = read_u32(in, "version");
    if (version != kVersion) {
        throw FormatError("unsupported feature cache version " + std::to_string(version));
    }
    BinaryHeader header;
    header.rows = read_u32(in, "rows");
    header.cols = read_u32(in, "cols");
    return header;
}

} // namespace

bool FeatureTable::contains_video(const std::string& video_id) const {
    for (const auto& m : meta) {
        if (m.video_id == video_id) return true;
    }
    return false;
}

std::filesystem::path feature_index_path(const std::filesystem::path& cache_path) {
    std::filesystem::path p = cache_path;
    p += ".index.jsonl";
    return p;
}

void save_feature_cache(const FeatureTable& table, const std::filesystem::path& cache_path) {
    if (table.data.size() != table.rows() * table.cols) {
        throw ValidationError("feature table data size does not match rows*cols");
    }
    FeatureCacheWriter writer(cache_path, table.cols, table.info);
    // group rows by video so the writer's whole-video guarantee holds
    size_t begin = 0;
    while (begin < table.rows()) {
        size_t end = begin + 1;
        while (end < table.rows() && table.meta[end].video_id == table.meta[begin].video_id) {
            ++end;
        }
        std::vector<FeatureRowMeta> metas(table.meta.begin() + static_cast<int64_t>(begin),
                                          table.meta.begin() + static_cast<int64_t>(end));
        writer.append_video(metas,
                            std::span<const float>(table.data.data() + begin * table.cols,
                                                   (end - begin) * table.cols));
        begin = end;
    }
    writer.finish();
}

void save_feature_index(const FeatureTable& table, const std::filesystem::path& cache_path) {
    const auto index_path = feature_index_path(cache_path);
    std::ofstream out(index_path, std::ios::trunc);
    if (!out) throw IoError("cannot write feature cache index: " + index_path.string());
    out << meta_header(table.info, table.cols).dump() << "\n";
    for (size_t i = 0; i < table.meta.size(); ++i) {
        out << row_meta_json(table.meta[i], i).dump() << "\n";
    }
    if (!out) throw IoError("failed writing feature cache index: " + index_path.string());
}

FeatureTable load_feature_cache(const std::filesystem::path& cache_path) {
    std::ifstream in(cache_path, std::ios::binary);
    if (!in) throw IoError("cannot open feature cache: " + cache_path.string());
    const BinaryHeader header = read_binary_header(in, cache_path);
    FeatureTable table;
    table.cols = header.cols;
    table.data.resize(static_cast<size_t>(header.rows) * table.cols);
    in.read(reinterpret_cast<char*>(table.data.data()),
            static_cast<std::streamsize>(table.data.size() * sizeof(float)));
    if (static_cast<size_t>(in.gcount()) != table.data.size() * sizeof(float)) {
        throw FormatError("feature cache data truncated: " + cache_path.string());
    }

    const auto index_path = feature_index_path(cache_path);
    std::ifstream idx(index_path);
    if (!idx) throw IoError("cannot open feature cache index: " + index_path.string());
    std::string line;
    int line_no = 0;
    bool saw_header = false;
    while (std::getline(idx, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw FormatError(index_path.string() + ":" + std::to_string(line_no) +
                              ": invalid JSON: " + e.what());
        }
        if (!saw_header) {
            if (j.value("format", "") != "actionsense-features-index" ||
                j.value("version", 0) != 1) {
                throw FormatError(index_path.string() + ": missing or bad index header");
            }
            table.info.backbone_name = j.value("backbone", "");
            table.info.preprocessing = j.value("preprocessing", "");
            table.info.fps = j.value("fps", 30);
            table.info.labels = j.value("labels", std::vector<std::string>{});
            saw_header = true;
            continue;
        }
        table.meta.push_back(parse_row_meta(j, index_path, line_no));
    }
    if (!saw_header) throw FormatError(index_path.string() + ": empty index");
    if (table.meta.size() != header.rows) {
        throw FormatError("feature cache index has " + std::to_string(table.meta.size()) +
                          " rows, data file has " + std::to_string(header.rows));
    }
    return table;
}

FeatureCacheWriter::FeatureCacheWriter(const std::filesystem::path& cache_path, uint32_t cols,
                                       CacheMeta meta, OpenMode mode)
    : cache_path_(cache_path), cols_(cols) {
    if (mode == OpenMode::append) {
        {
            std::ifstream in(cache_path, std::ios::binary);
            if (!in) throw IoError("cannot open feature cache for append: " + cache_path.string());
            const BinaryHeader header = read_binary_header(in, cache_path);
            if (header.cols != cols) {
                throw ValidationError("feature cache " + cache_path.string() + " has " +
                                      std::to_string(header.cols) + " columns, expected " +
                                      std::to_string(cols));
            }
            rows_ = header.rows;
        }
        data_file_ = fopen(cache_path.string().c_str(), "r+b");
        if (!data_file_) throw IoError("cannot append to feature cache: " + cache_path.string());
        index_file_ = fopen(feature_index_path(cache_path).string().c_str(), "ab");
        if (!index_file_) {
            fclose(data_file_);
            data_file_ = nullptr;
            throw IoError("cannot append to feature cache index: " +
                          feature_index_path(cache_path).string());
        }
        return;
    }
    data_file_ = fopen(cache_path.string().c_str(), "wb");
    if (!data_file_) throw IoError("cannot write feature cache: " + cache_path.string());
    index_file_ = fopen(feature_index_path(cache_path).string().c_str(), "wb");
    if (!index_file_) {
        fclose(data_file_);
        data_file_ = nullptr;
        throw IoError("cannot write feature cache index: " +
                      feature_index_path(cache_path).string());
    }
    write_header();
    const std::string header = meta_header(meta, cols).dump() + "\n";
    if (fwrite(header.data(), 1, header.size(), index_file_) != header.size()) {
        throw IoError("failed writing feature cache index header");
    }
    fflush(index_file_);
}

void FeatureCacheWriter::write_header() {
    if (fseek(data_file_, 0, SEEK_SET) != 0) throw IoError("feature cache seek failed");
    if (fwrite(kMagic, 1, 4, data_file_) != 4) throw IoError("failed writing feature cache magic");
    write_u32(data_file_, kVersion);
    write_u32(data_file_, rows_);
    write_u32(data_file_, cols_);
}

void FeatureCacheWriter::append_video(const std::vector<FeatureRowMeta>& meta,
                                      std::span<const float> row_data) {
    if (finished_) throw ValidationError("feature cache writer already finished");
    if (row_data.size() != meta.size() * cols_) {
        throw ValidationError("feature rows do not match row metadata");
    }
    if (fseek(data_file_, 0, SEEK_END) != 0) throw IoError("feature cache seek failed");
    if (fwrite(row_data.data(), sizeof(float), row_data.size(), data_file_) != row_data.size()) {
        throw IoError("failed writing feature rows");
    }
    std::string lines;
    for (size_t i = 0; i < meta.size(); ++i) {
        lines += row_meta_json(meta[i], rows_ + i).dump();
        lines += "\n";
    }
    if (fwrite(lines.data(), 1, lines.size(), index_file_) != lines.size()) {
        throw IoError("failed writing feature index rows");
    }
    rows_ += static_cast<uint32_t>(meta.size());
    write_header(); // keep the row count current so partial files stay loadable
    fflush(data_file_);
    fflush(index_file_);
}

void FeatureCacheWriter::finish() {
    if (finished_) return;
    finished_ = true;
    write_header();
    fclose(data_file_);
    data_file_ = nullptr;
    fclose(index_file_);
    index_file_ = nullptr;
}

FeatureCacheWriter::~FeatureCacheWriter() {
    if (data_file_) fclose(data_file_);
    if (index_file_) fclose(index_file_);
}

} // namespace actionsense
