// actionsense: classify short clips into violent-action classes with a fixed
// feature backbone and a trained fully-connected softmax head, majority-voted
// over one sampled frame per second.
//
// Subcommands: prepare, extract, train, evaluate, predict, report.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <deque>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "actionsense/backbone.hpp"
#include "actionsense/dataset.hpp"
#include "actionsense/error.hpp"
#include "actionsense/evaluator.hpp"
#include "actionsense/feature_cache.hpp"
#include "actionsense/framepipe.hpp"
#include "actionsense/mlp_head.hpp"
#include "actionsense/rng.hpp"
#include "actionsense/trainer.hpp"

namespace fs = std::filesystem;
using namespace actionsense;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// configuration: flags > environment (ACTIONSENSE_*) > config file > defaults
// ---------------------------------------------------------------------------

struct RunConfig {
    std::string manifest;
    std::string features;
    std::string model_dir;
    std::string report = "report.json";
    std::string input;
    std::string csv;
    std::string registry;
    std::string backbone = "stub";
    std::string backbone_override; // predict only; empty = use the bundle's
    std::string decoder;
    std::string format = "text";
    std::string optimizer = "adam";
    std::string ratios = "0.70,0.15,0.15";
    std::string hidden = "512,256,128,64";
    uint64_t seed = 42;
    int fps = 30;
    int decode_width = 256;
    int decode_height = 256;
    int jobs = 0; // 0 = logical CPUs
    int epochs = 200;
    int batch_size = 32;
    int patience = 10;
    double learning_rate = 1e-3;
    double dropout = 0.5;

    SplitRatios parsed_ratios() const;
    std::array<int, 4> parsed_hidden() const;
    json to_json(const std::string& subcommand) const;
};

SplitRatios RunConfig::parsed_ratios() const {
    std::string text = ratios;
    for (char& c : text) {
        if (c == '[' || c == ']') c = ' ';
    }
    std::replace(text.begin(), text.end(), ',', ' ');
    std::istringstream in(text);
    double a, b, c;
    if (!(in >> a >> b >> c)) {
        throw ConfigError("cannot parse --ratios '" + ratios + "' (want a,b,c)");
    }
    return SplitRatios{a, b, c};
}

std::array<int, 4> RunConfig::parsed_hidden() const {
    std::string text = hidden;
    for (char& c : text) {
        if (c == '[' || c == ']') c = ' ';
    }
    std::replace(text.begin(), text.end(), ',', ' ');
    std::istringstream in(text);
    std::array<int, 4> widths{};
    for (int i = 0; i < 4; ++i) {
        if (!(in >> widths[static_cast<size_t>(i)])) {
            throw ConfigError("cannot parse --hidden '" + hidden + "' (want four widths)");
        }
    }
    return widths;
}

json RunConfig::to_json(const std::string& subcommand) const {
    const SplitRatios r = parsed_ratios();
    return json{{"format", "actionsense-run-config"},
                {"version", 1},
                {"subcommand", subcommand},
                {"manifest", manifest},
                {"features", features},
                {"model", model_dir},
                {"report", report},
                {"input", input},
                {"csv", csv},
                {"registry", registry},
                {"backbone", backbone},
                {"decoder", decoder},
                {"format", format},
                {"optimizer", optimizer},
                {"ratios", {r.train, r.val, r.test}},
                {"hidden", parsed_hidden()},
                {"seed", seed},
                {"fps", fps},
                {"decode_width", decode_width},
                {"decode_height", decode_height},
                {"jobs", jobs},
                {"epochs", epochs},
                {"batch_size", batch_size},
                {"patience", patience},
                {"learning_rate", learning_rate},
                {"dropout", dropout}};
}

// Reads the TOML subset the config file uses: [section] headers, key = value
// with numbers, "strings", booleans, and flat arrays. Values are kept as raw
// text and parsed where consumed.
std::map<std::string, std::string> parse_config_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    std::map<std::string, std::string> values;
    std::string line;
    std::string section;
    int line_no = 0;
    auto trim = [](std::string s) {
        const size_t b = s.find_first_not_of(" \t\r");
        const size_t e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        const size_t comment = line.find('#');
        if (comment != std::string::npos) line.resize(comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ParseError(path.string() + ":" + std::to_string(line_no) +
                                 ": malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        values[section.empty() ? key : section + "." + key] = value;
    }
    return values;
}

// One slot per option so unset flags can fall back to env then config file.
class SettingsBinder {
public:
    SettingsBinder(CLI::App* cmd, std::string* config_path) : cmd_(cmd), config_path_(config_path) {
        cmd->add_option("--config", *config_path, "TOML config file");
    }

    template <typename T>
    void bind(const std::string& flag, T& slot, const std::string& env_suffix,
              const std::string& config_key, const std::string& help) {
        cmd_->add_option(flag, slot, help);
        appliers_.push_back([this, flag, &slot, env_suffix, config_key](
                                const std::map<std::string, std::string>& file_values) {
            if (cmd_->count(flag) > 0) return; // explicit flag wins
            if (const char* env = std::getenv(("ACTIONSENSE_" + env_suffix).c_str())) {
                parse_into(slot, env);
                return;
            }
            auto it = file_values.find(config_key);
            if (it != file_values.end()) parse_into(slot, it->second);
        });
    }

    // called after CLI parsing: resolves env and config-file fallbacks
    void finalize() {
        std::map<std::string, std::string> file_values;
        if (config_path_->empty()) {
            if (const char* env = std::getenv("ACTIONSENSE_CONFIG")) *config_path_ = env;
        }
        if (!config_path_->empty()) file_values = parse_config_file(*config_path_);
        for (auto& apply : appliers_) apply(file_values);
    }

private:
    static void parse_into(std::string& slot, const std::string& text) { slot = text; }
    static void parse_into(int& slot, const std::string& text) { slot = std::stoi(text); }
    static void parse_into(uint64_t& slot, const std::string& text) { slot = std::stoull(text); }
    static void parse_into(double& slot, const std::string& text) { slot = std::stod(text); }

    CLI::App* cmd_;
    std::string* config_path_;
    std::vector<std::function<void(const std::map<std::string, std::string>&)>> appliers_;
};

void write_run_config(const RunConfig& config, const std::string& subcommand,
                      const fs::path& next_to) {
    fs::path dir = next_to.parent_path();
    if (dir.empty()) dir = ".";
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream out(dir / "run-config.json", std::ios::trunc);
    if (!out) throw IoError("cannot write run-config.json in " + dir.string());
    out << config.to_json(subcommand).dump(2) << "\n";
}

std::optional<fs::path> optional_path(const std::string& value) {
    if (value.empty()) return std::nullopt;
    return fs::path(value);
}

// ---------------------------------------------------------------------------
// extract
// ---------------------------------------------------------------------------

struct VideoFeatures {
    std::vector<FeatureRowMeta> meta;
    std::vector<float> rows;
};

VideoFeatures extract_video(const VideoRecord& record, const Backbone& backbone,
                            const DecodeOptions& options, int label_index) {
    auto stream = decode_frames(record, options);
    const std::vector<RawFrame> sampled = sample_frames(*stream, options.target_fps);
    VideoFeatures out;
    for (const RawFrame& raw : sampled) {
        const FrameTensor tensor = normalize_pixels(resize_frame(raw), record.video_id);
        FeatureVector feature = backbone.extract(tensor);
        FeatureRowMeta meta;
        meta.video_id = record.video_id;
        meta.frame_index = raw.frame_index;
        meta.label_index = label_index;
        meta.split = record.split;
        out.meta.push_back(std::move(meta));
        out.rows.insert(out.rows.end(), feature.values.begin(), feature.values.end());
    }
    return out;
}

int run_extract(const RunConfig& config) {
    if (config.manifest.empty()) throw ValidationError("--manifest is required for extract");
    if (config.features.empty()) throw ValidationError("--features is required for extract");

    const DatasetManifest manifest = load_manifest(config.manifest);
    const BackboneSpec spec =
        resolve_backbone_spec(config.backbone, optional_path(config.registry));
    const auto backbone = load_backbone(spec);

    DecodeOptions decode_options;
    decode_options.target_fps = config.fps;
    decode_options.decode_width = config.decode_width;
    decode_options.decode_height = config.decode_height;
    decode_options.decoder_command = config.decoder;

    CacheMeta cache_meta;
    cache_meta.backbone_name = backbone->name();
    cache_meta.preprocessing = backbone->preprocessing().describe();
    cache_meta.fps = config.fps;
    cache_meta.labels = manifest.vocabulary.labels();

    // canonical order drives both extraction and row layout
    std::vector<const VideoRecord*> ordered;
    for (const auto& rec : manifest.records) ordered.push_back(&rec);
    std::sort(ordered.begin(), ordered.end(),
              [](const VideoRecord* a, const VideoRecord* b) { return a->video_id < b->video_id; });

    const fs::path cache_path(config.features);
    if (cache_path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(cache_path.parent_path(), ec);
    }
    const uint32_t cols = static_cast<uint32_t>(backbone->flat_length());

    std::optional<FeatureTable> existing;
    if (fs::exists(cache_path)) {
        existing = load_feature_cache(cache_path);
        if (!(existing->info == cache_meta) || existing->cols != cols) {
            throw ValidationError(
                "feature cache " + cache_path.string() +
                " was extracted with different settings (backbone/preprocessing/fps/labels); "
                "use a fresh --features path or delete it");
        }
    }

    std::vector<const VideoRecord*> todo;
    for (const VideoRecord* rec : ordered) {
        if (!existing || !existing->contains_video(rec->video_id)) todo.push_back(rec);
    }

    if (!todo.empty()) {
        const auto mode = existing ? FeatureCacheWriter::OpenMode::append
                                   : FeatureCacheWriter::OpenMode::create;
        FeatureCacheWriter writer(cache_path, cols, cache_meta, mode);
        const size_t workers = config.jobs > 0
                                   ? static_cast<size_t>(config.jobs)
                                   : std::max<size_t>(1, std::thread::hardware_concurrency());
        // bounded look-ahead; results commit strictly in canonical order
        std::deque<std::pair<const VideoRecord*, std::future<VideoFeatures>>> inflight;
        size_t next = 0;
        while (next < todo.size() || !inflight.empty()) {
            while (next < todo.size() && inflight.size() < workers) {
                const VideoRecord* rec = todo[next++];
                const int label_index = manifest.vocabulary.index_of(rec->label);
                inflight.emplace_back(
                    rec, std::async(std::launch::async, [rec, &backbone, &decode_options,
                                                         label_index] {
                        return extract_video(*rec, *backbone, decode_options, label_index);
                    }));
            }
            auto [rec, future] = std::move(inflight.front());
            inflight.pop_front();
            const VideoFeatures result = future.get();
            writer.append_video(result.meta, result.rows);
            std::cerr << "extract: " << rec->video_id << " -> " << result.meta.size()
                      << " frames\n";
        }
        writer.finish();
    }

    // refresh split/label tags when the manifest was re-prepared since the
    // features were cached; the feature bytes stay untouched
    if (existing) {
        FeatureTable table = load_feature_cache(cache_path);
        bool changed = false;
        for (auto& meta : table.meta) {
            const VideoRecord* rec = manifest.find(meta.video_id);
            if (!rec) continue;
            const int label_index = manifest.vocabulary.index_of(rec->label);
            if (meta.split != rec->split || meta.label_index != label_index) {
                meta.split = rec->split;
                meta.label_index = label_index;
                changed = true;
            }
        }
        if (changed) {
            save_feature_index(table, cache_path);
            std::cerr << "extract: refreshed split tags from manifest\n";
        }
    }

    write_run_config(config, "extract", cache_path);
    std::cout << "extract: " << ordered.size() << " videos, " << todo.size() << " new, "
              << (ordered.size() - todo.size()) << " cached\n";
    return 0;
}

// ---------------------------------------------------------------------------
// prepare / train / evaluate / predict / report
// ---------------------------------------------------------------------------

int run_prepare(const RunConfig& config) {
    if (config.manifest.empty()) throw ValidationError("--manifest is required for prepare");
    const DatasetManifest manifest = load_manifest(config.manifest);
    const DatasetManifest split = split_dataset(manifest, config.parsed_ratios(),
                                                derive_seed(config.seed, SeedRole::split));
    save_manifest(split, config.manifest);
    write_run_config(config, "prepare", config.manifest);

    std::map<Split, int> counts;
    for (const auto& rec : split.records) counts[rec.split]++;
    std::cout << "prepare: " << split.records.size() << " videos, train/val/test = "
              << counts[Split::train] << "/" << counts[Split::val] << "/" << counts[Split::test]
              << "\n";
    return 0;
}

LabeledFeatures normalized_split(const FeatureTable& table, Split split, const NormStats& stats) {
    LabeledFeatures rows = select_split(table, split);
    for (size_t i = 0; i < rows.count(); ++i) {
        apply_feature_normalizer_in_place(
            stats, std::span<float>(rows.data.data() + i * rows.dim, rows.dim));
    }
    return rows;
}

int run_train(const RunConfig& config) {
    if (config.features.empty()) throw ValidationError("--features is required for train");
    if (config.model_dir.empty()) throw ValidationError("--model is required for train");

    const FeatureTable table = load_feature_cache(config.features);
    const LabeledFeatures raw_train = select_split(table, Split::train);
    if (raw_train.count() == 0) {
        throw ValidationError(
            "feature cache has no training rows; run 'prepare' to split the manifest, then "
            "re-run 'extract'");
    }

    // second normalization stage: min-max statistics from the training split only
    std::vector<FeatureVector> train_features(raw_train.count());
    for (size_t i = 0; i < raw_train.count(); ++i) {
        train_features[i].values.assign(raw_train.data.begin() + static_cast<int64_t>(i * raw_train.dim),
                                        raw_train.data.begin() +
                                            static_cast<int64_t>((i + 1) * raw_train.dim));
    }
    const NormStats stats = fit_feature_normalizer(train_features);

    const LabeledFeatures train_rows = normalized_split(table, Split::train, stats);
    const LabeledFeatures val_rows = normalized_split(table, Split::val, stats);

    HeadConfig head_config;
    head_config.input_dim = static_cast<int>(table.cols);
    head_config.hidden_widths = config.parsed_hidden();
    head_config.output_dim = static_cast<int>(table.info.labels.size());
    head_config.dropout_rate = config.dropout;
    head_config.seed = derive_seed(config.seed, SeedRole::init);

    TrainConfig train_config;
    train_config.epochs = config.epochs;
    train_config.batch_size = config.batch_size;
    train_config.learning_rate = config.learning_rate;
    train_config.early_stop_patience = config.patience;
    train_config.seed = config.seed;
    train_config.optimizer = config.optimizer == "sgd" ? OptimizerHyper::Kind::sgd
                                                       : OptimizerHyper::Kind::adam;

    TrainResult result = train(train_rows, val_rows, head_config, train_config);
    result.model.vocabulary = LabelVocabulary(table.info.labels);
    result.model.norm_stats = stats;
    result.model.backbone_name = table.info.backbone_name;

    const fs::path bundle_dir(config.model_dir);
    save_model(result.model, bundle_dir);
    save_history(result.history, bundle_dir / "history.json");
    write_run_config(config, "train", bundle_dir / "model.json");

    std::cout << "train: " << result.history.epochs.size() << " epochs, best epoch "
              << result.history.best_epoch << ", bundle at " << bundle_dir.string() << "\n";
    return 0;
}

void check_feature_model_match(const FeatureTable& table, const HeadModel& model) {
    if (table.cols != static_cast<size_t>(model.config.input_dim) ||
        table.info.backbone_name != model.backbone_name) {
        throw DimensionMismatch("feature cache built with backbone '" + table.info.backbone_name +
                                "' (" + std::to_string(table.cols) + " dims) does not match the "
                                "bundle trained on '" + model.backbone_name + "' (" +
                                std::to_string(model.config.input_dim) + " dims)");
    }
    if (table.info.labels != model.vocabulary.labels()) {
        throw ValidationError("feature cache labels do not match the bundle's vocabulary");
    }
}

int run_evaluate(const RunConfig& config) {
    if (config.features.empty()) throw ValidationError("--features is required for evaluate");
    if (config.model_dir.empty()) throw ValidationError("--model is required for evaluate");

    const FeatureTable table = load_feature_cache(config.features);
    const HeadModel model = load_model(config.model_dir);
    check_feature_model_match(table, model);

    // group contiguous test rows per video, in cache order
    struct VideoRows {
        std::string video_id;
        int label = 0;
        std::vector<std::vector<float>> features;
    };
    std::vector<VideoRows> videos;
    for (size_t i = 0; i < table.rows(); ++i) {
        if (table.meta[i].split != Split::test) continue;
        if (!table.meta[i].label_index) {
            throw ValidationError("test row for video '" + table.meta[i].video_id +
                                  "' has no label");
        }
        if (videos.empty() || videos.back().video_id != table.meta[i].video_id) {
            videos.push_back({table.meta[i].video_id, *table.meta[i].label_index, {}});
        }
        const auto row = table.row(i);
        std::vector<float> values(row.begin(), row.end());
        apply_feature_normalizer_in_place(model.norm_stats, values);
        videos.back().features.push_back(std::move(values));
    }
    if (videos.empty()) {
        throw ValidationError(
            "feature cache has no test rows; run 'prepare' to split the manifest, then re-run "
            "'extract'");
    }

    std::vector<std::pair<int, int>> pairs;
    for (const auto& video : videos) {
        const VideoDecision decision = classify_video(model, video.video_id, video.features);
        pairs.emplace_back(video.label, decision.predicted_index);
        std::cerr << "evaluate: " << video.video_id << " -> " << decision.predicted_label
                  << (decision.tie_broken ? " (tie broken)" : "") << "\n";
    }

    const EvaluationReport report = build_report(model.backbone_name, model.vocabulary, pairs);
    const fs::path report_path(config.report);
    {
        std::error_code ec;
        if (report_path.has_parent_path()) fs::create_directories(report_path.parent_path(), ec);
        std::ofstream out(report_path, std::ios::trunc);
        if (!out) throw IoError("cannot write report: " + report_path.string());
        out << render_report_json(report);
    }
    if (!config.csv.empty()) {
        std::ofstream out(config.csv, std::ios::trunc);
        if (!out) throw IoError("cannot write csv: " + config.csv);
        out << confusion_csv(report);
    }
    write_run_config(config, "evaluate", report_path);

    if (config.format == "json") {
        std::cout << render_report_json(report);
    } else {
        std::cout << render_report_text(report);
    }
    return 0;
}

int run_predict(const RunConfig& config) {
    if (config.model_dir.empty()) throw ValidationError("--model is required for predict");
    if (config.input.empty()) throw ValidationError("--input is required for predict");

    const HeadModel model = load_model(config.model_dir);
    const std::string backbone_name = !config.backbone_override.empty()
                                          ? config.backbone_override
                                          : (model.backbone_name.empty() ? std::string("stub")
                                                                         : model.backbone_name);
    const BackboneSpec spec =
        resolve_backbone_spec(backbone_name, optional_path(config.registry));
    const auto backbone = load_backbone(spec);
    if (backbone->flat_length() != model.config.input_dim) {
        throw DimensionMismatch("bundle was trained on '" + model.backbone_name + "' features (" +
                                std::to_string(model.config.input_dim) + " dims) but backbone '" +
                                backbone->name() + "' emits " +
                                std::to_string(backbone->flat_length()));
    }

    VideoRecord record;
    record.video_id = fs::path(config.input).filename().string();
    record.source = config.input;
    record.label = model.vocabulary.name(0); // unused placeholder
    record.fps_hint = config.fps;

    DecodeOptions decode_options;
    decode_options.target_fps = config.fps;
    decode_options.decode_width = config.decode_width;
    decode_options.decode_height = config.decode_height;
    decode_options.decoder_command = config.decoder;

    auto stream = decode_frames(record, decode_options);
    const std::vector<RawFrame> sampled = sample_frames(*stream, config.fps);
    std::vector<std::vector<float>> features;
    for (const RawFrame& raw : sampled) {
        const FrameTensor tensor = normalize_pixels(resize_frame(raw), record.video_id);
        FeatureVector feature = backbone->extract(tensor);
        apply_feature_normalizer_in_place(model.norm_stats, feature.values);
        features.push_back(std::move(feature.values));
    }
    const VideoDecision decision = classify_video(model, record.video_id, features);

    if (config.format == "json") {
        json doc{{"video_id", decision.video_id},
                 {"predicted_label", decision.predicted_label},
                 {"vote_counts", decision.vote_counts},
                 {"mean_probabilities", decision.mean_probabilities},
                 {"tie_broken", decision.tie_broken},
                 {"frames", sampled.size()}};
        std::cout << doc.dump(2) << "\n";
        return 0;
    }
    std::cout << decision.predicted_label << "\n";
    std::cout << "votes:";
    for (int k = 0; k < model.vocabulary.size(); ++k) {
        std::cout << " " << model.vocabulary.name(k) << "="
                  << decision.vote_counts[static_cast<size_t>(k)];
    }
    std::cout << "\nmean probabilities:";
    for (int k = 0; k < model.vocabulary.size(); ++k) {
        char cell[64];
        snprintf(cell, sizeof(cell), " %s=%.4f", model.vocabulary.name(k).c_str(),
                 decision.mean_probabilities[static_cast<size_t>(k)]);
        std::cout << cell;
    }
    std::cout << "\n";
    if (decision.tie_broken) std::cout << "note: vote tie broken by mean probability\n";
    return 0;
}

int run_report(const RunConfig& config) {
    if (config.report.empty()) throw ValidationError("--report is required");
    std::ifstream in(config.report);
    if (!in) throw IoError("cannot open report: " + config.report);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const EvaluationReport report = parse_report_json(buffer.str());
    if (!config.csv.empty()) {
        std::ofstream out(config.csv, std::ios::trunc);
        if (!out) throw IoError("cannot write csv: " + config.csv);
        out << confusion_csv(report);
    }
    if (config.format == "json") {
        std::cout << render_report_json(report);
    } else {
        std::cout << render_report_text(report);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"violent-action video classification over fixed backbone features"};
    app.require_subcommand(1);

    RunConfig config;
    std::string config_path;

    auto bind_common = [&](CLI::App* cmd) {
        auto binder = std::make_shared<SettingsBinder>(cmd, &config_path);
        binder->bind("--seed", config.seed, "SEED", "seed", "global seed (fans out per stage)");
        binder->bind("--fps", config.fps, "FPS", "fps", "normalized frame rate");
        binder->bind("--format", config.format, "FORMAT", "eval.format", "text or json");
        return binder;
    };

    CLI::App* prepare = app.add_subcommand("prepare", "split the manifest into train/val/test");
    auto prepare_binder = bind_common(prepare);
    prepare_binder->bind("--manifest", config.manifest, "MANIFEST", "dataset.manifest",
                         "manifest path (rewritten in place)");
    prepare_binder->bind("--ratios", config.ratios, "RATIOS", "dataset.ratios",
                         "train,val,test fractions");

    CLI::App* extract = app.add_subcommand("extract", "decode, sample, and cache features");
    auto extract_binder = bind_common(extract);
    extract_binder->bind("--manifest", config.manifest, "MANIFEST", "dataset.manifest",
                         "manifest path");
    extract_binder->bind("--backbone", config.backbone, "BACKBONE", "backbone.name",
                         "backbone name (stub needs no registry)");
    extract_binder->bind("--registry", config.registry, "REGISTRY", "backbone.registry",
                         "backbone registry JSON");
    extract_binder->bind("--features", config.features, "FEATURES", "backbone.features",
                         "feature cache output path");
    extract_binder->bind("--decoder", config.decoder, "DECODER", "backbone.decoder",
                         "decoder command template ({input} {fps} {width} {height})");
    extract_binder->bind("--decode-width", config.decode_width, "DECODE_WIDTH",
                         "backbone.decode_width", "decoder output width");
    extract_binder->bind("--decode-height", config.decode_height, "DECODE_HEIGHT",
                         "backbone.decode_height", "decoder output height");
    extract_binder->bind("--jobs", config.jobs, "JOBS", "backbone.jobs",
                         "parallel videos (0 = logical CPUs)");

    CLI::App* train_cmd = app.add_subcommand("train", "train the classifier head");
    auto train_binder = bind_common(train_cmd);
    train_binder->bind("--features", config.features, "FEATURES", "backbone.features",
                       "feature cache path");
    train_binder->bind("--model", config.model_dir, "MODEL", "train.model",
                       "output bundle directory");
    train_binder->bind("--epochs", config.epochs, "EPOCHS", "train.epochs", "max epochs");
    train_binder->bind("--batch-size", config.batch_size, "BATCH_SIZE", "train.batch_size",
                       "mini-batch size");
    train_binder->bind("--lr", config.learning_rate, "LR", "train.lr", "learning rate");
    train_binder->bind("--patience", config.patience, "PATIENCE", "train.patience",
                       "early-stop patience (0 disables)");
    train_binder->bind("--optimizer", config.optimizer, "OPTIMIZER", "train.optimizer",
                       "adam or sgd");
    train_binder->bind("--hidden", config.hidden, "HIDDEN", "head.hidden",
                       "four hidden widths");
    train_binder->bind("--dropout", config.dropout, "DROPOUT", "head.dropout",
                       "dropout rate on hidden layers");

    CLI::App* evaluate = app.add_subcommand("evaluate", "classify the test split and report");
    auto evaluate_binder = bind_common(evaluate);
    evaluate_binder->bind("--features", config.features, "FEATURES", "backbone.features",
                          "feature cache path");
    evaluate_binder->bind("--model", config.model_dir, "MODEL", "train.model",
                          "model bundle directory");
    evaluate_binder->bind("--report", config.report, "REPORT", "eval.report",
                          "report.json output path");
    evaluate_binder->bind("--csv", config.csv, "CSV", "eval.csv",
                          "optional confusion matrix CSV");

    CLI::App* predict = app.add_subcommand("predict", "classify one video with a bundle");
    auto predict_binder = bind_common(predict);
    predict_binder->bind("--model", config.model_dir, "MODEL", "train.model",
                         "model bundle directory");
    predict_binder->bind("--input", config.input, "INPUT", "eval.input",
                         "video file or frame directory");
    predict_binder->bind("--backbone", config.backbone_override, "BACKBONE", "backbone.name",
                         "override the bundle's backbone");
    predict_binder->bind("--registry", config.registry, "REGISTRY", "backbone.registry",
                         "backbone registry JSON");
    predict_binder->bind("--decoder", config.decoder, "DECODER", "backbone.decoder",
                         "decoder command template");
    predict_binder->bind("--decode-width", config.decode_width, "DECODE_WIDTH",
                         "backbone.decode_width", "decoder output width");
    predict_binder->bind("--decode-height", config.decode_height, "DECODE_HEIGHT",
                         "backbone.decode_height", "decoder output height");

    CLI::App* report_cmd = app.add_subcommand("report", "re-render a saved report");
    auto report_binder = bind_common(report_cmd);
    report_binder->bind("--report", config.report, "REPORT", "eval.report", "report.json path");
    report_binder->bind("--csv", config.csv, "CSV", "eval.csv",
                        "optional confusion matrix CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(prepare)) {
            prepare_binder->finalize();
            return run_prepare(config);
        }
        if (app.got_subcommand(extract)) {
            extract_binder->finalize();
            return run_extract(config);
        }
        if (app.got_subcommand(train_cmd)) {
            train_binder->finalize();
            return run_train(config);
        }
        if (app.got_subcommand(evaluate)) {
            evaluate_binder->finalize();
            return run_evaluate(config);
        }
        if (app.got_subcommand(predict)) {
            predict_binder->finalize();
            return run_predict(config);
        }
        if (app.got_subcommand(report_cmd)) {
            report_binder->finalize();
            return run_report(config);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.error_class() == ErrorClass::io ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
