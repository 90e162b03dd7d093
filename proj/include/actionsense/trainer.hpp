#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "actionsense/feature_cache.hpp"
#include "actionsense/mlp_head.hpp"

namespace actionsense {

struct TrainConfig {
    int epochs = 200;
    int batch_size = 32; // clipped to the training-set size
    double learning_rate = 1e-3;
    int early_stop_patience = 10; // 0 disables early stopping
    uint64_t seed = 0;
    OptimizerHyper::Kind optimizer = OptimizerHyper::Kind::adam;

    void validate() const;
};

// Rows of one split: float32 features with label indices and split tags.
struct LabeledFeatures {
    size_t dim = 0;
    std::vector<float> data; // count * dim
    std::vector<int> labels;
    std::vector<Split> split_tags;

    size_t count() const { return labels.size(); }
};

// Gathers the rows of `split` from a cache; every row must carry a label.
LabeledFeatures select_split(const FeatureTable& table, Split split);

struct EpochRecord {
    int epoch = 0; // 1-based, matches the progress lines
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0; // 1-based epoch with minimum validation loss; 0 if none
};

struct TrainResult {
    HeadModel model;
    TrainHistory history;
};

// Shuffled mini-batch epochs with per-epoch validation (dropout disabled) and
// best-checkpoint restore. Deterministic given the seeds. Inputs must already
// be normalized; test-tagged rows are rejected.
TrainResult train(const LabeledFeatures& train_features, const LabeledFeatures& val_features,
                  const HeadConfig& head_config, const TrainConfig& train_config);

struct EvalMetrics {
    double loss = 0.0;
    double accuracy = 0.0;
};

// Inference-mode loss/accuracy over a whole set; argmax ties break toward the
// lowest class index.
EvalMetrics evaluate_epoch(const HeadModel& model, const Matrix& features,
                           const std::vector<int>& labels);
EvalMetrics evaluate_epoch(const HeadModel& model, const LabeledFeatures& features);

void save_history(const TrainHistory& history, const std::filesystem::path& path);

Matrix to_matrix(const LabeledFeatures& features);

} // namespace actionsense
