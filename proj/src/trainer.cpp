#include "actionsense/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "actionsense/error.hpp"
#include "actionsense/rng.hpp"

namespace actionsense {

using nlohmann::json;

void TrainConfig::validate() const {
    if (epochs < 0) throw ConfigError("epochs must be non-negative");
    if (batch_size <= 0) throw ConfigError("batch size must be positive");
    if (learning_rate <= 0.0) throw ConfigError("learning rate must be positive");
    if (early_stop_patience < 0) throw ConfigError("early-stop patience must be non-negative");
}

LabeledFeatures select_split(const FeatureTable& table, Split split) {
    LabeledFeatures out;
    out.dim = table.cols;
    for (size_t i = 0; i < table.rows(); ++i) {
        if (table.meta[i].split != split) continue;
        if (!table.meta[i].label_index) {
            throw ValidationError("feature row for video '" + table.meta[i].video_id +
                                  "' has no label; cannot use it for training");
        }
        const auto row = table.row(i);
        out.data.insert(out.data.end(), row.begin(), row.end());
        out.labels.push_back(*table.meta[i].label_index);
        out.split_tags.push_back(table.meta[i].split);
    }
    return out;
}

Matrix to_matrix(const LabeledFeatures& features) {
    Matrix m(features.count(), features.dim);
    for (size_t i = 0; i < features.data.size(); ++i) {
        m.a[i] = static_cast<double>(features.data[i]);
    }
    return m;
}

namespace {

int argmax_lowest(const double* row, size_t n) {
    size_t best = 0;
    for (size_t j = 1; j < n; ++j) {
        if (row[j] > row[best]) best = j;
    }
    return static_cast<int>(best);
}

void reject_test_rows(const LabeledFeatures& features, const char* which) {
    for (Split s : features.split_tags) {
        if (s == Split::test) {
            throw ValidationError(std::string("test-split features passed to train() as ") +
                                  which + " data; the test split must stay unseen");
        }
    }
}

Matrix one_hot_rows(const std::vector<int>& labels, int num_classes,
                    const std::vector<size_t>& order, size_t begin, size_t end) {
    Matrix t(end - begin, static_cast<size_t>(num_classes));
    for (size_t i = begin; i < end; ++i) {
        const int label = labels[order[i]];
        if (label < 0 || label >= num_classes) {
            throw IndexOutOfRange("label index " + std::to_string(label) + " outside [0," +
                                  std::to_string(num_classes) + ")");
        }
        t(i - begin, static_cast<size_t>(label)) = 1.0;
    }
    return t;
}

} // namespace

EvalMetrics evaluate_epoch(const HeadModel& model, const Matrix& features,
                           const std::vector<int>& labels) {
    if (features.rows == 0) throw EmptySet("cannot evaluate an empty feature set");
    if (features.rows != labels.size()) {
        throw DimensionMismatch("feature rows and labels differ in count");
    }
    constexpr size_t kChunk = 512;
    double loss_sum = 0.0;
    size_t correct = 0;
    for (size_t begin = 0; begin < features.rows; begin += kChunk) {
        const size_t end = std::min(features.rows, begin + kChunk);
        Matrix chunk(end - begin, features.cols);
        std::copy(features.a.begin() + static_cast<int64_t>(begin * features.cols),
                  features.a.begin() + static_cast<int64_t>(end * features.cols),
                  chunk.a.begin());
        const ForwardResult result = forward(model, chunk, RunMode::infer, nullptr);
        for (size_t i = 0; i < chunk.rows; ++i) {
            const double* row = result.probabilities.a.data() + i * result.probabilities.cols;
            const int label = labels[begin + i];
            if (label < 0 || label >= static_cast<int>(result.probabilities.cols)) {
                throw IndexOutOfRange("label index " + std::to_string(label) +
                                      " outside the model's classes");
            }
            loss_sum -= std::log(std::max(row[label], 1e-12));
            if (argmax_lowest(row, result.probabilities.cols) == label) ++correct;
        }
    }
    EvalMetrics metrics;
    metrics.loss = loss_sum / static_cast<double>(features.rows);
    metrics.accuracy = static_cast<double>(correct) / static_cast<double>(features.rows);
    return metrics;
}

EvalMetrics evaluate_epoch(const HeadModel& model, const LabeledFeatures& features) {
    return evaluate_epoch(model, to_matrix(features), features.labels);
}

TrainResult train(const LabeledFeatures& train_features, const LabeledFeatures& val_features,
                  const HeadConfig& head_config, const TrainConfig& train_config) {
    head_config.validate();
    train_config.validate();
    if (train_features.count() == 0) {
        throw EmptyTrainingSet("training set is empty");
    }
    if (train_features.dim != static_cast<size_t>(head_config.input_dim)) {
        throw DimensionMismatch("training features have dimension " +
                                std::to_string(train_features.dim) + ", head expects " +
                                std::to_string(head_config.input_dim));
    }
    if (val_features.count() > 0 && val_features.dim != train_features.dim) {
        throw DimensionMismatch("validation feature dimension differs from training");
    }
    reject_test_rows(train_features, "training");
    reject_test_rows(val_features, "validation");

    TrainResult result;
    result.model = init_head(head_config);
    if (train_config.epochs == 0) return result;

    const Matrix train_matrix = to_matrix(train_features);
    const Matrix val_matrix = val_features.count() > 0 ? to_matrix(val_features) : Matrix();
    const bool has_val = val_features.count() > 0;

    const size_t n = train_features.count();
    const size_t batch_size = std::min<size_t>(static_cast<size_t>(train_config.batch_size), n);
    const uint64_t shuffle_seed = derive_seed(train_config.seed, SeedRole::shuffle);
    const uint64_t dropout_seed = derive_seed(train_config.seed, SeedRole::dropout);

    OptimizerState state = OptimizerState::zeros_like(result.model);
    OptimizerHyper hyper;
    hyper.kind = train_config.optimizer;
    hyper.learning_rate = train_config.learning_rate;

    std::array<LayerParams, kWeightedLayers> best_params = result.model.layers;
    double best_loss = std::numeric_limits<double>::infinity();
    int best_epoch = 0;
    int epochs_since_best = 0;
    int64_t step = 0;

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});

    for (int epoch = 1; epoch <= train_config.epochs; ++epoch) {
        // shuffle order is a pure function of (seed, epoch)
        std::mt19937_64 shuffle_gen(splitmix64(shuffle_seed + static_cast<uint64_t>(epoch)));
        std::mt19937_64 dropout_gen(splitmix64(dropout_seed + static_cast<uint64_t>(epoch)));
        std::iota(order.begin(), order.end(), size_t{0});
        shuffle_in_place(order, shuffle_gen);

        for (size_t begin = 0; begin < n; begin += batch_size) {
            const size_t end = std::min(n, begin + batch_size);
            Matrix batch(end - begin, train_features.dim);
            for (size_t i = begin; i < end; ++i) {
                const double* src = train_matrix.a.data() + order[i] * train_features.dim;
                std::copy(src, src + train_features.dim,
                          batch.a.data() + (i - begin) * train_features.dim);
            }
            const Matrix targets = one_hot_rows(train_features.labels, head_config.output_dim,
                                                order, begin, end);
            ForwardResult fwd = forward(result.model, batch, RunMode::train, &dropout_gen);
            const Gradients grads = backward(result.model, fwd.cache, fwd.probabilities, targets);
            optimizer_step(result.model, grads, state, hyper, ++step);
        }

        EpochRecord record;
        record.epoch = epoch;
        const EvalMetrics train_metrics =
            evaluate_epoch(result.model, train_matrix, train_features.labels);
        record.train_loss = train_metrics.loss;
        record.train_accuracy = train_metrics.accuracy;
        // model selection tracks validation loss; training loss stands in
        // when no validation split exists
        double selection_loss = train_metrics.loss;
        if (has_val) {
            const EvalMetrics val_metrics =
                evaluate_epoch(result.model, val_matrix, val_features.labels);
            record.val_loss = val_metrics.loss;
            record.val_accuracy = val_metrics.accuracy;
            selection_loss = val_metrics.loss;
        } else {
            record.val_loss = std::numeric_limits<double>::quiet_NaN();
            record.val_accuracy = std::numeric_limits<double>::quiet_NaN();
        }
        result.history.epochs.push_back(record);
        std::cerr << "epoch=" << epoch << " train_loss=" << record.train_loss
                  << " val_loss=" << record.val_loss << " val_acc=" << record.val_accuracy
                  << "\n";

        if (selection_loss < best_loss) {
            best_loss = selection_loss;
            best_epoch = epoch;
            best_params = result.model.layers;
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
            if (train_config.early_stop_patience > 0 &&
                epochs_since_best >= train_config.early_stop_patience) {
                break;
            }
        }
    }

    result.model.layers = best_params;
    result.history.best_epoch = best_epoch;
    return result;
}

void save_history(const TrainHistory& history, const std::filesystem::path& path) {
    json epochs = json::array();
    for (const auto& record : history.epochs) {
        json row{{"epoch", record.epoch},
                 {"train_loss", record.train_loss},
                 {"train_accuracy", record.train_accuracy}};
        if (std::isnan(record.val_loss)) {
            row["val_loss"] = nullptr;
            row["val_accuracy"] = nullptr;
        } else {
            row["val_loss"] = record.val_loss;
            row["val_accuracy"] = record.val_accuracy;
        }
        epochs.push_back(row);
    }
    json doc{{"format", "actionsense-history"},
             {"version", 1},
             {"best_epoch", history.best_epoch},
             {"epochs", epochs}};
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write history file: " + path.string());
    out << doc.dump(2) << "\n";
    if (!out) throw IoError("failed writing history file: " + path.string());
}

} // namespace actionsense
