#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "actionsense/backbone.hpp"
#include "actionsense/dataset.hpp"
#include "actionsense/matrix.hpp"

namespace actionsense {

// Five weighted layers: four hidden (ReLU, dropout after each) and a softmax
// output. The four dropout sites follow the hidden activations.
inline constexpr int kHiddenLayers = 4;
inline constexpr int kWeightedLayers = 5;

struct HeadConfig {
    int input_dim = 147;
    std::array<int, kHiddenLayers> hidden_widths = {512, 256, 128, 64};
    int output_dim = 3;
    double dropout_rate = 0.5;
    uint64_t seed = 0;

    void validate() const; // throws ConfigError
    // [input_dim, hidden..., output_dim]
    std::vector<int> layer_widths() const;
};

// Parameters are stored as float32 — the exact precision the bundle format
// persists — while all arithmetic runs in double.
struct LayerParams {
    int fan_in = 0;
    int fan_out = 0;
    std::vector<float> weights; // fan_in x fan_out, row-major
    std::vector<float> bias;    // fan_out
};

struct HeadModel {
    HeadConfig config;
    std::array<LayerParams, kWeightedLayers> layers;
    LabelVocabulary vocabulary;
    NormStats norm_stats;
    std::string backbone_name;
};

// Glorot-uniform weights within ±sqrt(6/(fan_in+fan_out)), zero biases,
// deterministic for a fixed seed.
HeadModel init_head(const HeadConfig& config);

enum class RunMode { train, infer };

struct ForwardCache {
    size_t batch = 0;
    Matrix input;
    std::array<Matrix, kHiddenLayers> hidden;        // post ReLU+dropout
    std::array<Matrix, kHiddenLayers> pre_activation;
    std::array<std::vector<double>, kHiddenLayers> masks; // 0 or 1/(1-p)
};

struct ForwardResult {
    Matrix probabilities; // batch x output_dim, rows sum to 1
    ForwardCache cache;
};

// Train mode applies inverted dropout from `rng`; infer mode is mask-free.
// Softmax subtracts the row max, so extreme logits stay finite.
ForwardResult forward(const HeadModel& model, const Matrix& batch, RunMode mode,
                      std::mt19937_64* rng);

// -(1/B) sum t * ln(max(p, 1e-12))
double cross_entropy_loss(const Matrix& probabilities, const Matrix& targets_one_hot);

struct LayerGradients {
    Matrix weights; // fan_in x fan_out
    std::vector<double> bias;
};

struct Gradients {
    std::array<LayerGradients, kWeightedLayers> layers;
};

// Softmax/cross-entropy delta (p - t)/B chained through dropout masks and ReLU.
Gradients backward(const HeadModel& model, const ForwardCache& cache,
                   const Matrix& probabilities, const Matrix& targets_one_hot);

struct OptimizerHyper {
    enum class Kind { adam, sgd };
    Kind kind = Kind::adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct OptimizerState {
    std::array<Matrix, kWeightedLayers> m_weights, v_weights;
    std::array<std::vector<double>, kWeightedLayers> m_bias, v_bias;

    static OptimizerState zeros_like(const HeadModel& model);
};

// Adaptive-moment update with bias correction at step t (1-based); SGD when
// hyper.kind says so.
void optimizer_step(HeadModel& model, const Gradients& grads, OptimizerState& state,
                    const OptimizerHyper& hyper, int64_t t);

// Bundle directory: model.json (config, vocabulary, backbone, norm stats,
// tensor offsets, checksum) + weights.bin (float32 LE, W1,b1,...,W5,b5).
void save_model(const HeadModel& model, const std::filesystem::path& bundle_dir);
HeadModel load_model(const std::filesystem::path& bundle_dir);

uint32_t crc32(const uint8_t* data, size_t size);

} // namespace actionsense
