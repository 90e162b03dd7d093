#include "actionsense/mlp_head.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "actionsense/error.hpp"
#include "actionsense/rng.hpp"

namespace actionsense {

using nlohmann::json;

void HeadConfig::validate() const {
    if (input_dim <= 0) throw ConfigError("head input_dim must be positive");
    if (output_dim < 2) throw ConfigError("head output_dim must be at least 2");
    for (int w : hidden_widths) {
        if (w <= 0) throw ConfigError("head hidden widths must be positive");
    }
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw ConfigError("dropout rate must lie in [0,1)");
    }
}

std::vector<int> HeadConfig::layer_widths() const {
    std::vector<int> widths;
    widths.push_back(input_dim);
    for (int w : hidden_widths) widths.push_back(w);
    widths.push_back(output_dim);
    return widths;
}

HeadModel init_head(const HeadConfig& config) {
    config.validate();
    HeadModel model;
    model.config = config;
    model.vocabulary = LabelVocabulary::canonical();
    std::mt19937_64 gen(config.seed);
    const std::vector<int> widths = config.layer_widths();
    for (int layer = 0; layer < kWeightedLayers; ++layer) {
        LayerParams& p = model.layers[static_cast<size_t>(layer)];
        p.fan_in = widths[static_cast<size_t>(layer)];
        p.fan_out = widths[static_cast<size_t>(layer) + 1];
        const double bound = std::sqrt(6.0 / (p.fan_in + p.fan_out));
        p.weights.resize(static_cast<size_t>(p.fan_in) * static_cast<size_t>(p.fan_out));
        for (float& w : p.weights) {
            w = static_cast<float>(uniform_range(gen, -bound, bound));
        }
        p.bias.assign(static_cast<size_t>(p.fan_out), 0.0f);
    }
    return model;
}

namespace {

// out = in (B x fan_in) * W (fan_in x fan_out) + b
Matrix affine(const Matrix& in, const LayerParams& p) {
    Matrix out(in.rows, static_cast<size_t>(p.fan_out));
    const size_t fan_in = static_cast<size_t>(p.fan_in);
    const size_t fan_out = static_cast<size_t>(p.fan_out);
    for (size_t i = 0; i < in.rows; ++i) {
        double* orow = out.a.data() + i * fan_out;
        for (size_t j = 0; j < fan_out; ++j) orow[j] = p.bias[j];
        const double* irow = in.a.data() + i * fan_in;
        for (size_t k = 0; k < fan_in; ++k) {
            const double x = irow[k];
            if (x == 0.0) continue;
            const float* wrow = p.weights.data() + k * fan_out;
            for (size_t j = 0; j < fan_out; ++j) orow[j] += x * wrow[j];
        }
    }
    return out;
}

void softmax_rows(Matrix& m) {
    for (size_t i = 0; i < m.rows; ++i) {
        double* row = m.a.data() + i * m.cols;
        double mx = row[0];
        for (size_t j = 1; j < m.cols; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (size_t j = 0; j < m.cols; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        for (size_t j = 0; j < m.cols; ++j) row[j] /= sum;
    }
}

} // namespace

ForwardResult forward(const HeadModel& model, const Matrix& batch, RunMode mode,
                      std::mt19937_64* rng) {
    if (batch.cols != static_cast<size_t>(model.config.input_dim)) {
        throw ShapeError("batch width " + std::to_string(batch.cols) +
                         " does not match head input_dim " +
                         std::to_string(model.config.input_dim));
    }
    for (double v : batch.a) {
        if (!std::isfinite(v)) throw NonFiniteInput("batch contains non-finite values");
    }
    const double p = model.config.dropout_rate;
    const bool use_dropout = mode == RunMode::train && p > 0.0;
    if (use_dropout && rng == nullptr) {
        throw ConfigError("train-mode forward with dropout needs an rng");
    }

    ForwardResult result;
    ForwardCache& cache = result.cache;
    cache.batch = batch.rows;
    cache.input = batch;

    const Matrix* current = &cache.input;
    for (int layer = 0; layer < kHiddenLayers; ++layer) {
        Matrix z = affine(*current, model.layers[static_cast<size_t>(layer)]);
        cache.pre_activation[static_cast<size_t>(layer)] = z;
        Matrix h = std::move(z);
        for (double& v : h.a) v = v > 0.0 ? v : 0.0;
        if (use_dropout) {
            auto& mask = cache.masks[static_cast<size_t>(layer)];
            mask.resize(h.size());
            const double keep = 1.0 - p;
            const double scale = 1.0 / keep;
            for (size_t i = 0; i < h.size(); ++i) {
                mask[i] = uniform_unit(*rng) < keep ? scale : 0.0;
                h.a[i] *= mask[i];
            }
        }
        cache.hidden[static_cast<size_t>(layer)] = std::move(h);
        current = &cache.hidden[static_cast<size_t>(layer)];
    }
    result.probabilities = affine(*current, model.layers[kWeightedLayers - 1]);
    softmax_rows(result.probabilities);
    return result;
}

double cross_entropy_loss(const Matrix& probabilities, const Matrix& targets_one_hot) {
    if (probabilities.rows != targets_one_hot.rows ||
        probabilities.cols != targets_one_hot.cols || probabilities.rows == 0) {
        throw ShapeError("probabilities and targets must have identical non-empty shapes");
    }
    constexpr double kEps = 1e-12;
    double total = 0.0;
    for (size_t i = 0; i < probabilities.size(); ++i) {
        if (targets_one_hot.a[i] != 0.0) {
            total -= targets_one_hot.a[i] * std::log(std::max(probabilities.a[i], kEps));
        }
    }
    return total / static_cast<double>(probabilities.rows);
}

Gradients backward(const HeadModel& model, const ForwardCache& cache,
                   const Matrix& probabilities, const Matrix& targets_one_hot) {
    if (probabilities.rows != cache.batch ||
        probabilities.cols != static_cast<size_t>(model.config.output_dim) ||
        targets_one_hot.rows != probabilities.rows ||
        targets_one_hot.cols != probabilities.cols ||
        cache.input.cols != static_cast<size_t>(model.config.input_dim)) {
        throw StaleCache("forward cache does not match this batch");
    }
    const size_t batch = cache.batch;

    Gradients grads;
    // output delta from the softmax cross-entropy identity
    Matrix delta(batch, probabilities.cols);
    for (size_t i = 0; i < delta.size(); ++i) {
        delta.a[i] = (probabilities.a[i] - targets_one_hot.a[i]) / static_cast<double>(batch);
    }

    for (int layer = kWeightedLayers - 1; layer >= 0; --layer) {
        const LayerParams& params = model.layers[static_cast<size_t>(layer)];
        const Matrix& input = layer == 0 ? cache.input : cache.hidden[static_cast<size_t>(layer - 1)];
        LayerGradients& lg = grads.layers[static_cast<size_t>(layer)];
        const size_t fan_in = static_cast<size_t>(params.fan_in);
        const size_t fan_out = static_cast<size_t>(params.fan_out);

        // dW = input^T * delta, db = column sums of delta
        lg.weights = Matrix(fan_in, fan_out);
        lg.bias.assign(fan_out, 0.0);
        for (size_t i = 0; i < batch; ++i) {
            const double* irow = input.a.data() + i * fan_in;
            const double* drow = delta.a.data() + i * fan_out;
            for (size_t j = 0; j < fan_out; ++j) lg.bias[j] += drow[j];
            for (size_t k = 0; k < fan_in; ++k) {
                const double x = irow[k];
                if (x == 0.0) continue;
                double* grow = lg.weights.a.data() + k * fan_out;
                for (size_t j = 0; j < fan_out; ++j) grow[j] += x * drow[j];
            }
        }

        if (layer == 0) break;

        // delta for the previous layer: (delta * W^T) through dropout + ReLU
        Matrix prev(batch, fan_in);
        for (size_t i = 0; i < batch; ++i) {
            const double* drow = delta.a.data() + i * fan_out;
            double* prow = prev.a.data() + i * fan_in;
            for (size_t k = 0; k < fan_in; ++k) {
                const float* wrow = params.weights.data() + k * fan_out;
                double sum = 0.0;
                for (size_t j = 0; j < fan_out; ++j) sum += drow[j] * wrow[j];
                prow[k] = sum;
            }
        }
        const auto& mask = cache.masks[static_cast<size_t>(layer - 1)];
        const Matrix& pre = cache.pre_activation[static_cast<size_t>(layer - 1)];
        for (size_t i = 0; i < prev.size(); ++i) {
            double g = prev.a[i];
            if (!mask.empty()) g *= mask[i];
            prev.a[i] = pre.a[i] > 0.0 ? g : 0.0;
        }
        delta = std::move(prev);
    }
    return grads;
}

OptimizerState OptimizerState::zeros_like(const HeadModel& model) {
    OptimizerState state;
    for (int layer = 0; layer < kWeightedLayers; ++layer) {
        const LayerParams& p = model.layers[static_cast<size_t>(layer)];
        state.m_weights[static_cast<size_t>(layer)] =
            Matrix(static_cast<size_t>(p.fan_in), static_cast<size_t>(p.fan_out));
        state.v_weights[static_cast<size_t>(layer)] =
            Matrix(static_cast<size_t>(p.fan_in), static_cast<size_t>(p.fan_out));
        state.m_bias[static_cast<size_t>(layer)].assign(p.bias.size(), 0.0);
        state.v_bias[static_cast<size_t>(layer)].assign(p.bias.size(), 0.0);
    }
    return state;
}

namespace {

void check_finite_gradients(const Gradients& grads) {
    for (const auto& lg : grads.layers) {
        for (double g : lg.weights.a) {
            if (!std::isfinite(g)) throw NonFiniteGradient("non-finite weight gradient");
        }
        for (double g : lg.bias) {
            if (!std::isfinite(g)) throw NonFiniteGradient("non-finite bias gradient");
        }
    }
}

void adam_update(float& param, double grad, double& m, double& v, const OptimizerHyper& h,
                 double bc1, double bc2) {
    m = h.beta1 * m + (1.0 - h.beta1) * grad;
    v = h.beta2 * v + (1.0 - h.beta2) * grad * grad;
    const double m_hat = m / bc1;
    const double v_hat = v / bc2;
    param = static_cast<float>(param - h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon));
}

} // namespace

void optimizer_step(HeadModel& model, const Gradients& grads, OptimizerState& state,
                    const OptimizerHyper& hyper, int64_t t) {
    if (t < 1) throw ConfigError("optimizer step count must be >= 1");
    check_finite_gradients(grads);

    if (hyper.kind == OptimizerHyper::Kind::sgd) {
        for (int layer = 0; layer < kWeightedLayers; ++layer) {
            LayerParams& p = model.layers[static_cast<size_t>(layer)];
            const LayerGradients& lg = grads.layers[static_cast<size_t>(layer)];
            for (size_t i = 0; i < p.weights.size(); ++i) {
                p.weights[i] =
                    static_cast<float>(p.weights[i] - hyper.learning_rate * lg.weights.a[i]);
            }
            for (size_t i = 0; i < p.bias.size(); ++i) {
                p.bias[i] = static_cast<float>(p.bias[i] - hyper.learning_rate * lg.bias[i]);
            }
        }
        return;
    }

    const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));
    for (int layer = 0; layer < kWeightedLayers; ++layer) {
        LayerParams& p = model.layers[static_cast<size_t>(layer)];
        const LayerGradients& lg = grads.layers[static_cast<size_t>(layer)];
        auto& mw = state.m_weights[static_cast<size_t>(layer)];
        auto& vw = state.v_weights[static_cast<size_t>(layer)];
        for (size_t i = 0; i < p.weights.size(); ++i) {
            adam_update(p.weights[i], lg.weights.a[i], mw.a[i], vw.a[i], hyper, bc1, bc2);
        }
        auto& mb = state.m_bias[static_cast<size_t>(layer)];
        auto& vb = state.v_bias[static_cast<size_t>(layer)];
        for (size_t i = 0; i < p.bias.size(); ++i) {
            adam_update(p.bias[i], lg.bias[i], mb[i], vb[i], hyper, bc1, bc2);
        }
    }
}

// ---------------------------------------------------------------------------
// persistence
// ---------------------------------------------------------------------------

uint32_t crc32(const uint8_t* data, size_t size) {
    static const auto table = [] {
        std::array<uint32_t, 256> t{};
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    uint32_t crc = 0xffffffffu;
    for (size_t i = 0; i < size; ++i) {
        crc = table[(crc ^ data[i]) & 0xffu] ^ (crc >> 8);
    }
    return crc ^ 0xffffffffu;
}

namespace {

constexpr const char* kModelFormat = "actionsense-model";
constexpr int kModelVersion = 1;

std::string hex_u32(uint32_t v) {
    char buf[9];
    snprintf(buf, sizeof(buf), "%08x", v);
    return std::string(buf);
}

} // namespace

void save_model(const HeadModel& model, const std::filesystem::path& bundle_dir) {
    std::error_code ec;
    std::filesystem::create_directories(bundle_dir, ec);
    if (ec) throw IoError("cannot create bundle directory: " + bundle_dir.string());

    std::vector<uint8_t> blob;
    json tensors = json::array();
    for (int layer = 0; layer < kWeightedLayers; ++layer) {
        const LayerParams& p = model.layers[static_cast<size_t>(layer)];
        const auto append = [&](const std::string& name, const std::vector<float>& values,
                                std::vector<int64_t> shape) {
            json t{{"name", name}, {"shape", shape}, {"offset_bytes", blob.size()}};
            tensors.push_back(t);
            const size_t bytes = values.size() * sizeof(float);
            const size_t at = blob.size();
            blob.resize(at + bytes);
            std::memcpy(blob.data() + at, values.data(), bytes);
        };
        const std::string idx = std::to_string(layer + 1);
        append("W" + idx, p.weights, {p.fan_in, p.fan_out});
        append("b" + idx, p.bias, {p.fan_out});
    }

    const uint32_t checksum = crc32(blob.data(), blob.size());

    json doc{
        {"format", kModelFormat},
        {"version", kModelVersion},
        {"config",
         {{"input_dim", model.config.input_dim},
          {"hidden_widths", model.config.hidden_widths},
          {"output_dim", model.config.output_dim},
          {"dropout_rate", model.config.dropout_rate},
          {"seed", model.config.seed}}},
        {"vocabulary", model.vocabulary.labels()},
        {"backbone_name", model.backbone_name},
        {"norm_stats", {{"min", model.norm_stats.min}, {"max", model.norm_stats.max}}},
        {"tensors", tensors},
        {"weights_bytes", blob.size()},
        {"checksum_crc32", hex_u32(checksum)},
    };

    {
        std::ofstream out(bundle_dir / "weights.bin", std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + (bundle_dir / "weights.bin").string());
        out.write(reinterpret_cast<const char*>(blob.data()),
                  static_cast<std::streamsize>(blob.size()));
        if (!out) throw IoError("failed writing weights.bin");
    }
    {
        std::ofstream out(bundle_dir / "model.json", std::ios::trunc);
        if (!out) throw IoError("cannot write " + (bundle_dir / "model.json").string());
        out << doc.dump(2) << "\n";
        if (!out) throw IoError("failed writing model.json");
    }
}

HeadModel load_model(const std::filesystem::path& bundle_dir) {
    const auto json_path = bundle_dir / "model.json";
    std::ifstream in(json_path);
    if (!in) throw IoError("cannot open model bundle: " + json_path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError(json_path.string() + ": invalid JSON: " + e.what());
    }
    if (doc.value("format", "") != kModelFormat) {
        throw FormatError(json_path.string() + ": not an actionsense model bundle");
    }
    if (doc.value("version", 0) != kModelVersion) {
        throw FormatError(json_path.string() + ": unsupported bundle version");
    }

    HeadModel model;
    try {
        const json& cfg = doc.at("config");
        model.config.input_dim = cfg.at("input_dim").get<int>();
        const auto widths = cfg.at("hidden_widths").get<std::vector<int>>();
        if (widths.size() != kHiddenLayers) {
            throw FormatError(json_path.string() + ": expected 4 hidden widths");
        }
        std::copy(widths.begin(), widths.end(), model.config.hidden_widths.begin());
        model.config.output_dim = cfg.at("output_dim").get<int>();
        model.config.dropout_rate = cfg.at("dropout_rate").get<double>();
        model.config.seed = cfg.at("seed").get<uint64_t>();
        model.vocabulary = LabelVocabulary(doc.at("vocabulary").get<std::vector<std::string>>());
        model.backbone_name = doc.value("backbone_name", "");
        model.norm_stats.min = doc.at("norm_stats").at("min").get<std::vector<float>>();
        model.norm_stats.max = doc.at("norm_stats").at("max").get<std::vector<float>>();
    } catch (const json::exception& e) {
        throw FormatError(json_path.string() + ": malformed bundle: " + e.what());
    }
    model.config.validate();
    if (model.norm_stats.min.size() != model.norm_stats.max.size()) {
        throw FormatError(json_path.string() + ": norm stats min/max lengths differ");
    }

    const auto weights_path = bundle_dir / "weights.bin";
    std::ifstream win(weights_path, std::ios::binary);
    if (!win) throw IoError("cannot open " + weights_path.string());
    std::vector<uint8_t> blob((std::istreambuf_iterator<char>(win)),
                              std::istreambuf_iterator<char>());
    const size_t expected_bytes = doc.value("weights_bytes", size_t{0});
    if (blob.size() != expected_bytes) {
        throw FormatError(weights_path.string() + ": has " + std::to_string(blob.size()) +
                          " bytes, bundle declares " + std::to_string(expected_bytes));
    }
    const std::string declared_crc = doc.value("checksum_crc32", "");
    if (hex_u32(crc32(blob.data(), blob.size())) != declared_crc) {
        throw ChecksumError(weights_path.string() + ": checksum mismatch");
    }

    const std::vector<int> widths = model.config.layer_widths();
    size_t offset = 0;
    for (int layer = 0; layer < kWeightedLayers; ++layer) {
        LayerParams& p = model.layers[static_cast<size_t>(layer)];
        p.fan_in = widths[static_cast<size_t>(layer)];
        p.fan_out = widths[static_cast<size_t>(layer) + 1];
        const size_t w_count = static_cast<size_t>(p.fan_in) * static_cast<size_t>(p.fan_out);
        const size_t b_count = static_cast<size_t>(p.fan_out);
        if (offset + (w_count + b_count) * sizeof(float) > blob.size()) {
            throw FormatError(weights_path.string() + ": truncated weights blob");
        }
        p.weights.resize(w_count);
        std::memcpy(p.weights.data(), blob.data() + offset, w_count * sizeof(float));
        offset += w_count * sizeof(float);
        p.bias.resize(b_count);
        std::memcpy(p.bias.data(), blob.data() + offset, b_count * sizeof(float));
        offset += b_count * sizeof(float);
    }
    if (offset != blob.size()) {
        throw FormatError(weights_path.string() + ": unexpected trailing bytes");
    }
    return model;
}

} // namespace actionsense
