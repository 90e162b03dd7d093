#include "actionsense/backbone.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "actionsense/error.hpp"
#include "actionsense/onnx.hpp"

namespace actionsense {

using nlohmann::json;

std::string Preprocessing::describe() const {
    switch (kind) {
        case Kind::unit_interval: return "unit_interval";
        case Kind::symmetric_unit_interval: return "symmetric_unit_interval";
        case Kind::custom: {
            std::ostringstream out;
            out << "custom(mean=" << mean[0] << "," << mean[1] << "," << mean[2]
                << ";scale=" << scale[0] << "," << scale[1] << "," << scale[2] << ")";
            return out.str();
        }
    }
    return "unit_interval";
}

namespace {

void check_frame(const FrameTensor& frame) {
    const size_t expected = static_cast<size_t>(FrameTensor::height) * FrameTensor::width *
                            FrameTensor::channels;
    if (frame.values.size() != expected) {
        throw ShapeError("frame tensor has " + std::to_string(frame.values.size()) +
                         " values, expected " + std::to_string(expected));
    }
}

float preprocess_value(const Preprocessing& prep, float v, int channel) {
    switch (prep.kind) {
        case Preprocessing::Kind::unit_interval: return v;
        case Preprocessing::Kind::symmetric_unit_interval: return 2.0f * v - 1.0f;
        case Preprocessing::Kind::custom:
            return static_cast<float>((v - prep.mean[static_cast<size_t>(channel)]) /
                                      prep.scale[static_cast<size_t>(channel)]);
    }
    return v;
}

class StubBackbone final : public Backbone {
public:
    explicit StubBackbone(Preprocessing prep) : prep_(prep) {}

    FeatureVector extract(const FrameTensor& frame) const override {
        check_frame(frame);
        constexpr int kGrid = 7;
        constexpr int kCell = FrameTensor::width / kGrid; // 224/7 = 32
        FeatureVector out;
        out.video_id = frame.video_id;
        out.frame_index = frame.frame_index;
        out.values.assign(kGrid * kGrid * FrameTensor::channels, 0.0f);
        for (int gy = 0; gy < kGrid; ++gy) {
            for (int gx = 0; gx < kGrid; ++gx) {
                double sums[3] = {0.0, 0.0, 0.0};
                for (int y = gy * kCell; y < (gy + 1) * kCell; ++y) {
                    for (int x = gx * kCell; x < (gx + 1) * kCell; ++x) {
                        for (int c = 0; c < 3; ++c) {
                            sums[c] += preprocess_value(prep_, frame.at(y, x, c), c);
                        }
                    }
                }
                for (int c = 0; c < 3; ++c) {
                    out.values[static_cast<size_t>((gy * kGrid + gx) * 3 + c)] =
                        static_cast<float>(sums[c] / (kCell * kCell));
                }
            }
        }
        return out;
    }

    int64_t flat_length() const override { return kStubOutputShape.flat_length(); }
    const std::string& name() const override { return name_; }
    const Preprocessing& preprocessing() const override { return prep_; }

private:
    std::string name_ = "stub";
    Preprocessing prep_;
};

std::string shape_to_string(const std::vector<int64_t>& dims) {
    std::string out = "(";
    for (size_t i = 0; i < dims.size(); ++i) {
        if (i) out += ",";
        out += dims[i] < 0 ? "?" : std::to_string(dims[i]);
    }
    return out + ")";
}

class OnnxBackbone final : public Backbone {
public:
    OnnxBackbone(BackboneSpec spec, onnx::Model model)
        : spec_(std::move(spec)), model_(std::move(model)) {
        const auto inputs = model_.data_inputs();
        if (inputs.size() != 1) {
            throw ModelLoadError("backbone '" + spec_.name + "': model must have one data input");
        }
        verify_input_shape(inputs[0]);
        verify_output_shape(model_.outputs.at(0));
    }

    FeatureVector extract(const FrameTensor& frame) const override {
        check_frame(frame);
        onnx::Tensor input;
        constexpr int h = FrameTensor::height, w = FrameTensor::width, c = FrameTensor::channels;
        input.data.resize(static_cast<size_t>(h) * w * c);
        if (spec_.layout == TensorLayout::nhwc) {
            input.dims = {1, h, w, c};
            for (size_t i = 0; i < input.data.size(); ++i) {
                input.data[i] = preprocess_value(spec_.preprocessing, frame.values[i],
                                                 static_cast<int>(i % c));
            }
        } else {
            input.dims = {1, c, h, w};
            for (int ch = 0; ch < c; ++ch) {
                for (int y = 0; y < h; ++y) {
                    for (int x = 0; x < w; ++x) {
                        input.data[(static_cast<size_t>(ch) * h + y) * w + x] =
                            preprocess_value(spec_.preprocessing, frame.at(y, x, ch), ch);
                    }
                }
            }
        }
        onnx::Tensor output = onnx::evaluate(model_, input);
        if (static_cast<int64_t>(output.data.size()) != flat_length()) {
            throw InferenceError("backbone '" + spec_.name + "' produced " +
                                 std::to_string(output.data.size()) + " values, declared " +
                                 std::to_string(flat_length()));
        }
        FeatureVector out;
        out.video_id = frame.video_id;
        out.frame_index = frame.frame_index;
        out.values = std::move(output.data);
        for (float v : out.values) {
            if (!std::isfinite(v)) {
                throw InferenceError("backbone '" + spec_.name + "' produced non-finite values");
            }
        }
        return out;
    }

    int64_t flat_length() const override { return spec_.declared_output_shape.flat_length(); }
    const std::string& name() const override { return spec_.name; }
    const Preprocessing& preprocessing() const override { return spec_.preprocessing; }

private:
    void verify_input_shape(const onnx::ValueInfo& input) const {
        if (input.dims.size() != 4) {
            throw ShapeMismatch("backbone '" + spec_.name + "': model input is " +
                                shape_to_string(input.dims) + ", expected a 4-D 224x224x3 tensor");
        }
        // batch dim may be symbolic; treat it as 1
        const int64_t d1 = input.dims[1], d2 = input.dims[2], d3 = input.dims[3];
        const bool ok = spec_.layout == TensorLayout::nhwc ? (d1 == 224 && d2 == 224 && d3 == 3)
                                                           : (d1 == 3 && d2 == 224 && d3 == 224);
        if (!ok) {
            throw ShapeMismatch("backbone '" + spec_.name + "': model input " +
                                shape_to_string(input.dims) + " does not match the declared " +
                                (spec_.layout == TensorLayout::nhwc ? "(1,224,224,3)"
                                                                    : "(1,3,224,224)") +
                                " layout");
        }
    }

    void verify_output_shape(const onnx::ValueInfo& output) const {
        int64_t flat = 1;
        bool static_shape = !output.dims.empty();
        for (size_t i = 0; i < output.dims.size(); ++i) {
            if (i == 0 && output.dims[i] <= 0) continue; // symbolic batch
            if (output.dims[i] <= 0) {
                static_shape = false;
                break;
            }
            flat *= output.dims[i];
        }
        if (!static_shape) {
            throw ModelLoadError("backbone '" + spec_.name + "': model output shape " +
                                 shape_to_string(output.dims) + " is not static");
        }
        const int64_t declared = spec_.declared_output_shape.flat_length();
        if (flat != declared) {
            throw ShapeMismatch(
                "backbone '" + spec_.name + "': declared output (" +
                std::to_string(spec_.declared_output_shape.h) + "," +
                std::to_string(spec_.declared_output_shape.w) + "," +
                std::to_string(spec_.declared_output_shape.c) + ") flattens to " +
                std::to_string(declared) + " but the model emits " + shape_to_string(output.dims) +
                " = " + std::to_string(flat) + " values");
        }
    }

    BackboneSpec spec_;
    onnx::Model model_;
};

} // namespace

std::unique_ptr<Backbone> load_backbone(const BackboneSpec& spec) {
    if (spec.name == "stub") {
        const OutputShape& d = spec.declared_output_shape;
        const bool declared_ok = (d.h == 0 && d.w == 0 && d.c == 0) ||
                                 (d.h == kStubOutputShape.h && d.w == kStubOutputShape.w &&
                                  d.c == kStubOutputShape.c);
        if (!declared_ok) {
            throw ShapeMismatch("backbone 'stub' emits (7,7,3); declared (" +
                                std::to_string(d.h) + "," + std::to_string(d.w) + "," +
                                std::to_string(d.c) + ")");
        }
        return std::make_unique<StubBackbone>(spec.preprocessing);
    }
    if (!spec.model_path) {
        throw ModelLoadError("backbone '" + spec.name + "' has no model_path configured");
    }
    if (spec.declared_output_shape.flat_length() <= 0) {
        throw ValidationError("backbone '" + spec.name + "' declares a non-positive output shape");
    }
    onnx::Model model = onnx::load_model_file(*spec.model_path);
    return std::make_unique<OnnxBackbone>(spec, std::move(model));
}

NormStats fit_feature_normalizer(const std::vector<FeatureVector>& train_features) {
    if (train_features.empty()) {
        throw EmptySet("cannot fit a feature normalizer on an empty training set");
    }
    const size_t dim = train_features.front().values.size();
    NormStats stats;
    stats.min = train_features.front().values;
    stats.max = train_features.front().values;
    for (const auto& feature : train_features) {
        if (feature.values.size() != dim) {
            throw DimensionMismatch("feature dimension " + std::to_string(feature.values.size()) +
                                    " differs from " + std::to_string(dim));
        }
        for (size_t d = 0; d < dim; ++d) {
            stats.min[d] = std::min(stats.min[d], feature.values[d]);
            stats.max[d] = std::max(stats.max[d], feature.values[d]);
        }
    }
    return stats;
}

void apply_feature_normalizer_in_place(const NormStats& stats, std::span<float> values) {
    if (values.size() != stats.dimension()) {
        throw DimensionMismatch("feature dimension " + std::to_string(values.size()) +
                                " does not match normalizer dimension " +
                                std::to_string(stats.dimension()));
    }
    for (size_t d = 0; d < values.size(); ++d) {
        const float range = stats.max[d] - stats.min[d];
        values[d] = range > 0.0f ? (values[d] - stats.min[d]) / range : 0.0f;
    }
}

FeatureVector apply_feature_normalizer(const NormStats& stats, const FeatureVector& feature) {
    FeatureVector out = feature;
    apply_feature_normalizer_in_place(stats, out.values);
    return out;
}

namespace {

Preprocessing parse_preprocessing(const json& value, const std::string& name) {
    Preprocessing prep;
    if (value.is_string()) {
        const std::string s = value.get<std::string>();
        if (s == "unit_interval") {
            prep.kind = Preprocessing::Kind::unit_interval;
        } else if (s == "symmetric_unit_interval") {
            prep.kind = Preprocessing::Kind::symmetric_unit_interval;
        } else {
            throw ValidationError("backbone '" + name + "': unknown preprocessing '" + s + "'");
        }
        return prep;
    }
    if (value.is_object() && value.contains("mean") && value.contains("scale")) {
        prep.kind = Preprocessing::Kind::custom;
        const auto mean = value["mean"].get<std::vector<double>>();
        const auto scale = value["scale"].get<std::vector<double>>();
        if (mean.size() != 3 || scale.size() != 3) {
            throw ValidationError("backbone '" + name +
                                  "': custom preprocessing needs 3 means and 3 scales");
        }
        for (int c = 0; c < 3; ++c) {
            if (scale[static_cast<size_t>(c)] == 0.0) {
                throw ValidationError("backbone '" + name + "': zero preprocessing scale");
            }
            prep.mean[static_cast<size_t>(c)] = mean[static_cast<size_t>(c)];
            prep.scale[static_cast<size_t>(c)] = scale[static_cast<size_t>(c)];
        }
        return prep;
    }
    throw ValidationError("backbone '" + name + "': malformed preprocessing entry");
}

} // namespace

BackboneSpec resolve_backbone_spec(const std::string& name,
                                   const std::optional<std::filesystem::path>& registry_path) {
    if (name == "stub") {
        BackboneSpec spec;
        spec.name = "stub";
        spec.declared_output_shape = kStubOutputShape;
        return spec;
    }
    if (!registry_path) {
        throw ValidationError("backbone '" + name +
                              "' needs a registry file (--registry) mapping it to a model");
    }
    std::ifstream in(*registry_path);
    if (!in) throw IoError("cannot open backbone registry: " + registry_path->string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(registry_path->string() + ": invalid JSON: " + e.what());
    }
    if (!doc.contains("backbones") || !doc["backbones"].is_object()) {
        throw ParseError(registry_path->string() + ": missing 'backbones' object");
    }
    const auto& entries = doc["backbones"];
    if (!entries.contains(name)) {
        throw ValidationError("backbone '" + name + "' not found in registry " +
                              registry_path->string());
    }
    const auto& entry = entries[name];
    BackboneSpec spec;
    spec.name = name;
    if (!entry.contains("model_path") || !entry["model_path"].is_string()) {
        throw ParseError(registry_path->string() + ": backbone '" + name +
                         "' is missing 'model_path'");
    }
    std::filesystem::path model_path = entry["model_path"].get<std::string>();
    if (model_path.is_relative()) model_path = registry_path->parent_path() / model_path;
    spec.model_path = model_path;
    const std::string layout = entry.value("layout", "nhwc");
    if (layout == "nhwc") {
        spec.layout = TensorLayout::nhwc;
    } else if (layout == "nchw") {
        spec.layout = TensorLayout::nchw;
    } else {
        throw ValidationError("backbone '" + name + "': unknown layout '" + layout + "'");
    }
    if (!entry.contains("declared_output_shape") || !entry["declared_output_shape"].is_array() ||
        entry["declared_output_shape"].size() != 3) {
        throw ParseError(registry_path->string() + ": backbone '" + name +
                         "' needs declared_output_shape [h,w,c]");
    }
    spec.declared_output_shape.h = entry["declared_output_shape"][0].get<int>();
    spec.declared_output_shape.w = entry["declared_output_shape"][1].get<int>();
    spec.declared_output_shape.c = entry["declared_output_shape"][2].get<int>();
    if (entry.contains("preprocessing")) {
        spec.preprocessing = parse_preprocessing(entry["preprocessing"], name);
    }
    return spec;
}

} // namespace actionsense
