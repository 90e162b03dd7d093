#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "actionsense/framepipe.hpp"

namespace actionsense {

// How frame values in [0,1] are conditioned before entering a backbone.
struct Preprocessing {
    enum class Kind { unit_interval, symmetric_unit_interval, custom };
    Kind kind = Kind::unit_interval;
    std::array<double, 3> mean = {0.0, 0.0, 0.0};  // custom only
    std::array<double, 3> scale = {1.0, 1.0, 1.0}; // custom only

    std::string describe() const; // stable string, used as a cache key
    bool operator==(const Preprocessing&) const = default;
};

enum class TensorLayout { nhwc, nchw };

struct OutputShape {
    int h = 0;
    int w = 0;
    int c = 0;
    int64_t flat_length() const { return static_cast<int64_t>(h) * w * c; }
};

struct BackboneSpec {
    std::string name;
    std::optional<std::filesystem::path> model_path;
    OutputShape declared_output_shape;
    TensorLayout layout = TensorLayout::nhwc;
    Preprocessing preprocessing;
};

// A flattened backbone activation with its provenance.
struct FeatureVector {
    std::vector<float> values;
    std::string video_id;
    int64_t frame_index = 0;
    std::optional<int> label_index;
};

// Fixed feature extractor; handles are immutable and safe to share across threads.
class Backbone {
public:
    virtual ~Backbone() = default;
    virtual FeatureVector extract(const FrameTensor& frame) const = 0;
    virtual int64_t flat_length() const = 0;
    virtual const std::string& name() const = 0;
    virtual const Preprocessing& preprocessing() const = 0;
};

// The built-in deterministic extractor: 7x7 per-channel block-mean pooling,
// declared shape (7,7,3), flat length 147. Lets the whole pipeline run and
// be tested with no model files.
constexpr OutputShape kStubOutputShape{7, 7, 3};

std::unique_ptr<Backbone> load_backbone(const BackboneSpec& spec);

// Per-dimension min/max over the training split; the second normalization stage.
struct NormStats {
    std::vector<float> min;
    std::vector<float> max;
    size_t dimension() const { return min.size(); }
};

NormStats fit_feature_normalizer(const std::vector<FeatureVector>& train_features);

// (x - min) / (max - min); constant dimensions map to 0; out-of-range values
// are not clamped, keeping the transform affine.
FeatureVector apply_feature_normalizer(const NormStats& stats, const FeatureVector& feature);
void apply_feature_normalizer_in_place(const NormStats& stats, std::span<float> values);

// Registry file: JSON mapping backbone name -> {model_path, layout,
// declared_output_shape, preprocessing}. The stub needs no entry.
BackboneSpec resolve_backbone_spec(const std::string& name,
                                   const std::optional<std::filesystem::path>& registry_path);

} // namespace actionsense
