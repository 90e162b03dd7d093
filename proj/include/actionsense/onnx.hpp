#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace actionsense::onnx {

struct Tensor {
    std::string name;
    std::vector<int64_t> dims;
    std::vector<float> data;

    int64_t element_count() const {
        int64_t n = 1;
        for (int64_t d : dims) n *= d;
        return n;
    }
};

struct Attribute {
    std::string name;
    int64_t i = 0;
    float f = 0.0f;
    std::string s;
    std::vector<int64_t> ints;
    std::vector<float> floats;
};

struct Node {
    std::string op_type;
    std::string name;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::vector<Attribute> attributes;

    const Attribute* find_attribute(const std::string& attr_name) const;
};

// dims use -1 for symbolic dimensions (dim_param)
struct ValueInfo {
    std::string name;
    std::vector<int64_t> dims;
};

struct Model {
    std::vector<Node> nodes;
    std::vector<Tensor> initializers;
    std::vector<ValueInfo> inputs;
    std::vector<ValueInfo> outputs;

    // graph inputs that are not initializers, i.e. the ones callers feed
    std::vector<ValueInfo> data_inputs() const;
    const Tensor* find_initializer(const std::string& name) const;
};

// Minimal protobuf wire-format reader covering the message fields this
// toolkit needs: graph inputs/outputs with static shapes, initializers,
// nodes and their attributes. Throws ModelLoadError on malformed bytes.
Model parse_model(const uint8_t* data, size_t size);
Model load_model_file(const std::filesystem::path& path);

// Reference evaluator for a small operator subset (Relu, Reshape, Flatten,
// Transpose, MatMul, Add, Mul, AveragePool, GlobalAveragePool, Concat).
// Full convolutional backbones need an external runtime and raise
// InferenceError on the first unsupported operator.
Tensor evaluate(const Model& model, const Tensor& input);

bool op_supported(const std::string& op_type);

} // namespace actionsense::onnx
