#include "actionsense/onnx.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

#include "actionsense/error.hpp"

namespace actionsense::onnx {

namespace {

// ---------------------------------------------------------------------------
// protobuf wire format
// ---------------------------------------------------------------------------

enum WireType : uint32_t { kVarint = 0, kFixed64 = 1, kLengthDelimited = 2, kFixed32 = 5 };

class Reader {
public:
    Reader(const uint8_t* data, size_t size) : p_(data), end_(data + size) {}

    bool done() const { return p_ >= end_; }

    uint64_t varint() {
        uint64_t value = 0;
        int shift = 0;
        while (true) {
            if (p_ >= end_) throw ModelLoadError("onnx: truncated varint");
            const uint8_t byte = *p_++;
            if (shift < 64) value |= static_cast<uint64_t>(byte & 0x7f) << shift;
            if ((byte & 0x80) == 0) return value;
            shift += 7;
            if (shift > 70) throw ModelLoadError("onnx: varint too long");
        }
    }

    uint32_t fixed32() {
        if (end_ - p_ < 4) throw ModelLoadError("onnx: truncated fixed32");
        uint32_t v;
        std::memcpy(&v, p_, 4);
        p_ += 4;
        return v;
    }

    uint64_t fixed64() {
        if (end_ - p_ < 8) throw ModelLoadError("onnx: truncated fixed64");
        uint64_t v;
        std::memcpy(&v, p_, 8);
        p_ += 8;
        return v;
    }

    Reader sub_message() {
        const uint64_t len = varint();
        if (static_cast<uint64_t>(end_ - p_) < len) {
            throw ModelLoadError("onnx: truncated length-delimited field");
        }
        Reader sub(p_, static_cast<size_t>(len));
        p_ += len;
        return sub;
    }

    std::string bytes() {
        Reader sub = sub_message();
        return std::string(reinterpret_cast<const char*>(sub.p_),
                           static_cast<size_t>(sub.end_ - sub.p_));
    }

    struct Tag {
        uint32_t field;
        uint32_t wire;
    };

    Tag tag() {
        const uint64_t key = varint();
        return Tag{static_cast<uint32_t>(key >> 3), static_cast<uint32_t>(key & 7)};
    }

    void skip(uint32_t wire) {
        switch (wire) {
            case kVarint: varint(); return;
            case kFixed64: fixed64(); return;
            case kLengthDelimited: sub_message(); return;
            case kFixed32: fixed32(); return;
            default: throw ModelLoadError("onnx: unknown wire type " + std::to_string(wire));
        }
    }

    const uint8_t* raw() const { return p_; }
    size_t remaining() const { return static_cast<size_t>(end_ - p_); }

private:
    const uint8_t* p_;
    const uint8_t* end_;
};

int64_t as_int64(uint64_t raw) { return static_cast<int64_t>(raw); }

// repeated int64 fields may arrive packed or one tag per element
void read_int64s(Reader& msg, const Reader::Tag& t, std::vector<int64_t>& out) {
    if (t.wire == kLengthDelimited) {
        Reader sub = msg.sub_message();
        while (!sub.done()) out.push_back(as_int64(sub.varint()));
    } else {
        out.push_back(as_int64(msg.varint()));
    }
}

std::vector<int64_t> parse_tensor_shape(Reader shape) {
    std::vector<int64_t> dims;
    while (!shape.done()) {
        const auto t = shape.tag();
        if (t.field == 1 && t.wire == kLengthDelimited) { // Dimension
            Reader dim = shape.sub_message();
            int64_t value = -1;
            while (!dim.done()) {
                const auto dt = dim.tag();
                if (dt.field == 1 && dt.wire == kVarint) {
                    value = as_int64(dim.varint()); // dim_value
                } else if (dt.field == 2 && dt.wire == kLengthDelimited) {
                    dim.bytes(); // dim_param: symbolic, keep -1
                } else {
                    dim.skip(dt.wire);
                }
            }
            dims.push_back(value);
        } else {
            shape.skip(t.wire);
        }
    }
    return dims;
}

ValueInfo parse_value_info(Reader msg) {
    ValueInfo info;
    while (!msg.done()) {
        const auto t = msg.tag();
        if (t.field == 1 && t.wire == kLengthDelimited) {
            info.name = msg.bytes();
        } else if (t.field == 2 && t.wire == kLengthDelimited) { // TypeProto
            Reader type = msg.sub_message();
            while (!type.done()) {
                const auto tt = type.tag();
                if (tt.field == 1 && tt.wire == kLengthDelimited) { // tensor_type
                    Reader tensor = type.sub_message();
                    while (!tensor.done()) {
                        const auto ot = tensor.tag();
                        if (ot.field == 2 && ot.wire == kLengthDelimited) { // shape
                            info.dims = parse_tensor_shape(tensor.sub_message());
                        } else {
                            tensor.skip(ot.wire);
                        }
                    }
                } else {
                    type.skip(tt.wire);
                }
            }
        } else {
            msg.skip(t.wire);
        }
    }
    return info;
}

Tensor parse_tensor(Reader msg) {
    Tensor tensor;
    int64_t data_type = 0;
    std::string raw_data;
    std::vector<int64_t> int64_data;
    while (!msg.done()) {
        const auto t = msg.tag();
        switch (t.field) {
            case 1: read_int64s(msg, t, tensor.dims); break;
            case 2: data_type = as_int64(msg.varint()); break;
            case 4: { // float_data, packed
                if (t.wire == kLengthDelimited) {
                    Reader sub = msg.sub_message();
                    while (!sub.done()) {
                        const uint32_t bits = sub.fixed32();
                        float f;
                        std::memcpy(&f, &bits, 4);
                        tensor.data.push_back(f);
                    }
                } else {
                    const uint32_t bits = msg.fixed32();
                    float f;
                    std::memcpy(&f, &bits, 4);
                    tensor.data.push_back(f);
                }
                break;
            }
            case 7: read_int64s(msg, t, int64_data); break; // int64_data
            case 8: tensor.name = msg.bytes(); break;
            case 9: raw_data = msg.bytes(); break;
            default: msg.skip(t.wire); break;
        }
    }
    // float32 tensors carry weights; int64 tensors carry shape operands
    if (data_type == 1) {
        if (!raw_data.empty()) {
            if (raw_data.size() % 4 != 0) {
                throw ModelLoadError("onnx: initializer '" + tensor.name +
                                     "' raw data not float32");
            }
            tensor.data.resize(raw_data.size() / 4);
            std::memcpy(tensor.data.data(), raw_data.data(), raw_data.size());
        }
    } else if (data_type == 7) {
        if (!raw_data.empty()) {
            if (raw_data.size() % 8 != 0) {
                throw ModelLoadError("onnx: initializer '" + tensor.name +
                                     "' raw data not int64");
            }
            int64_data.resize(raw_data.size() / 8);
            std::memcpy(int64_data.data(), raw_data.data(), raw_data.size());
        }
        tensor.data.reserve(int64_data.size());
        for (int64_t v : int64_data) tensor.data.push_back(static_cast<float>(v));
    } else {
        throw ModelLoadError("onnx: initializer '" + tensor.name + "' has unsupported data type " +
                             std::to_string(data_type) + " (float32 and int64 are handled)");
    }
    if (tensor.element_count() != static_cast<int64_t>(tensor.data.size())) {
        throw ModelLoadError("onnx: initializer '" + tensor.name + "' dims say " +
                             std::to_string(tensor.element_count()) + " elements, data has " +
                             std::to_string(tensor.data.size()));
    }
    return tensor;
}

Attribute parse_attribute(Reader msg) {
    Attribute attr;
    while (!msg.done()) {
        const auto t = msg.tag();
        switch (t.field) {
            case 1: attr.name = msg.bytes(); break;
            case 2: {
                const uint32_t bits = msg.fixed32();
                std::memcpy(&attr.f, &bits, 4);
                break;
            }
            case 3: attr.i = as_int64(msg.varint()); break;
            case 4: attr.s = msg.bytes(); break;
            case 6: { // floats
                if (t.wire == kLengthDelimited) {
                    Reader sub = msg.sub_message();
                    while (!sub.done()) {
                        const uint32_t bits = sub.fixed32();
                        float f;
                        std::memcpy(&f, &bits, 4);
                        attr.floats.push_back(f);
                    }
                } else {
                    const uint32_t bits = msg.fixed32();
                    float f;
                    std::memcpy(&f, &bits, 4);
                    attr.floats.push_back(f);
                }
                break;
            }
            case 7: read_int64s(msg, t, attr.ints); break;
            default: msg.skip(t.wire); break;
        }
    }
    return attr;
}

Node parse_node(Reader msg) {
    Node node;
    while (!msg.done()) {
        const auto t = msg.tag();
        switch (t.field) {
            case 1: node.inputs.push_back(msg.bytes()); break;
            case 2: node.outputs.push_back(msg.bytes()); break;
            case 3: node.name = msg.bytes(); break;
            case 4: node.op_type = msg.bytes(); break;
            case 5: node.attributes.push_back(parse_attribute(msg.sub_message())); break;
            default: msg.skip(t.wire); break;
        }
    }
    return node;
}

Model parse_graph(Reader msg) {
    Model model;
    while (!msg.done()) {
        const auto t = msg.tag();
        switch (t.field) {
            case 1: model.nodes.push_back(parse_node(msg.sub_message())); break;
            case 5: model.initializers.push_back(parse_tensor(msg.sub_message())); break;
            case 11: model.inputs.push_back(parse_value_info(msg.sub_message())); break;
            case 12: model.outputs.push_back(parse_value_info(msg.sub_message())); break;
            default: msg.skip(t.wire); break;
        }
    }
    return model;
}

} // namespace

const Attribute* Node::find_attribute(const std::string& attr_name) const {
    for (const auto& attr : attributes) {
        if (attr.name == attr_name) return &attr;
    }
    return nullptr;
}

std::vector<ValueInfo> Model::data_inputs() const {
    std::set<std::string> init_names;
    for (const auto& t : initializers) init_names.insert(t.name);
    std::vector<ValueInfo> out;
    for (const auto& vi : inputs) {
        if (!init_names.count(vi.name)) out.push_back(vi);
    }
    return out;
}

const Tensor* Model::find_initializer(const std::string& name) const {
    for (const auto& t : initializers) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

Model parse_model(const uint8_t* data, size_t size) {
    Reader reader(data, size);
    bool saw_graph = false;
    Model model;
    while (!reader.done()) {
        const auto t = reader.tag();
        if (t.field == 7 && t.wire == kLengthDelimited) { // ModelProto.graph
            model = parse_graph(reader.sub_message());
            saw_graph = true;
        } else {
            reader.skip(t.wire);
        }
    }
    if (!saw_graph) throw ModelLoadError("onnx: file contains no graph");
    if (model.outputs.empty()) throw ModelLoadError("onnx: graph declares no outputs");
    return model;
}

Model load_model_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelLoadError("cannot open model file: " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    if (bytes.empty()) throw ModelLoadError("model file is empty: " + path.string());
    try {
        return parse_model(bytes.data(), bytes.size());
    } catch (const ModelLoadError& e) {
        throw ModelLoadError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// evaluator
// ---------------------------------------------------------------------------

namespace {

using TensorMap = std::map<std::string, Tensor>;

const Tensor& lookup(const TensorMap& values, const std::string& name, const Node& node) {
    auto it = values.find(name);
    if (it == values.end()) {
        throw InferenceError("onnx: node '" + node.op_type + "' needs undefined tensor '" + name +
                             "'");
    }
    return it->second;
}

std::vector<int64_t> resolve_reshape(const std::vector<int64_t>& requested, int64_t total) {
    std::vector<int64_t> dims = requested;
    int64_t known = 1;
    int wildcard = -1;
    for (size_t i = 0; i < dims.size(); ++i) {
        if (dims[i] == -1) {
            if (wildcard >= 0) throw InferenceError("onnx: Reshape with multiple -1 dims");
            wildcard = static_cast<int>(i);
        } else if (dims[i] == 0) {
            throw InferenceError("onnx: Reshape dim 0 (copy-input) is not supported");
        } else {
            known *= dims[i];
        }
    }
    if (wildcard >= 0) {
        if (known == 0 || total % known != 0) {
            throw InferenceError("onnx: Reshape cannot infer -1 dimension");
        }
        dims[static_cast<size_t>(wildcard)] = total / known;
    }
    int64_t product = 1;
    for (int64_t d : dims) product *= d;
    if (product != total) {
        throw InferenceError("onnx: Reshape changes element count from " + std::to_string(total) +
                             " to " + std::to_string(product));
    }
    return dims;
}

Tensor eval_matmul(const Tensor& a, const Tensor& b) {
    if (a.dims.size() != 2 || b.dims.size() != 2 || a.dims[1] != b.dims[0]) {
        throw InferenceError("onnx: MatMul supports 2-D operands with matching inner dims");
    }
    const int64_t m = a.dims[0], k = a.dims[1], n = b.dims[1];
    Tensor out;
    out.dims = {m, n};
    out.data.assign(static_cast<size_t>(m * n), 0.0f);
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t kk = 0; kk < k; ++kk) {
            const float av = a.data[static_cast<size_t>(i * k + kk)];
            if (av == 0.0f) continue;
            const size_t brow = static_cast<size_t>(kk * n);
            const size_t orow = static_cast<size_t>(i * n);
            for (int64_t j = 0; j < n; ++j) {
                out.data[orow + j] += av * b.data[brow + j];
            }
        }
    }
    return out;
}

Tensor eval_elementwise(const Tensor& a, const Tensor& b, bool add) {
    Tensor out;
    out.dims = a.dims;
    out.data.resize(a.data.size());
    if (a.dims == b.dims) {
        for (size_t i = 0; i < a.data.size(); ++i) {
            out.data[i] = add ? a.data[i] + b.data[i] : a.data[i] * b.data[i];
        }
        return out;
    }
    // bias broadcast: b matches the trailing dimension of a
    const int64_t last = a.dims.empty() ? 0 : a.dims.back();
    if (static_cast<int64_t>(b.data.size()) == last && last > 0) {
        for (size_t i = 0; i < a.data.size(); ++i) {
            const float bv = b.data[i % static_cast<size_t>(last)];
            out.data[i] = add ? a.data[i] + bv : a.data[i] * bv;
        }
        return out;
    }
    if (b.data.size() == 1) {
        for (size_t i = 0; i < a.data.size(); ++i) {
            out.data[i] = add ? a.data[i] + b.data[0] : a.data[i] * b.data[0];
        }
        return out;
    }
    throw InferenceError("onnx: unsupported broadcast in elementwise op");
}

Tensor eval_average_pool(const Tensor& input, const Node& node, bool global) {
    if (input.dims.size() != 4) {
        throw InferenceError("onnx: pooling expects a 4-D NCHW tensor");
    }
    const int64_t n = input.dims[0], c = input.dims[1], h = input.dims[2], w = input.dims[3];
    int64_t kh = h, kw = w, sh = 1, sw = 1;
    if (!global) {
        const Attribute* kernel = node.find_attribute("kernel_shape");
        if (!kernel || kernel->ints.size() != 2) {
            throw InferenceError("onnx: AveragePool needs a 2-D kernel_shape");
        }
        kh = kernel->ints[0];
        kw = kernel->ints[1];
        sh = kh;
        sw = kw;
        if (const Attribute* strides = node.find_attribute("strides");
            strides && strides->ints.size() == 2) {
            sh = strides->ints[0];
            sw = strides->ints[1];
        }
        if (const Attribute* pads = node.find_attribute("pads")) {
            for (int64_t p : pads->ints) {
                if (p != 0) throw InferenceError("onnx: padded pooling is not supported");
            }
        }
    } else {
        sh = kh;
        sw = kw;
    }
    if (kh <= 0 || kw <= 0 || sh <= 0 || sw <= 0 || kh > h || kw > w) {
        throw InferenceError("onnx: pooling kernel does not fit input");
    }
    const int64_t oh = (h - kh) / sh + 1;
    const int64_t ow = (w - kw) / sw + 1;
    Tensor out;
    out.dims = {n, c, oh, ow};
    out.data.resize(static_cast<size_t>(n * c * oh * ow));
    const double inv = 1.0 / static_cast<double>(kh * kw);
    for (int64_t in = 0; in < n; ++in) {
        for (int64_t ic = 0; ic < c; ++ic) {
            const size_t plane = static_cast<size_t>((in * c + ic) * h * w);
            for (int64_t oy = 0; oy < oh; ++oy) {
                for (int64_t ox = 0; ox < ow; ++ox) {
                    double sum = 0.0;
                    for (int64_t ky = 0; ky < kh; ++ky) {
                        const size_t row = plane + static_cast<size_t>((oy * sh + ky) * w);
                        for (int64_t kx = 0; kx < kw; ++kx) {
                            sum += input.data[row + static_cast<size_t>(ox * sw + kx)];
                        }
                    }
                    out.data[static_cast<size_t>(((in * c + ic) * oh + oy) * ow + ox)] =
                        static_cast<float>(sum * inv);
                }
            }
        }
    }
    return out;
}

Tensor eval_transpose(const Tensor& input, const Node& node) {
    const size_t rank = input.dims.size();
    if (rank == 0) return input;
    std::vector<int64_t> perm;
    if (const Attribute* attr = node.find_attribute("perm")) {
        perm = attr->ints;
    } else {
        for (size_t i = 0; i < rank; ++i) perm.push_back(static_cast<int64_t>(rank - 1 - i));
    }
    if (perm.size() != rank) throw InferenceError("onnx: Transpose perm rank mismatch");
    Tensor out;
    out.dims.resize(rank);
    for (size_t i = 0; i < rank; ++i) out.dims[i] = input.dims[static_cast<size_t>(perm[i])];
    out.data.resize(input.data.size());

    std::vector<int64_t> in_strides(rank, 1), out_strides(rank, 1);
    for (size_t i = rank - 1; i > 0; --i) {
        in_strides[i - 1] = in_strides[i] * input.dims[i];
        out_strides[i - 1] = out_strides[i] * out.dims[i];
    }
    std::vector<int64_t> idx(rank, 0);
    for (size_t flat = 0; flat < out.data.size(); ++flat) {
        int64_t rem = static_cast<int64_t>(flat);
        size_t src = 0;
        for (size_t i = 0; i < rank; ++i) {
            const int64_t coord = rem / out_strides[i];
            rem %= out_strides[i];
            src += static_cast<size_t>(coord * in_strides[static_cast<size_t>(perm[i])]);
        }
        out.data[flat] = input.data[src];
    }
    return out;
}

Tensor eval_concat(const std::vector<const Tensor*>& parts, const Node& node) {
    const Attribute* axis_attr = node.find_attribute("axis");
    if (!axis_attr || parts.empty()) throw InferenceError("onnx: Concat needs an axis");
    const size_t rank = parts[0]->dims.size();
    int64_t axis = axis_attr->i;
    if (axis < 0) axis += static_cast<int64_t>(rank);
    if (axis < 0 || axis >= static_cast<int64_t>(rank)) {
        throw InferenceError("onnx: Concat axis out of range");
    }
    Tensor out;
    out.dims = parts[0]->dims;
    out.dims[static_cast<size_t>(axis)] = 0;
    for (const Tensor* part : parts) {
        if (part->dims.size() != rank) throw InferenceError("onnx: Concat rank mismatch");
        out.dims[static_cast<size_t>(axis)] += part->dims[static_cast<size_t>(axis)];
    }
    int64_t outer = 1, inner = 1;
    for (int64_t i = 0; i < axis; ++i) outer *= out.dims[static_cast<size_t>(i)];
    for (size_t i = static_cast<size_t>(axis) + 1; i < rank; ++i) inner *= out.dims[i];
    out.data.resize(static_cast<size_t>(outer) * static_cast<size_t>(out.dims[(size_t)axis]) *
                    static_cast<size_t>(inner));
    size_t dst = 0;
    for (int64_t o = 0; o < outer; ++o) {
        for (const Tensor* part : parts) {
            const int64_t span = part->dims[static_cast<size_t>(axis)] * inner;
            const size_t src = static_cast<size_t>(o * span);
            std::copy_n(part->data.begin() + static_cast<int64_t>(src), span,
                        out.data.begin() + static_cast<int64_t>(dst));
            dst += static_cast<size_t>(span);
        }
    }
    return out;
}

} // namespace

bool op_supported(const std::string& op_type) {
    static const std::set<std::string> kOps = {
        "Relu",     "Reshape",           "Flatten", "Transpose", "MatMul",
        "Add",      "Mul",               "AveragePool", "GlobalAveragePool", "Concat",
        "Identity",
    };
    return kOps.count(op_type) > 0;
}

Tensor evaluate(const Model& model, const Tensor& input) {
    const auto data_inputs = model.data_inputs();
    if (data_inputs.size() != 1) {
        throw InferenceError("onnx: expected exactly one data input, model has " +
                             std::to_string(data_inputs.size()));
    }
    TensorMap values;
    for (const auto& init : model.initializers) values[init.name] = init;
    values[data_inputs[0].name] = input;

    for (const auto& node : model.nodes) {
        if (!op_supported(node.op_type)) {
            throw InferenceError("onnx: unsupported operator '" + node.op_type +
                                 "' — models beyond the built-in subset need an external runtime");
        }
        if (node.outputs.empty()) continue;
        Tensor result;
        if (node.op_type == "Relu") {
            const Tensor& x = lookup(values, node.inputs.at(0), node);
            result = x;
            for (float& v : result.data) v = std::max(v, 0.0f);
        } else if (node.op_type == "Identity") {
            result = lookup(values, node.inputs.at(0), node);
        } else if (node.op_type == "Reshape") {
            const Tensor& x = lookup(values, node.inputs.at(0), node);
            const Tensor& shape = lookup(values, node.inputs.at(1), node);
            std::vector<int64_t> dims;
            for (float v : shape.data) dims.push_back(static_cast<int64_t>(std::llround(v)));
            result = x;
            result.dims = resolve_reshape(dims, x.element_count());
        } else if (node.op_type == "Flatten") {
            const Tensor& x = lookup(values, node.inputs.at(0), node);
            int64_t axis = 1;
            if (const Attribute* attr = node.find_attribute("axis")) axis = attr->i;
            if (axis < 0) axis += static_cast<int64_t>(x.dims.size());
            int64_t outer = 1, inner = 1;
            for (size_t i = 0; i < x.dims.size(); ++i) {
                if (static_cast<int64_t>(i) < axis) {
                    outer *= x.dims[i];
                } else {
                    inner *= x.dims[i];
                }
            }
            result = x;
            result.dims = {outer, inner};
        } else if (node.op_type == "Transpose") {
            result = eval_transpose(lookup(values, node.inputs.at(0), node), node);
        } else if (node.op_type == "MatMul") {
            result = eval_matmul(lookup(values, node.inputs.at(0), node),
                                 lookup(values, node.inputs.at(1), node));
        } else if (node.op_type == "Add" || node.op_type == "Mul") {
            result = eval_elementwise(lookup(values, node.inputs.at(0), node),
                                      lookup(values, node.inputs.at(1), node),
                                      node.op_type == "Add");
        } else if (node.op_type == "AveragePool") {
            result = eval_average_pool(lookup(values, node.inputs.at(0), node), node, false);
        } else if (node.op_type == "GlobalAveragePool") {
            result = eval_average_pool(lookup(values, node.inputs.at(0), node), node, true);
        } else if (node.op_type == "Concat") {
            std::vector<const Tensor*> parts;
            for (const auto& name : node.inputs) parts.push_back(&lookup(values, name, node));
            result = eval_concat(parts, node);
        }
        result.name = node.outputs[0];
        values[node.outputs[0]] = std::move(result);
    }

    auto it = values.find(model.outputs.at(0).name);
    if (it == values.end()) {
        throw InferenceError("onnx: graph output '" + model.outputs.at(0).name +
                             "' was never produced");
    }
    return it->second;
}

} // namespace actionsense::onnx
