#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace tinyplan {

// Thrown for unreadable files and malformed documents (CLI exit 2).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown for semantic errors during computation (CLI exit 1).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TensorShape {
    int h = 0;
    int w = 0;
    int c = 0;

    bool operator==(const TensorShape&) const = default;
    std::uint64_t elems() const { return std::uint64_t(h) * w * c; }
};

enum class LayerKind {
    Conv2d,
    DepthwiseConv2d,
    FullyConnected,
    Relu,
    Relu6,
    HardSwish,
    MaxPool,
    AvgPool,
    Add,
    Concat,
};

const char* kind_name(LayerKind k);
LayerKind kind_from_name(const std::string& name);
bool kind_has_weights(LayerKind k);
bool kind_has_kernel(LayerKind k);  // conv, dwconv, pools

struct Layer {
    std::string id;
    LayerKind kind = LayerKind::Conv2d;
    int kh = 1, kw = 1;
    int sh = 1, sw = 1;
    int pad_t = 0, pad_b = 0, pad_l = 0, pad_r = 0;
    int out_channels = 0;               // Conv2d / FullyConnected
    std::vector<std::string> inputs;    // empty = reads the graph input
};

struct Graph {
    std::string name;
    TensorShape input_shape;
    std::string metadata_json;          // free-form annotation block, kept verbatim
    std::vector<Layer> layers;

    const Layer* find(const std::string& id) const;
};

// Tensor naming convention shared by quant/exec and the weights container:
// the graph input tensor is "input", a layer's output tensor is its id,
// weights are "<id>.w" and biases "<id>.b".
inline const char* kGraphInputTensor = "input";
std::string weight_tensor_id(const std::string& layer_id);
std::string bias_tensor_id(const std::string& layer_id);

using ShapeMap = std::map<std::string, TensorShape>;

struct CountReport {
    std::map<std::string, std::uint64_t> per_layer;
    std::uint64_t total = 0;
};

// Output shape of every layer. Throws DomainError on shape mismatches or
// non-positive derived dimensions. Conv output H = floor((H+pt+pb-kh)/sh)+1.
ShapeMap infer_shapes(const Graph& g);

// Same rules for a single layer given its input shapes.
TensorShape infer_layer_shape(const Layer& l, const std::vector<TensorShape>& inputs);

// Multiply-accumulate counts. Activations, pooling, add and concat count as
// zero: the convention counts multiplies only, and the report output says so.
CountReport count_macs(const Graph& g);
CountReport count_macs(const Graph& g, const ShapeMap& shapes);

// Parameter counts including biases (conv: Cout*Cin*kh*kw + Cout).
CountReport count_params(const Graph& g);
CountReport count_params(const Graph& g, const ShapeMap& shapes);

// All violated invariants, not just the first. Empty result means valid.
std::vector<std::string> validate(const Graph& g);

Graph load_model(const std::string& path);
Graph parse_model(const std::string& json_text, const std::string& origin);
std::string model_to_json(const Graph& g);

}  // namespace tinyplan
