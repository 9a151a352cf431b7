#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tinyplan/graph.hpp"
#include "tinyplan/quant.hpp"

namespace tinyplan::exec {

enum class Mode { Float, FakeQuant, Int8 };

struct Tensor {
    TensorShape shape;
    std::vector<float> data;  // row-major h,w,c
};

struct CodeTensor {
    TensorShape shape;
    std::vector<std::int8_t> data;
};

struct Options {
    bool parallel = true;  // OpenMP lane; results are bit-identical either way
};

struct Trace {
    Mode mode = Mode::Float;
    std::map<std::string, Tensor> values;      // per-layer outputs (dequantized for int8)
    std::map<std::string, CodeTensor> codes;   // int8 mode only
};

// Reference float executor: double accumulation in a fixed per-element order,
// so traces are bit-identical across runs and thread counts.
Trace run_float(const Graph& g, const FloatTensors& weights, const Tensor& input,
                const Options& opts = {});

// Float arithmetic with quantize-dequantize applied to the input, to weights
// and biases, and to every layer output before consumption.
Trace run_fakequant(const Graph& g, const FloatTensors& weights, const QuantParams& qp,
                    const Tensor& input, const Options& opts = {});

// Pure integer path: int32 accumulators, zero-point-corrected convolution,
// fixed-point requantization, 256-entry LUTs for activations.
Trace run_int8(const QuantizedGraph& qg, const CodeTensor& input, const Options& opts = {});

// Single-layer entry points (tiling oracle, per-layer agreement checks).
Tensor run_layer_float(const Layer& l, const std::vector<Tensor>& inputs,
                       const FloatTensors& weights, const Options& opts = {});
CodeTensor run_layer_int8(const QuantizedGraph& qg, const Layer& l,
                          const std::vector<CodeTensor>& inputs, const Options& opts = {});

// Quantize/dequantize a whole float tensor with the graph-input params.
CodeTensor quantize_input(const Tensor& t, const QuantParam& qp);
Tensor dequantize_codes(const CodeTensor& t, const QuantParam& qp);

}  // namespace tinyplan::exec
