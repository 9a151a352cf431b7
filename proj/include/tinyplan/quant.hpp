#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tinyplan/container.hpp"
#include "tinyplan/graph.hpp"

namespace tinyplan {

struct TensorStats {
    double min = 0.0;
    double max = 0.0;
    std::uint64_t samples = 0;
};

// Keyed by tensor id ("input", layer ids, "<layer>.w").
using CalibStats = std::map<std::string, TensorStats>;

enum class Scheme { Affine, Symmetric };

struct QuantParam {
    double scale = 1.0;
    int zero_point = 0;  // in [-128, 127]; 0 for symmetric
    Scheme scheme = Scheme::Affine;
};

using QuantParams = std::map<std::string, QuantParam>;

// Fixed-point multiplier: value = mantissa * 2^(-31-shift), mantissa in [2^30, 2^31).
struct Requant {
    std::int32_t mantissa = 1 << 30;
    int shift = 0;

    double value() const;
};

struct QuantizedGraph {
    Graph graph;
    QuantParams qparams;                                      // activations + weights
    std::map<std::string, std::vector<std::int8_t>> weights;  // keyed "<layer>.w"
    std::map<std::string, std::vector<std::int32_t>> biases;  // keyed "<layer>.b"
    // Per layer: one multiplier for conv/fc/avg_pool, one per operand for add/concat.
    std::map<std::string, std::vector<Requant>> requant;
};

// Running min/max of every activation tensor over the calibration inputs
// (float executor under the hood), plus min/max of each weight tensor.
// The merge is associative and commutative, so input order does not matter.
CalibStats collect_calibration_stats(const Graph& g, const FloatTensors& weights,
                                     const std::vector<std::vector<float>>& calib_inputs);

// Default scheme assignment: symmetric for weight tensors, affine for activations.
std::map<std::string, Scheme> default_schemes(const Graph& g);

// max_pool outputs inherit their input's parameters (the integer path takes
// the max over codes, which is only order-preserving under a shared scale).
// Both quantize_graph and run_fakequant apply this rewrite.
QuantParams effective_qparams(const Graph& g, QuantParams qp);

QuantParams derive_qparams(const CalibStats& stats,
                           const std::map<std::string, Scheme>& schemes);

// q = clamp(round_half_away(x/scale) + zero_point, -128, 127)
std::int8_t quantize_value(float x, const QuantParam& qp);
std::vector<std::int8_t> quantize_tensor(const std::vector<float>& x, const QuantParam& qp);
float dequantize_value(std::int8_t q, const QuantParam& qp);
std::vector<float> dequantize_tensor(const std::vector<std::int8_t>& q, const QuantParam& qp);

// mantissa/shift such that mantissa*2^(-31-shift) approximates ratio with
// relative error < 2^-24. Throws DomainError if ratio >= 1 (output scale too
// small) or ratio <= 0.
Requant make_requant(double ratio);

// Apply: round_half_away(acc * mantissa * 2^(-31-shift)), no clamping.
std::int64_t apply_requant(std::int32_t acc, const Requant& rq);

QuantizedGraph quantize_graph(const Graph& g, const FloatTensors& weights,
                              const QuantParams& qparams);

}  // namespace tinyplan
