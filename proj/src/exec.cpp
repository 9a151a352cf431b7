#include "tinyplan/exec.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "kernels.hpp"

namespace tinyplan::exec {

namespace {

double activation(LayerKind k, double x) {
    switch (k) {
        case LayerKind::Relu: return x > 0.0 ? x : 0.0;
        case LayerKind::Relu6: return std::min(std::max(x, 0.0), 6.0);
        case LayerKind::HardSwish: return x * std::min(std::max(x + 3.0, 0.0), 6.0) / 6.0;
        default: throw DomainError("not an activation");
    }
}

kern::ConvSpec conv_spec(const Layer& l, const TensorShape& in, const TensorShape& out) {
    return {in, out, l.kh, l.kw, l.sh, l.sw, l.pad_t, l.pad_l};
}

const std::vector<float>& weights_of(const FloatTensors& w, const std::string& id,
                                     const std::string& layer_id) {
    auto it = w.find(id);
    if (it == w.end()) throw DomainError("missing weights for layer '" + layer_id + "'");
    return it->second;
}

const float* bias_or_null(const FloatTensors& w, const std::string& layer_id) {
    auto it = w.find(bias_tensor_id(layer_id));
    return it == w.end() ? nullptr : it->second.data();
}

// ---- float path -----------------------------------------------------------

Tensor float_layer(const Layer& l, const std::vector<const Tensor*>& ins,
                   const FloatTensors& weights, bool par) {
    std::vector<TensorShape> shapes;
    for (const auto* t : ins) shapes.push_back(t->shape);
    TensorShape os = infer_layer_shape(l, shapes);
    Tensor out{os, std::vector<float>(os.elems())};
    const Tensor& in = *ins[0];

    switch (l.kind) {
        case LayerKind::Conv2d: {
            const auto& w = weights_of(weights, weight_tensor_id(l.id), l.id);
            auto s = conv_spec(l, in.shape, os);
            (par ? kern::par::conv2d_f32 : kern::serial::conv2d_f32)(
                s, in.data.data(), w.data(), bias_or_null(weights, l.id), out.data.data());
            break;
        }
        case LayerKind::DepthwiseConv2d: {
            const auto& w = weights_of(weights, weight_tensor_id(l.id), l.id);
            auto s = conv_spec(l, in.shape, os);
            (par ? kern::par::dwconv2d_f32 : kern::serial::dwconv2d_f32)(
                s, in.data.data(), w.data(), bias_or_null(weights, l.id), out.data.data());
            break;
        }
        case LayerKind::FullyConnected: {
            const auto& w = weights_of(weights, weight_tensor_id(l.id), l.id);
            (par ? kern::par::fc_f32 : kern::serial::fc_f32)(
                std::int64_t(in.shape.elems()), os.c, in.data.data(), w.data(),
                bias_or_null(weights, l.id), out.data.data());
            break;
        }
        case LayerKind::Relu:
        case LayerKind::Relu6:
        case LayerKind::HardSwish:
            for (size_t i = 0; i < in.data.size(); ++i)
                out.data[i] = float(activation(l.kind, in.data[i]));
            break;
        case LayerKind::MaxPool:
        case LayerKind::AvgPool: {
            const bool avg = l.kind == LayerKind::AvgPool;
            const double inv_n = 1.0 / (double(l.kh) * l.kw);
            for (int oy = 0; oy < os.h; ++oy)
                for (int ox = 0; ox < os.w; ++ox)
                    for (int c = 0; c < os.c; ++c) {
                        double acc = avg ? 0.0 : -std::numeric_limits<double>::infinity();
                        for (int ky = 0; ky < l.kh; ++ky) {
                            int iy = oy * l.sh - l.pad_t + ky;
                            if (iy < 0 || iy >= in.shape.h) continue;
                            for (int kx = 0; kx < l.kw; ++kx) {
                                int ix = ox * l.sw - l.pad_l + kx;
                                if (ix < 0 || ix >= in.shape.w) continue;
                                double v = in.data[(std::int64_t(iy) * in.shape.w + ix) * os.c + c];
                                acc = avg ? acc + v : std::max(acc, v);
                            }
                        }
                        // avg divides by the full window; padded taps count as zero
                        out.data[(std::int64_t(oy) * os.w + ox) * os.c + c] =
                            float(avg ? acc * inv_n : acc);
                    }
            break;
        }
        case LayerKind::Add:
            out.data = ins[0]->data;
            for (size_t k = 1; k < ins.size(); ++k)
                for (size_t i = 0; i < out.data.size(); ++i)
                    out.data[i] = float(double(out.data[i]) + ins[k]->data[i]);
            break;
        case LayerKind::Concat: {
            std::int64_t pix = std::int64_t(os.h) * os.w;
            for (std::int64_t p = 0; p < pix; ++p) {
                std::int64_t o = p * os.c;
                for (const auto* t : ins)
                    for (int c = 0; c < t->shape.c; ++c)
                        out.data[o++] = t->data[p * t->shape.c + c];
            }
            break;
        }
    }
    return out;
}

// ---- int8 path -------------------------------------------------------------

const std::vector<Requant>& requants_of(const QuantizedGraph& qg, const std::string& id) {
    auto it = qg.requant.find(id);
    if (it == qg.requant.end()) throw DomainError("missing requant entry for layer '" + id + "'");
    return it->second;
}

const QuantParam& qp_of(const QuantParams& qp, const std::string& id) {
    auto it = qp.find(id);
    if (it == qp.end()) throw DomainError("missing quantization parameters for tensor '" + id + "'");
    return it->second;
}

std::array<std::int8_t, 256> activation_lut(LayerKind k, const QuantParam& in_qp,
                                            const QuantParam& out_qp) {
    std::array<std::int8_t, 256> lut{};
    for (int code = -128; code <= 127; ++code) {
        float x = dequantize_value(std::int8_t(code), in_qp);
        double y = activation(k, double(x));
        lut[code + 128] = quantize_value(float(y), out_qp);
    }
    return lut;
}

CodeTensor int8_layer(const QuantizedGraph& qg, const Layer& l,
                      const std::vector<const CodeTensor*>& ins, bool par) {
    std::vector<TensorShape> shapes;
    for (const auto* t : ins) shapes.push_back(t->shape);
    TensorShape os = infer_layer_shape(l, shapes);
    CodeTensor out{os, std::vector<std::int8_t>(os.elems())};
    const CodeTensor& in = *ins[0];

    const std::string in_id = l.inputs.empty() ? std::string(kGraphInputTensor) : l.inputs[0];
    const QuantParam& iq = qp_of(qg.qparams, in_id);
    const QuantParam& oq = qp_of(qg.qparams, l.id);

    switch (l.kind) {
        case LayerKind::Conv2d:
        case LayerKind::DepthwiseConv2d: {
            auto wit = qg.weights.find(weight_tensor_id(l.id));
            if (wit == qg.weights.end()) throw DomainError("missing weights for layer '" + l.id + "'");
            const auto& bias = qg.biases.at(bias_tensor_id(l.id));
            kern::QuantSpec q{iq.zero_point, oq.zero_point, requants_of(qg, l.id)[0]};
            auto s = conv_spec(l, in.shape, os);
            if (l.kind == LayerKind::Conv2d)
                (par ? kern::par::conv2d_i8 : kern::serial::conv2d_i8)(
                    s, q, in.data.data(), wit->second.data(), bias.data(), out.data.data());
            else
                (par ? kern::par::dwconv2d_i8 : kern::serial::dwconv2d_i8)(
                    s, q, in.data.data(), wit->second.data(), bias.data(), out.data.data());
            break;
        }
        case LayerKind::FullyConnected: {
            const auto& w = qg.weights.at(weight_tensor_id(l.id));
            const auto& bias = qg.biases.at(bias_tensor_id(l.id));
            kern::QuantSpec q{iq.zero_point, oq.zero_point, requants_of(qg, l.id)[0]};
            (par ? kern::par::fc_i8 : kern::serial::fc_i8)(std::int64_t(in.shape.elems()), os.c, q,
                                                           in.data.data(), w.data(), bias.data(),
                                                           out.data.data());
            break;
        }
        case LayerKind::Relu:
        case LayerKind::Relu6:
        case LayerKind::HardSwish: {
            auto lut = activation_lut(l.kind, iq, oq);
            for (size_t i = 0; i < in.data.size(); ++i) out.data[i] = lut[int(in.data[i]) + 128];
            break;
        }
        case LayerKind::MaxPool:
        case LayerKind::AvgPool: {
            const bool avg = l.kind == LayerKind::AvgPool;
            Requant rq = avg ? requants_of(qg, l.id)[0] : Requant{};
            for (int oy = 0; oy < os.h; ++oy)
                for (int ox = 0; ox < os.w; ++ox)
                    for (int c = 0; c < os.c; ++c) {
                        std::int32_t acc = 0;
                        int best = -128;
                        for (int ky = 0; ky < l.kh; ++ky) {
                            int iy = oy * l.sh - l.pad_t + ky;
                            if (iy < 0 || iy >= in.shape.h) continue;
                            for (int kx = 0; kx < l.kw; ++kx) {
                                int ix = ox * l.sw - l.pad_l + kx;
                                if (ix < 0 || ix >= in.shape.w) continue;
                                int v = in.data[(std::int64_t(iy) * in.shape.w + ix) * os.c + c];
                                if (avg)
                                    acc += v - iq.zero_point;
                                else
                                    best = std::max(best, v);
                            }
                        }
                        std::int8_t o;
                        if (avg) {
                            std::int64_t v = oq.zero_point + apply_requant(acc, rq);
                            o = std::int8_t(std::clamp<std::int64_t>(v, -128, 127));
                        } else {
                            o = std::int8_t(best);  // codes share the input scale
                        }
                        out.data[(std::int64_t(oy) * os.w + ox) * os.c + c] = o;
                    }
            break;
        }
        case LayerKind::Add: {
            const auto& rqs = requants_of(qg, l.id);
            std::vector<const QuantParam*> qps;
            for (const auto& name : l.inputs) qps.push_back(&qp_of(qg.qparams, name));
            if (l.inputs.empty()) qps.push_back(&iq);
            for (size_t i = 0; i < out.data.size(); ++i) {
                std::int64_t acc = oq.zero_point;
                for (size_t k = 0; k < ins.size(); ++k)
                    acc += apply_requant(std::int32_t(ins[k]->data[i]) - qps[k]->zero_point, rqs[k]);
                out.data[i] = std::int8_t(std::clamp<std::int64_t>(acc, -128, 127));
            }
            break;
        }
        case LayerKind::Concat: {
            const auto& rqs = requants_of(qg, l.id);
            std::int64_t pix = std::int64_t(os.h) * os.w;
            for (std::int64_t p = 0; p < pix; ++p) {
                std::int64_t o = p * os.c;
                for (size_t k = 0; k < ins.size(); ++k) {
                    const QuantParam& kq =
                        qp_of(qg.qparams, l.inputs.empty() ? kGraphInputTensor : l.inputs[k]);
                    for (int c = 0; c < ins[k]->shape.c; ++c) {
                        std::int32_t d = std::int32_t(ins[k]->data[p * ins[k]->shape.c + c]) -
                                         kq.zero_point;
                        std::int64_t v = oq.zero_point + apply_requant(d, rqs[k]);
                        out.data[o++] = std::int8_t(std::clamp<std::int64_t>(v, -128, 127));
                    }
                }
            }
            break;
        }
    }
    return out;
}

// ---- fakequant weight preparation -----------------------------------------

struct FqWeights {
    std::vector<float> w;
    std::vector<float> b;
};

FqWeights fakequant_weights(const Layer& l, const FloatTensors& weights, const QuantParams& qp,
                            double s_in, int cout) {
    FqWeights fw;
    const QuantParam& wqp = qp_of(qp, weight_tensor_id(l.id));
    const auto& wf = weights_of(weights, weight_tensor_id(l.id), l.id);
    fw.w = dequantize_tensor(quantize_tensor(wf, wqp), wqp);
    const double bias_scale = s_in * wqp.scale;
    fw.b.assign(cout, 0.0f);
    auto bit = weights.find(bias_tensor_id(l.id));
    if (bit != weights.end()) {
        for (int i = 0; i < cout && i < int(bit->second.size()); ++i) {
            double bq = std::round(bit->second[i] / bias_scale);
            bq = std::clamp(bq, double(std::numeric_limits<std::int32_t>::min()),
                            double(std::numeric_limits<std::int32_t>::max()));
            fw.b[i] = float(bq * bias_scale);
        }
    }
    return fw;
}

Tensor quantize_dequantize(const Tensor& t, const QuantParam& qp) {
    Tensor out{t.shape, std::vector<float>(t.data.size())};
    for (size_t i = 0; i < t.data.size(); ++i)
        out.data[i] = dequantize_value(quantize_value(t.data[i], qp), qp);
    return out;
}

Tensor fakequant_layer(const Layer& l, const std::vector<const Tensor*>& ins,
                       const FloatTensors& weights, const QuantParams& qp, bool par) {
    const std::string in_id = l.inputs.empty() ? std::string(kGraphInputTensor) : l.inputs[0];
    const QuantParam& oq = qp_of(qp, l.id);
    if (kind_has_weights(l.kind)) {
        std::vector<TensorShape> shapes;
        for (const auto* t : ins) shapes.push_back(t->shape);
        TensorShape os = infer_layer_shape(l, shapes);
        FqWeights fw = fakequant_weights(l, weights, qp, qp_of(qp, in_id).scale, os.c);
        FloatTensors local;
        local[weight_tensor_id(l.id)] = std::move(fw.w);
        local[bias_tensor_id(l.id)] = std::move(fw.b);
        Tensor y = float_layer(l, ins, local, par);
        return quantize_dequantize(y, oq);
    }
    Tensor y = float_layer(l, ins, weights, par);
    return quantize_dequantize(y, oq);
}

}  // namespace

CodeTensor quantize_input(const Tensor& t, const QuantParam& qp) {
    return {t.shape, quantize_tensor(t.data, qp)};
}

Tensor dequantize_codes(const CodeTensor& t, const QuantParam& qp) {
    return {t.shape, dequantize_tensor(t.data, qp)};
}

Tensor run_layer_float(const Layer& l, const std::vector<Tensor>& inputs,
                       const FloatTensors& weights, const Options& opts) {
    std::vector<const Tensor*> ptrs;
    for (const auto& t : inputs) ptrs.push_back(&t);
    return float_layer(l, ptrs, weights, opts.parallel);
}

CodeTensor run_layer_int8(const QuantizedGraph& qg, const Layer& l,
                          const std::vector<CodeTensor>& inputs, const Options& opts) {
    std::vector<const CodeTensor*> ptrs;
    for (const auto& t : inputs) ptrs.push_back(&t);
    return int8_layer(qg, l, ptrs, opts.parallel);
}

Trace run_float(const Graph& g, const FloatTensors& weights, const Tensor& input,
                const Options& opts) {
    if (!(input.shape == g.input_shape))
        throw DomainError("input shape does not match the graph input");
    Trace tr;
    tr.mode = Mode::Float;
    for (const auto& l : g.layers) {
        std::vector<const Tensor*> ins;
        if (l.inputs.empty()) ins.push_back(&input);
        for (const auto& id : l.inputs) ins.push_back(&tr.values.at(id));
        tr.values[l.id] = float_layer(l, ins, weights, opts.parallel);
    }
    return tr;
}

Trace run_fakequant(const Graph& g, const FloatTensors& weights, const QuantParams& qparams,
                    const Tensor& input, const Options& opts) {
    if (!(input.shape == g.input_shape))
        throw DomainError("input shape does not match the graph input");
    QuantParams qp = effective_qparams(g, qparams);
    Trace tr;
    tr.mode = Mode::FakeQuant;
    Tensor in_fq = quantize_dequantize(input, qp_of(qp, kGraphInputTensor));
    for (const auto& l : g.layers) {
        std::vector<const Tensor*> ins;
        if (l.inputs.empty()) ins.push_back(&in_fq);
        for (const auto& id : l.inputs) ins.push_back(&tr.values.at(id));
        tr.values[l.id] = fakequant_layer(l, ins, weights, qp, opts.parallel);
    }
    return tr;
}

Trace run_int8(const QuantizedGraph& qg, const CodeTensor& input, const Options& opts) {
    if (!(input.shape == qg.graph.input_shape))
        throw DomainError("input shape does not match the graph input");
    Trace tr;
    tr.mode = Mode::Int8;
    for (const auto& l : qg.graph.layers) {
        std::vector<const CodeTensor*> ins;
        if (l.inputs.empty()) ins.push_back(&input);
        for (const auto& id : l.inputs) ins.push_back(&tr.codes.at(id));
        tr.codes[l.id] = int8_layer(qg, l, ins, opts.parallel);
    }
    for (const auto& [id, codes] : tr.codes)
        tr.values[id] = dequantize_codes(codes, qp_of(qg.qparams, id));
    return tr;
}

}  // namespace tinyplan::exec
