#include "tinyplan/quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tinyplan/exec.hpp"

namespace tinyplan {

double Requant::value() const {
    return double(mantissa) * std::ldexp(1.0, -31 - shift);
}

CalibStats collect_calibration_stats(const Graph& g, const FloatTensors& weights,
                                     const std::vector<std::vector<float>>& calib_inputs) {
    if (calib_inputs.empty()) throw DomainError("empty calibration set");
    const std::uint64_t in_elems = g.input_shape.elems();
    CalibStats stats;
    auto merge = [&](const std::string& id, const std::vector<float>& v) {
        if (v.empty()) return;
        auto [mn, mx] = std::minmax_element(v.begin(), v.end());
        auto& s = stats[id];
        if (s.samples == 0) {
            s.min = *mn;
            s.max = *mx;
        } else {
            s.min = std::min(s.min, double(*mn));
            s.max = std::max(s.max, double(*mx));
        }
        s.samples += 1;
    };
    for (const auto& in : calib_inputs) {
        if (in.size() != in_elems)
            throw DomainError("calibration input size does not match the graph input shape");
        exec::Tensor t{g.input_shape, in};
        exec::Trace tr = exec::run_float(g, weights, t);
        merge(kGraphInputTensor, in);
        for (const auto& [id, out] : tr.values) merge(id, out.data);
    }
    for (const auto& l : g.layers) {
        if (!kind_has_weights(l.kind)) continue;
        auto it = weights.find(weight_tensor_id(l.id));
        if (it != weights.end()) merge(weight_tensor_id(l.id), it->second);
    }
    return stats;
}

std::map<std::string, Scheme> default_schemes(const Graph& g) {
    std::map<std::string, Scheme> s;
    s[kGraphInputTensor] = Scheme::Affine;
    for (const auto& l : g.layers) {
        s[l.id] = Scheme::Affine;
        if (kind_has_weights(l.kind)) s[weight_tensor_id(l.id)] = Scheme::Symmetric;
    }
    return s;
}

static QuantParam derive_one(const TensorStats& st, Scheme scheme) {
    QuantParam qp;
    qp.scheme = scheme;
    if (st.min == st.max) {
        // degenerate range: the lone constant maps onto a grid point
        qp.scale = std::max(std::abs(st.min), 1e-8) / 127.0;
        qp.zero_point = 0;
        return qp;
    }
    if (scheme == Scheme::Symmetric) {
        qp.scale = std::max(std::abs(st.min), std::abs(st.max)) / 127.0;
        qp.zero_point = 0;
    } else {
        qp.scale = (st.max - st.min) / 255.0;
        // rounding the quotient keeps symmetric ranges at zero_point 0
        double zp = -128.0 - std::round(st.min / qp.scale);
        qp.zero_point = int(std::clamp(zp, -128.0, 127.0));
    }
    return qp;
}

QuantParams derive_qparams(const CalibStats& stats,
                           const std::map<std::string, Scheme>& schemes) {
    QuantParams out;
    for (const auto& [id, scheme] : schemes) {
        auto it = stats.find(id);
        if (it == stats.end()) throw DomainError("missing calibration stats for tensor '" + id + "'");
        out[id] = derive_one(it->second, scheme);
    }
    return out;
}

std::int8_t quantize_value(float x, const QuantParam& qp) {
    double q = std::round(double(x) / qp.scale) + qp.zero_point;
    return std::int8_t(std::clamp(q, -128.0, 127.0));
}

std::vector<std::int8_t> quantize_tensor(const std::vector<float>& x, const QuantParam& qp) {
    std::vector<std::int8_t> out(x.size());
    for (size_t i = 0; i < x.size(); ++i) out[i] = quantize_value(x[i], qp);
    return out;
}

float dequantize_value(std::int8_t q, const QuantParam& qp) {
    return float((int(q) - qp.zero_point) * qp.scale);
}

std::vector<float> dequantize_tensor(const std::vector<std::int8_t>& q, const QuantParam& qp) {
    std::vector<float> out(q.size());
    for (size_t i = 0; i < q.size(); ++i) out[i] = dequantize_value(q[i], qp);
    return out;
}

Requant make_requant(double ratio) {
    if (!(ratio > 0.0)) throw DomainError("requant ratio must be positive");
    // shift -1 admits ratios in [1, 2) so an identity scale chain stays
    // representable; anything >= 2 means the output scale missed the
    // accumulator range entirely.
    if (ratio >= 2.0)
        throw DomainError("requant multiplier >= 1 after normalization (output scale too small)");
    int e = 0;
    double fr = std::frexp(ratio, &e);  // ratio = fr * 2^e, fr in [0.5, 1)
    Requant rq;
    rq.shift = -e;
    double m = std::round(fr * 2147483648.0);  // fr * 2^31
    if (m >= 2147483648.0) {                   // rounded up to 2^31: renormalize
        m = 1073741824.0;
        rq.shift -= 1;
    }
    rq.mantissa = std::int32_t(m);
    if (rq.shift > 31) throw DomainError("requant ratio too small to represent");
    return rq;
}

std::int64_t apply_requant(std::int32_t acc, const Requant& rq) {
    std::int64_t p = std::int64_t(acc) * rq.mantissa;
    std::int64_t denom = std::int64_t(1) << (31 + rq.shift);
    std::int64_t half = denom >> 1;
    return (p >= 0 ? p + half : p - half) / denom;  // truncation => half away from zero
}

QuantParams effective_qparams(const Graph& g, QuantParams qp) {
    for (const auto& l : g.layers) {
        if (l.kind != LayerKind::MaxPool) continue;
        const std::string src = l.inputs.empty() ? kGraphInputTensor : l.inputs[0];
        auto it = qp.find(src);
        if (it == qp.end())
            throw DomainError("missing quantization parameters for tensor '" + src + "'");
        qp[l.id] = it->second;
    }
    return qp;
}

QuantizedGraph quantize_graph(const Graph& g, const FloatTensors& weights,
                              const QuantParams& qparams) {
    QuantizedGraph qg;
    qg.graph = g;
    qg.qparams = effective_qparams(g, qparams);
    ShapeMap shapes = infer_shapes(g);

    auto qp_of = [&](const std::string& id) -> const QuantParam& {
        auto it = qg.qparams.find(id);
        if (it == qg.qparams.end())
            throw DomainError("missing quantization parameters for tensor '" + id + "'");
        return it->second;
    };
    auto input_tensor = [&](const Layer& l, size_t i) -> std::string {
        return l.inputs.empty() ? kGraphInputTensor : l.inputs[i];
    };

    for (const auto& l : g.layers) {
        double s_out = qp_of(l.id).scale;
        if (kind_has_weights(l.kind)) {
            const std::string wid = weight_tensor_id(l.id);
            auto wit = weights.find(wid);
            if (wit == weights.end()) throw DomainError("missing weights for layer '" + l.id + "'");
            const QuantParam& wqp = qp_of(wid);
            qg.weights[wid] = quantize_tensor(wit->second, wqp);

            double s_in = qp_of(input_tensor(l, 0)).scale;
            double bias_scale = s_in * wqp.scale;
            int cout = shapes.at(l.id).c;
            std::vector<std::int32_t> bq(cout, 0);
            auto bit = weights.find(bias_tensor_id(l.id));
            if (bit != weights.end()) {
                for (int i = 0; i < cout && i < int(bit->second.size()); ++i) {
                    double v = std::round(bit->second[i] / bias_scale);
                    v = std::clamp(v, double(std::numeric_limits<std::int32_t>::min()),
                                   double(std::numeric_limits<std::int32_t>::max()));
                    bq[i] = std::int32_t(v);
                }
            }
            qg.biases[bias_tensor_id(l.id)] = std::move(bq);
            qg.requant[l.id] = {make_requant(bias_scale / s_out)};
        } else if (l.kind == LayerKind::AvgPool) {
            double s_in = qp_of(input_tensor(l, 0)).scale;
            qg.requant[l.id] = {make_requant(s_in / (double(l.kh) * l.kw * s_out))};
        } else if (l.kind == LayerKind::Add || l.kind == LayerKind::Concat) {
            std::vector<Requant> rs;
            for (size_t i = 0; i < l.inputs.size(); ++i)
                rs.push_back(make_requant(qp_of(input_tensor(l, i)).scale / s_out));
            qg.requant[l.id] = std::move(rs);
        }
    }
    return qg;
}

}  // namespace tinyplan
