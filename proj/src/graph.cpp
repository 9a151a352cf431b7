#include "tinyplan/graph.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace tinyplan {

using nlohmann::json;

const char* kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::DepthwiseConv2d: return "depthwise_conv2d";
        case LayerKind::FullyConnected: return "fully_connected";
        case LayerKind::Relu: return "relu";
        case LayerKind::Relu6: return "relu6";
        case LayerKind::HardSwish: return "hardswish";
        case LayerKind::MaxPool: return "max_pool";
        case LayerKind::AvgPool: return "avg_pool";
        case LayerKind::Add: return "add";
        case LayerKind::Concat: return "concat";
    }
    return "?";
}

LayerKind kind_from_name(const std::string& name) {
    static const std::map<std::string, LayerKind> table = {
        {"conv2d", LayerKind::Conv2d},
        {"depthwise_conv2d", LayerKind::DepthwiseConv2d},
        {"fully_connected", LayerKind::FullyConnected},
        {"relu", LayerKind::Relu},
        {"relu6", LayerKind::Relu6},
        {"hardswish", LayerKind::HardSwish},
        {"max_pool", LayerKind::MaxPool},
        {"avg_pool", LayerKind::AvgPool},
        {"add", LayerKind::Add},
        {"concat", LayerKind::Concat},
    };
    auto it = table.find(name);
    if (it == table.end()) throw IoError("unknown layer kind '" + name + "'");
    return it->second;
}

bool kind_has_weights(LayerKind k) {
    return k == LayerKind::Conv2d || k == LayerKind::DepthwiseConv2d ||
           k == LayerKind::FullyConnected;
}

bool kind_has_kernel(LayerKind k) {
    return k == LayerKind::Conv2d || k == LayerKind::DepthwiseConv2d ||
           k == LayerKind::MaxPool || k == LayerKind::AvgPool;
}

const Layer* Graph::find(const std::string& id) const {
    for (const auto& l : layers)
        if (l.id == id) return &l;
    return nullptr;
}

std::string weight_tensor_id(const std::string& layer_id) { return layer_id + ".w"; }
std::string bias_tensor_id(const std::string& layer_id) { return layer_id + ".b"; }

static int conv_dim(int in, int k, int s, int p0, int p1) {
    return (in + p0 + p1 - k) / s + 1;
}

TensorShape infer_layer_shape(const Layer& l, const std::vector<TensorShape>& inputs) {
    if (inputs.empty()) throw DomainError("layer '" + l.id + "' has no input shapes");
    const TensorShape& in = inputs[0];
    TensorShape s;
    switch (l.kind) {
        case LayerKind::Conv2d:
        case LayerKind::DepthwiseConv2d:
        case LayerKind::MaxPool:
        case LayerKind::AvgPool: {
            s.h = conv_dim(in.h, l.kh, l.sh, l.pad_t, l.pad_b);
            s.w = conv_dim(in.w, l.kw, l.sw, l.pad_l, l.pad_r);
            s.c = (l.kind == LayerKind::Conv2d) ? l.out_channels : in.c;
            if (s.h < 1 || s.w < 1 || s.c < 1)
                throw DomainError("layer '" + l.id + "' derives a non-positive dimension");
            break;
        }
        case LayerKind::FullyConnected:
            s = {1, 1, l.out_channels};
            if (s.c < 1) throw DomainError("layer '" + l.id + "' derives a non-positive dimension");
            break;
        case LayerKind::Relu:
        case LayerKind::Relu6:
        case LayerKind::HardSwish:
            s = in;
            break;
        case LayerKind::Add: {
            for (size_t i = 1; i < inputs.size(); ++i)
                if (!(inputs[i] == in))
                    throw DomainError("add layer '" + l.id + "' has mismatched input shapes");
            s = in;
            break;
        }
        case LayerKind::Concat: {
            s = in;
            for (size_t i = 1; i < inputs.size(); ++i) {
                if (inputs[i].h != s.h || inputs[i].w != s.w)
                    throw DomainError("concat layer '" + l.id + "' has mismatched spatial dims");
                s.c += inputs[i].c;
            }
            break;
        }
    }
    return s;
}

ShapeMap infer_shapes(const Graph& g) {
    ShapeMap out;
    for (const auto& l : g.layers) {
        std::vector<TensorShape> ins;
        if (l.inputs.empty()) {
            ins.push_back(g.input_shape);
        } else {
            for (const auto& in : l.inputs) {
                auto it = out.find(in);
                if (it == out.end())
                    throw DomainError("layer '" + l.id + "' reads undefined tensor '" + in + "'");
                ins.push_back(it->second);
            }
        }
        out[l.id] = infer_layer_shape(l, ins);
    }
    return out;
}

CountReport count_macs(const Graph& g) { return count_macs(g, infer_shapes(g)); }

CountReport count_macs(const Graph& g, const ShapeMap& shapes) {
    CountReport r;
    for (const auto& l : g.layers) {
        const TensorShape& o = shapes.at(l.id);
        TensorShape in = l.inputs.empty() ? g.input_shape : shapes.at(l.inputs[0]);
        std::uint64_t m = 0;
        switch (l.kind) {
            case LayerKind::Conv2d:
                m = std::uint64_t(o.h) * o.w * o.c * in.c * l.kh * l.kw;
                break;
            case LayerKind::DepthwiseConv2d:
                m = std::uint64_t(o.h) * o.w * in.c * l.kh * l.kw;
                break;
            case LayerKind::FullyConnected:
                m = in.elems() * std::uint64_t(l.out_channels);
                break;
            default:
                m = 0;  // multiplies only; activations/pool/add/concat are free
        }
        r.per_layer[l.id] = m;
        r.total += m;
    }
    return r;
}

CountReport count_params(const Graph& g) { return count_params(g, infer_shapes(g)); }

CountReport count_params(const Graph& g, const ShapeMap& shapes) {
    CountReport r;
    for (const auto& l : g.layers) {
        TensorShape in = l.inputs.empty() ? g.input_shape : shapes.at(l.inputs[0]);
        std::uint64_t p = 0;
        switch (l.kind) {
            case LayerKind::Conv2d:
                p = std::uint64_t(l.out_channels) * in.c * l.kh * l.kw + l.out_channels;
                break;
            case LayerKind::DepthwiseConv2d:
                p = std::uint64_t(in.c) * l.kh * l.kw + in.c;
                break;
            case LayerKind::FullyConnected:
                p = in.elems() * l.out_channels + l.out_channels;
                break;
            default:
                p = 0;
        }
        r.per_layer[l.id] = p;
        r.total += p;
    }
    return r;
}

std::vector<std::string> validate(const Graph& g) {
    std::vector<std::string> errs;
    if (g.layers.empty()) errs.push_back("no layers");
    if (g.input_shape.h < 1 || g.input_shape.w < 1 || g.input_shape.c < 1)
        errs.push_back("input shape has a non-positive dimension");

    std::set<std::string> seen;
    for (const auto& l : g.layers) {
        if (!seen.insert(l.id).second) errs.push_back("duplicate layer id '" + l.id + "'");
    }
    // producer-precedes-consumer (also rules out cycles in a flat list)
    std::set<std::string> defined;
    for (const auto& l : g.layers) {
        for (const auto& in : l.inputs)
            if (!defined.count(in))
                errs.push_back("layer '" + l.id + "' reads '" + in + "' before it is defined");
        defined.insert(l.id);
        if (kind_has_kernel(l.kind) && (l.kh < 1 || l.kw < 1))
            errs.push_back("layer '" + l.id + "' has kernel < 1");
        if (l.sh < 1 || l.sw < 1) errs.push_back("layer '" + l.id + "' has stride < 1");
        if ((l.kind == LayerKind::Conv2d || l.kind == LayerKind::FullyConnected) &&
            l.out_channels < 1)
            errs.push_back("layer '" + l.id + "' has out_channels < 1");
        if ((l.kind == LayerKind::Add || l.kind == LayerKind::Concat) && l.inputs.size() < 2)
            errs.push_back("layer '" + l.id + "' needs at least two inputs");
    }
    if (!errs.empty()) return errs;

    // tolerant shape walk: record every failing layer, keep going with the
    // first input's shape as a stand-in so downstream layers still get checked
    ShapeMap shapes;
    for (const auto& l : g.layers) {
        std::vector<TensorShape> ins;
        if (l.inputs.empty()) ins.push_back(g.input_shape);
        for (const auto& in : l.inputs) ins.push_back(shapes.at(in));
        TensorShape s = ins[0];
        try {
            s = infer_layer_shape(l, ins);
        } catch (const DomainError& e) {
            errs.push_back(e.what());
        }
        shapes[l.id] = s;
    }
    return errs;
}

static Layer layer_from_json(const json& j) {
    Layer l;
    l.id = j.at("id").get<std::string>();
    l.kind = kind_from_name(j.at("kind").get<std::string>());
    if (j.contains("kernel")) {
        l.kh = j["kernel"].at(0).get<int>();
        l.kw = j["kernel"].at(1).get<int>();
    }
    if (j.contains("stride")) {
        l.sh = j["stride"].at(0).get<int>();
        l.sw = j["stride"].at(1).get<int>();
    }
    if (j.contains("padding")) {
        l.pad_t = j["padding"].at(0).get<int>();
        l.pad_b = j["padding"].at(1).get<int>();
        l.pad_l = j["padding"].at(2).get<int>();
        l.pad_r = j["padding"].at(3).get<int>();
    }
    if (j.contains("out_channels")) l.out_channels = j["out_channels"].get<int>();
    if (j.contains("inputs"))
        for (const auto& s : j["inputs"]) l.inputs.push_back(s.get<std::string>());
    return l;
}

Graph parse_model(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(origin + ": " + e.what());
    }
    try {
        Graph g;
        g.name = j.at("name").get<std::string>();
        const json& is = j.at("input_shape");
        g.input_shape = {is.at("height").get<int>(), is.at("width").get<int>(),
                         is.at("channels").get<int>()};
        if (j.contains("metadata")) g.metadata_json = j["metadata"].dump();
        for (const auto& lj : j.at("layers")) g.layers.push_back(layer_from_json(lj));
        return g;
    } catch (const json::exception& e) {
        throw IoError(origin + ": " + e.what());
    }
}

Graph load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError(path + ": file not found");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_model(ss.str(), path);
}

std::string model_to_json(const Graph& g) {
    json j;
    j["name"] = g.name;
    j["input_shape"] = {{"height", g.input_shape.h},
                        {"width", g.input_shape.w},
                        {"channels", g.input_shape.c}};
    if (!g.metadata_json.empty()) j["metadata"] = json::parse(g.metadata_json);
    json layers = json::array();
    for (const auto& l : g.layers) {
        json lj;
        lj["id"] = l.id;
        lj["kind"] = kind_name(l.kind);
        if (kind_has_kernel(l.kind)) {
            lj["kernel"] = {l.kh, l.kw};
            lj["stride"] = {l.sh, l.sw};
            lj["padding"] = {l.pad_t, l.pad_b, l.pad_l, l.pad_r};
        }
        if (l.kind == LayerKind::Conv2d || l.kind == LayerKind::FullyConnected)
            lj["out_channels"] = l.out_channels;
        lj["inputs"] = l.inputs;
        layers.push_back(lj);
    }
    j["layers"] = layers;
    return j.dump(1);
}

}  // namespace tinyplan
