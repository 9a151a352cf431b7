#include "tinyplan/planner.hpp"

#include <algorithm>

#include "tinyplan/profile.hpp"

namespace tinyplan {

const char* precision_name(Precision p) {
    switch (p) {
        case Precision::F32: return "f32";
        case Precision::F16: return "f16";
        case Precision::I8: return "i8";
    }
    return "?";
}

Precision precision_from_name(const std::string& s) {
    if (s == "f32") return Precision::F32;
    if (s == "f16") return Precision::F16;
    if (s == "i8") return Precision::I8;
    throw IoError("unknown precision '" + s + "'");
}

static std::uint64_t elem_size(Precision p) {
    switch (p) {
        case Precision::F32: return 4;
        case Precision::F16: return 2;
        case Precision::I8: return 1;
    }
    return 0;
}

std::uint64_t activation_bytes(Precision p, std::uint64_t elems) { return elems * elem_size(p); }

std::uint64_t weight_bytes(Precision p, std::uint64_t weight_elems, std::uint64_t bias_elems) {
    switch (p) {
        case Precision::F32: return weight_elems * 4 + bias_elems * 4;
        case Precision::F16: return weight_elems * 2 + bias_elems * 2;
        case Precision::I8: return weight_elems * 1 + bias_elems * 4;  // int32 bias
    }
    return 0;
}

static void split_params(const Graph& g, const ShapeMap& shapes, const Layer& l,
                         std::uint64_t& w_elems, std::uint64_t& b_elems) {
    w_elems = b_elems = 0;
    if (!kind_has_weights(l.kind)) return;
    CountReport pr = count_params(g, shapes);
    std::uint64_t total = pr.per_layer.at(l.id);
    b_elems = std::uint64_t(shapes.at(l.id).c);
    w_elems = total - b_elems;
}

MemoryPlan peak_memory(const Graph& g, Precision p, const DeploymentStrategy& strategy,
                       const MemoryHierarchy&) {
    ShapeMap shapes = infer_shapes(g);
    CountReport params = count_params(g, shapes);
    MemoryPlan plan;
    plan.precision = p;

    for (const auto& l : g.layers) {
        LayerFootprint f;
        if (l.inputs.empty()) {
            f.input_bytes = activation_bytes(p, g.input_shape.elems());
        } else {
            for (const auto& id : l.inputs)
                f.input_bytes += activation_bytes(p, shapes.at(id).elems());
        }
        f.output_bytes = activation_bytes(p, shapes.at(l.id).elems());
        std::uint64_t w_elems = 0, b_elems = 0;
        if (kind_has_weights(l.kind)) {
            std::uint64_t total = params.per_layer.at(l.id);
            b_elems = std::uint64_t(shapes.at(l.id).c);
            w_elems = total - b_elems;
            f.weight_bytes = weight_bytes(p, w_elems, b_elems);
            plan.total_weight_bytes += f.weight_bytes;
        }
        f.act_w_bytes = f.input_bytes + f.output_bytes + w_elems * elem_size(p);
        plan.footprints[l.id] = f;
        if (f.total() > plan.peak_layer_bytes) {
            plan.peak_layer_bytes = f.total();
            plan.peak_act_w_bytes = f.act_w_bytes;
            plan.peak_layer_id = l.id;
        }
    }

    plan.peak_bytes = plan.peak_layer_bytes;
    if (strategy.kind == StrategyKind::NoTiling) {
        // the input image is never freed and the OS presses on the same L2
        plan.input_image_bytes = activation_bytes(p, g.input_shape.elems());
        plan.resident_overhead_bytes = strategy.resident_overhead_bytes;
        plan.peak_bytes += plan.input_image_bytes + plan.resident_overhead_bytes;
    }
    return plan;
}

std::optional<TileSchedule> tile_layer(const Layer& l, const TensorShape& in_shape,
                                       const TensorShape& out_shape, Precision p,
                                       std::uint64_t l1_budget, bool double_buffer) {
    std::uint64_t w_elems = 0, b_elems = 0;
    if (kind_has_weights(l.kind)) {
        Graph probe;
        probe.input_shape = in_shape;
        Layer lp = l;
        lp.inputs.clear();
        probe.layers.push_back(lp);
        ShapeMap shapes = infer_shapes(probe);
        split_params(probe, shapes, probe.layers[0], w_elems, b_elems);
    }
    const std::uint64_t wb = weight_bytes(p, w_elems, b_elems);
    const std::uint64_t db = double_buffer ? 2 : 1;

    // fully connected consumes the whole input; it fits or it does not
    if (l.kind == LayerKind::FullyConnected) {
        std::uint64_t need = wb + db * (activation_bytes(p, in_shape.elems()) +
                                        activation_bytes(p, out_shape.elems()));
        if (need > l1_budget) return std::nullopt;
        return TileSchedule{l.id, out_shape.h, out_shape.w, need, 1};
    }

    const bool windowed = kind_has_kernel(l.kind);
    // pointwise kinds stream element tiles; add needs both operands, concat's
    // operand tiles together span the output channels
    int in_c = in_shape.c;
    if (l.kind == LayerKind::Add) in_c = in_shape.c * std::max<int>(2, int(l.inputs.size()));
    if (l.kind == LayerKind::Concat) in_c = out_shape.c;
    auto bytes_for = [&](int th, int tw) -> std::uint64_t {
        std::uint64_t ib, ob;
        if (windowed) {
            std::uint64_t ih = std::uint64_t(th - 1) * l.sh + l.kh;  // halo included
            std::uint64_t iw = std::uint64_t(tw - 1) * l.sw + l.kw;
            ih = std::min<std::uint64_t>(ih, in_shape.h);
            iw = std::min<std::uint64_t>(iw, in_shape.w);
            ib = activation_bytes(p, ih * iw * in_shape.c);
        } else {
            ib = activation_bytes(p, std::uint64_t(th) * tw * in_c);
        }
        ob = activation_bytes(p, std::uint64_t(th) * tw * out_shape.c);
        return wb + db * (ib + ob);
    };

    int th = out_shape.h, tw = out_shape.w;
    while (bytes_for(th, tw) > l1_budget) {
        if (th == 1 && tw == 1) return std::nullopt;  // weights cannot stream
        if (th >= tw)
            th = (th + 1) / 2;
        else
            tw = (tw + 1) / 2;
    }
    TileSchedule ts;
    ts.layer_id = l.id;
    ts.tile_h = th;
    ts.tile_w = tw;
    ts.buffers_bytes = bytes_for(th, tw);
    ts.n_tiles = ((out_shape.h + th - 1) / th) * ((out_shape.w + tw - 1) / tw);
    return ts;
}

void check_deployable(MemoryPlan& plan, const Graph& g, const MemoryHierarchy& hier,
                      const DeploymentStrategy& strategy) {
    if (strategy.kind == StrategyKind::NoTiling) {
        if (plan.peak_bytes <= hier.l2_bytes) {
            plan.verdict = Verdict::Deployable;
        } else {
            plan.verdict = Verdict::NotDeployable;
            plan.reason = "peak memory " + std::to_string(plan.peak_bytes) + " B exceeds L2 " +
                          std::to_string(hier.l2_bytes) + " B";
        }
        return;
    }

    ShapeMap shapes = infer_shapes(g);
    for (const auto& l : g.layers) {
        TensorShape in = l.inputs.empty() ? g.input_shape : shapes.at(l.inputs[0]);
        auto ts = tile_layer(l, in, shapes.at(l.id), plan.precision, hier.l1_bytes,
                             strategy.double_buffer);
        if (!ts) {
            plan.verdict = Verdict::NotDeployable;
            plan.reason = "layer '" + l.id + "' does not tile into L1 (weights must stream)";
            return;
        }
        plan.tiles[l.id] = *ts;
    }
    if (plan.total_weight_bytes > hier.offchip_flash_bytes) {
        plan.verdict = Verdict::NotDeployable;
        plan.reason = "weights exceed off-chip flash";
        return;
    }
    plan.verdict = Verdict::Deployable;
}

MemoryPlan plan_graph(const Graph& g, Precision p, const DeviceProfile& profile) {
    MemoryPlan plan = peak_memory(g, p, profile.strategy, profile.hierarchy);
    check_deployable(plan, g, profile.hierarchy, profile.strategy);
    return plan;
}

}  // namespace tinyplan
