#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "tinyplan/graph.hpp"

namespace tinyplan {

struct MemoryHierarchy {
    std::uint64_t l1_bytes = 0;
    std::uint64_t l2_bytes = 0;
    std::uint64_t onchip_flash_bytes = 0;
    std::uint64_t offchip_ram_bytes = 0;
    std::uint64_t offchip_flash_bytes = 0;
};

enum class StrategyKind { NoTiling, Tiled };

struct DeploymentStrategy {
    StrategyKind kind = StrategyKind::NoTiling;
    std::uint64_t resident_overhead_bytes = 0;  // OS + runtime, no_tiling only
    bool double_buffer = false;
};

enum class Precision { F32, F16, I8 };

const char* precision_name(Precision p);
Precision precision_from_name(const std::string& s);

// Element sizes per precision. In i8 mode weights are 1 byte and biases are
// int32; f16 stores everything in 2 bytes.
std::uint64_t activation_bytes(Precision p, std::uint64_t elems);
std::uint64_t weight_bytes(Precision p, std::uint64_t weight_elems, std::uint64_t bias_elems);

struct LayerFootprint {
    std::uint64_t input_bytes = 0;
    std::uint64_t weight_bytes = 0;  // weights + bias
    std::uint64_t output_bytes = 0;
    std::uint64_t act_w_bytes = 0;   // input + output + weights, bias excluded

    std::uint64_t total() const { return input_bytes + weight_bytes + output_bytes; }
};

struct TileSchedule {
    std::string layer_id;
    int tile_h = 0;
    int tile_w = 0;
    std::uint64_t buffers_bytes = 0;
    int n_tiles = 0;
};

enum class Verdict { Unset, Deployable, NotDeployable };

struct MemoryPlan {
    Precision precision = Precision::I8;
    std::map<std::string, LayerFootprint> footprints;
    std::uint64_t peak_bytes = 0;        // includes image + overhead for no_tiling
    std::uint64_t peak_layer_bytes = 0;  // the max layer footprint alone
    std::uint64_t peak_act_w_bytes = 0;  // peak layer's activation+weight component
    std::string peak_layer_id;
    std::uint64_t input_image_bytes = 0;
    std::uint64_t resident_overhead_bytes = 0;
    std::uint64_t total_weight_bytes = 0;
    Verdict verdict = Verdict::Unset;
    std::string reason;
    std::map<std::string, TileSchedule> tiles;  // tiled strategy only
};

// Per-layer footprints and the peak under the given strategy. Verdict is left
// Unset; check_deployable fills it in.
MemoryPlan peak_memory(const Graph& g, Precision p, const DeploymentStrategy& strategy,
                       const MemoryHierarchy& hier);

// no_tiling: deployable iff peak <= L2 (boundary inclusive). tiled: deployable
// iff every layer tiles into L1 and the weights fit off-chip flash.
void check_deployable(MemoryPlan& plan, const Graph& g, const MemoryHierarchy& hier,
                      const DeploymentStrategy& strategy);

// Largest output tile fitting the L1 budget, halving the larger dimension
// first. Double buffering doubles the streaming activation tiles; the weights
// are loaded once and kept resident. nullopt = untileable.
std::optional<TileSchedule> tile_layer(const Layer& l, const TensorShape& in_shape,
                                       const TensorShape& out_shape, Precision p,
                                       std::uint64_t l1_budget, bool double_buffer);

struct DeviceProfile;  // profile.hpp

MemoryPlan plan_graph(const Graph& g, Precision p, const DeviceProfile& profile);

}  // namespace tinyplan
