#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "test_util.hpp"
#include "tinyplan/exec.hpp"
#include "tinyplan/planner.hpp"
#include "tinyplan/profile.hpp"

using namespace tinyplan;
using tputil::fixture;

namespace {

Graph toy_conv_graph() {
    Graph g;
    g.name = "toy";
    g.input_shape = {4, 4, 1};
    Layer c;
    c.id = "c";
    c.kind = LayerKind::Conv2d;
    c.kh = c.kw = 3;
    c.sh = c.sw = 1;
    c.pad_t = c.pad_b = c.pad_l = c.pad_r = 1;
    c.out_channels = 8;
    g.layers = {c};
    return g;
}

DeploymentStrategy bare_no_tiling() { return {StrategyKind::NoTiling, 0, false}; }

}  // namespace

TEST_CASE("toy footprint: 16 + (72 + 32) + 128 bytes") {
    Graph g = toy_conv_graph();
    MemoryPlan p = peak_memory(g, Precision::I8, bare_no_tiling(), {});
    const LayerFootprint& f = p.footprints.at("c");
    CHECK(f.input_bytes == 16);
    CHECK(f.weight_bytes == 72 + 32);  // 72 int8 weights, 8 int32 biases
    CHECK(f.output_bytes == 128);
    CHECK(f.total() == 248);
}

TEST_CASE("f32 scales activations and weights by exactly 4x over i8") {
    Graph g = toy_conv_graph();
    MemoryPlan p8 = peak_memory(g, Precision::I8, bare_no_tiling(), {});
    MemoryPlan p32 = peak_memory(g, Precision::F32, bare_no_tiling(), {});
    CHECK(p32.footprints.at("c").act_w_bytes == 4 * p8.footprints.at("c").act_w_bytes);
}

TEST_CASE("deployability gate") {
    MemoryHierarchy stm32{16384, 1048576, 0, 0, 0};
    auto gate = [&](double kb) {
        MemoryPlan p;
        p.peak_bytes = std::uint64_t(kb * 1024);
        check_deployable(p, Graph{}, stm32, bare_no_tiling());
        return p.verdict;
    };
    SUBCASE("1070 KB exceeds the 1024 KB L2") { CHECK(gate(1070) == Verdict::NotDeployable); }
    SUBCASE("398 KB fits") { CHECK(gate(398) == Verdict::Deployable); }
    SUBCASE("peak == L2 exactly is deployable (inclusive boundary)") {
        CHECK(gate(1024) == Verdict::Deployable);
    }
    SUBCASE("every published STM32 row reproduces its verdict") {
        struct Row {
            double kb;
            Verdict v;
        };
        const Row rows[] = {{1070, Verdict::NotDeployable}, {398, Verdict::Deployable},
                            {1045, Verdict::NotDeployable}, {416, Verdict::Deployable},
                            {2654, Verdict::NotDeployable}, {802, Verdict::Deployable},
                            {2862, Verdict::NotDeployable}, {854, Verdict::Deployable}};
        for (const Row& r : rows) CHECK(gate(r.kb) == r.v);
    }
    SUBCASE("growing L2 never flips deployable to not-deployable") {
        for (double kb : {100.0, 500.0, 1024.0, 3000.0}) {
            bool was_deployable = false;
            for (std::uint64_t l2 = 1 << 16; l2 <= (std::uint64_t(1) << 23); l2 *= 2) {
                MemoryPlan p;
                p.peak_bytes = std::uint64_t(kb * 1024);
                check_deployable(p, Graph{}, {16384, l2, 0, 0, 0}, bare_no_tiling());
                bool d = p.verdict == Verdict::Deployable;
                if (was_deployable) CHECK(d);
                was_deployable = d;
            }
        }
    }
}

TEST_CASE("tile_layer") {
    SUBCASE("a layer that fits runs as a single full tile") {
        Layer c;
        c.id = "c";
        c.kind = LayerKind::Conv2d;
        c.kh = c.kw = 3;
        c.sh = c.sw = 1;
        c.pad_t = c.pad_b = c.pad_l = c.pad_r = 1;
        c.out_channels = 4;
        auto ts = tile_layer(c, {8, 8, 2}, {8, 8, 4}, Precision::I8, 1 << 20, false);
        REQUIRE(ts);
        CHECK(ts->tile_h == 8);
        CHECK(ts->tile_w == 8);
        CHECK(ts->n_tiles == 1);
    }
    SUBCASE("budget at half the full requirement accepts the first halving") {
        Layer p;
        p.id = "p";
        p.kind = LayerKind::MaxPool;  // no weights, so the requirement halves cleanly
        p.kh = p.kw = 1;
        p.sh = p.sw = 1;
        TensorShape io{8, 4, 2};
        std::uint64_t full = 2ull * 8 * 4 * 2;  // in + out
        auto ts = tile_layer(p, io, io, Precision::I8, full / 2, false);
        REQUIRE(ts);
        CHECK(ts->tile_h == 4);
        CHECK(ts->tile_w == 4);
        CHECK(ts->n_tiles == 2);
        CHECK(ts->buffers_bytes <= full / 2);
    }
    SUBCASE("pointwise conv whose weights alone bust the budget is untileable") {
        Layer c;
        c.id = "c";
        c.kind = LayerKind::Conv2d;
        c.kh = c.kw = 1;
        c.sh = c.sw = 1;
        c.out_channels = 256;
        auto ts = tile_layer(c, {16, 16, 256}, {16, 16, 256}, Precision::I8, 65536, false);
        CHECK(!ts);
    }
}

TEST_CASE("fixture memory against the published table") {
    DeviceProfile stm32 = load_profile(fixture("profiles/stm32h747.json"));
    DeviceProfile gap9 = load_profile(fixture("profiles/gap9.json"));

    SUBCASE("fomo 96x96x1 int8 lands within 10% of 398 KB and deploys") {
        Graph g = load_model(fixture("models/fomo_mnv2_035_96_g.json"));
        MemoryPlan p = plan_graph(g, Precision::I8, stm32);
        CHECK(p.verdict == Verdict::Deployable);
        CHECK(std::abs(p.peak_bytes / 1024.0 - 398) / 398 < 0.10);
    }
    SUBCASE("fomo 160x160x3 float32 is not deployable on the stm32") {
        Graph g = load_model(fixture("models/fomo_mnv2_035_160_rgb.json"));
        MemoryPlan p = plan_graph(g, Precision::F32, stm32);
        CHECK(p.verdict == Verdict::NotDeployable);
    }
    SUBCASE("ssdlite on gap9: 1811 KB i8 / 3622 KB f16, exact 2x, deployable") {
        Graph g = load_model(fixture("models/ssdlite_mnv3_320x240.json"));
        MemoryPlan p8 = plan_graph(g, Precision::I8, gap9);
        MemoryPlan p16 = plan_graph(g, Precision::F16, gap9);
        CHECK(p8.verdict == Verdict::Deployable);
        CHECK(p16.verdict == Verdict::Deployable);
        CHECK(std::abs(p8.peak_bytes / 1024.0 - 1811) / 1811 < 0.10);
        CHECK(std::abs(p16.peak_bytes / 1024.0 - 3622) / 3622 < 0.10);
        CHECK(p16.peak_act_w_bytes == 2 * p8.peak_act_w_bytes);
        CHECK(p8.tiles.size() == g.layers.size());
    }
}

TEST_CASE("f16 doubles the i8 activation+weight component on any graph") {
    for (std::uint32_t seed : {2u, 9u, 31u}) {
        std::mt19937 rng(seed);
        Graph g = tputil::random_graph(rng, 5);
        MemoryPlan p8 = peak_memory(g, Precision::I8, bare_no_tiling(), {});
        MemoryPlan p16 = peak_memory(g, Precision::F16, bare_no_tiling(), {});
        for (const auto& l : g.layers)
            CHECK(p16.footprints.at(l.id).act_w_bytes == 2 * p8.footprints.at(l.id).act_w_bytes);
    }
}

TEST_CASE("tile-by-tile execution is bit-identical to whole-layer execution") {
    std::mt19937 rng(123);
    Graph g;
    g.input_shape = {12, 12, 3};
    Layer c;
    c.id = "c";
    c.kind = LayerKind::Conv2d;
    c.kh = c.kw = 3;
    c.sh = c.sw = 1;
    c.pad_t = c.pad_b = c.pad_l = c.pad_r = 1;
    c.out_channels = 4;
    g.layers = {c};
    FloatTensors w = tputil::random_weights(g, rng);
    exec::Tensor in{g.input_shape, tputil::random_input(g, rng)};

    exec::Tensor whole = exec::run_layer_float(c, {in}, w);

    // force several tiles
    auto ts = tile_layer(c, g.input_shape, whole.shape, Precision::F32, 600, false);
    REQUIRE(ts);
    CHECK(ts->n_tiles > 1);

    exec::Tensor stitched{whole.shape, std::vector<float>(whole.data.size(), -1e9f)};
    for (int r0 = 0; r0 < whole.shape.h; r0 += ts->tile_h) {
        for (int c0 = 0; c0 < whole.shape.w; c0 += ts->tile_w) {
            int r1 = std::min(r0 + ts->tile_h, whole.shape.h);
            int c1 = std::min(c0 + ts->tile_w, whole.shape.w);
            // input rows needed, with the halo, clipped at the borders
            int in_r0 = r0 * c.sh - c.pad_t, in_r1 = (r1 - 1) * c.sh - c.pad_t + c.kh;
            int in_c0 = c0 * c.sw - c.pad_l, in_c1 = (c1 - 1) * c.sw - c.pad_l + c.kw;
            Layer sub = c;
            sub.pad_t = std::max(0, -in_r0);
            sub.pad_l = std::max(0, -in_c0);
            in_r0 = std::max(in_r0, 0);
            in_c0 = std::max(in_c0, 0);
            sub.pad_b = std::max(0, in_r1 - in.shape.h);
            sub.pad_r = std::max(0, in_c1 - in.shape.w);
            in_r1 = std::min(in_r1, in.shape.h);
            in_c1 = std::min(in_c1, in.shape.w);

            exec::Tensor slice{{in_r1 - in_r0, in_c1 - in_c0, in.shape.c}, {}};
            slice.data.resize(slice.shape.elems());
            for (int y = in_r0; y < in_r1; ++y)
                for (int x = in_c0; x < in_c1; ++x)
                    for (int ch = 0; ch < in.shape.c; ++ch)
                        slice.data[((y - in_r0) * slice.shape.w + (x - in_c0)) * slice.shape.c + ch] =
                            in.data[(y * in.shape.w + x) * in.shape.c + ch];

            exec::Tensor tile_out = exec::run_layer_float(sub, {slice}, w);
            REQUIRE(tile_out.shape.h == r1 - r0);
            REQUIRE(tile_out.shape.w == c1 - c0);
            for (int y = r0; y < r1; ++y)
                for (int x = c0; x < c1; ++x)
                    for (int ch = 0; ch < whole.shape.c; ++ch)
                        stitched.data[(y * whole.shape.w + x) * whole.shape.c + ch] =
                            tile_out.data[((y - r0) * tile_out.shape.w + (x - c0)) * tile_out.shape.c +
                                          ch];
        }
    }
    CHECK(stitched.data == whole.data);  // bitwise
}
