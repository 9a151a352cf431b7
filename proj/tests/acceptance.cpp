// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failed criteria. Run through ctest or directly.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "tinyplan/detect.hpp"
#include "tinyplan/exec.hpp"
#include "tinyplan/perfmodel.hpp"
#include "tinyplan/planner.hpp"
#include "tinyplan/profile.hpp"
#include "tinyplan/report.hpp"

using namespace tinyplan;
using tputil::fixture;

namespace {

int failures = 0;
std::vector<std::string> details;

void report_line(int idx, const char* name, bool ok) {
    std::printf("[%s] %d. %s\n", ok ? "PASS" : "FAIL", idx, name);
    if (!ok) ++failures;
    for (const auto& d : details) std::printf("       %s\n", d.c_str());
    details.clear();
}

bool expect(bool cond, const std::string& what) {
    if (!cond) details.push_back("failed: " + what);
    return cond;
}

bool near(double got, double want, double rel, const std::string& what) {
    bool ok = std::abs(got - want) <= rel * std::abs(want);
    if (!ok)
        details.push_back("failed: " + what + " (got " + std::to_string(got) + ", want " +
                          std::to_string(want) + " within " + std::to_string(rel * 100) + "%)");
    return ok;
}

// ---- criterion 1: battery arithmetic ---------------------------------------

bool criterion_battery() {
    bool ok = true;
    DeviceProfile gap9 = load_profile(fixture("profiles/gap9.json"));
    DeviceProfile stm32 = load_profile(fixture("profiles/stm32h747.json"));
    const PerfProfile* ne16 = gap9.find_perf("ne16", Precision::I8);
    const PerfProfile* cpu = stm32.find_perf("cpu", Precision::I8);
    if (!ne16 || !cpu) return false;

    // gap9: explicit per-event budget drives the energy
    EnergyEstimate e_radio = estimate_inference_energy(147.0, *ne16, gap9.energy, true);
    EnergyEstimate e_plain = estimate_inference_energy(147.0, *ne16, gap9.energy, false);
    ok &= expect(estimate_battery_days(gap9.energy, {1440, true}, e_radio.total_mj) == 267,
                 "gap9 + radio = 267 days");
    ok &= expect(estimate_battery_days(gap9.energy, {1440, false}, e_plain.total_mj) == 283,
                 "gap9 without radio = 283 days");

    // portenta: no per-event compute entry, so power x latency supplies it
    // (498 mW x fitted latency of the 5.88-MMAC flagship)
    double lat = estimate_latency_ms(5.88, *cpu);
    EnergyEstimate p_radio = estimate_inference_energy(lat, *cpu, stm32.energy, true);
    ok &= expect(p_radio.compute_source == "power_x_latency", "portenta energy uses power x latency");
    int pr_days = estimate_battery_days(stm32.energy, {1440, true}, p_radio.total_mj);
    ok &= expect(pr_days == 51, "portenta + radio = 51 days (got " + std::to_string(pr_days) + ")");

    EnergyEstimate p_plain = estimate_inference_energy(lat, *cpu, stm32.energy, false);
    int pn_days = estimate_battery_days(stm32.energy, {1440, false}, p_plain.total_mj);
    ok &= expect(std::abs(pn_days - 52) <= 1,
                 "portenta without radio = 52 +/- 1 (got " + std::to_string(pn_days) + ")");

    // the report flags the published 58-day figure as non-derivable
    report::EstimateInputs in{stm32, *cpu, 5.88, 1440, false, "fomo-flagship"};
    nlohmann::json doc = report::estimate_doc(in);
    bool flagged = false;
    if (doc.contains("battery") && doc["battery"].contains("reported"))
        flagged = doc["battery"]["reported"]["derivable"].get<bool>() == false &&
                  doc["battery"]["reported"]["reported_days"].get<int>() == 58;
    ok &= expect(flagged, "report flags the 58-day figure as non-derivable");
    return ok;
}

// ---- criterion 2: energy consistency ----------------------------------------

bool criterion_energy() {
    bool ok = true;
    DeviceProfile gap9 = load_profile(fixture("profiles/gap9.json"));
    const PerfProfile* ne16 = gap9.find_perf("ne16", Precision::I8);
    if (!ne16) return false;
    double pt = ne16->active_power_mw * 147.0 / 1000.0;  // 34 mW x 147 ms
    ok &= near(pt, 4.90, 0.05, "34 mW x 147 ms vs component sum 4.90 mJ");
    EnergyEstimate e = estimate_inference_energy(147.0, *ne16, gap9.energy, true);
    ok &= expect(std::abs(e.total_mj - 6.9) < 1e-9, "component sum + radio = 6.9 mJ exactly");
    double items = 0;
    for (const auto& [k, v] : e.items_mj) items += v;
    ok &= expect(items == e.total_mj, "itemization sums exactly to the total");
    return ok;
}

// ---- criterion 3: latency model fit -------------------------------------------

bool criterion_latency_fit() {
    bool ok = true;
    DeviceProfile stm32 = load_profile(fixture("profiles/stm32h747.json"));
    PerfFit fit = fit_perf(stm32.calibration_points);
    for (size_t i = 0; i < fit.rel_residuals.size(); ++i)
        ok &= expect(std::abs(fit.rel_residuals[i]) < 0.05,
                     "fit residual " + std::to_string(i) + " below 5%");

    DeviceProfile gap9 = load_profile(fixture("profiles/gap9.json"));
    struct Row {
        const char* engine;
        Precision prec;
        double latency, fps;
    };
    const Row rows[] = {{"ne16", Precision::I8, 147, 6.8},
                        {"cluster", Precision::I8, 249, 4.0},
                        {"cluster", Precision::F16, 462, 2.1}};
    for (const Row& r : rows) {
        const PerfProfile* p = gap9.find_perf(r.engine, r.prec);
        if (!expect(p != nullptr, std::string("perf entry for ") + r.engine)) {
            ok = false;
            continue;
        }
        double lat = estimate_latency_ms(584.0, *p);
        ok &= near(lat, r.latency, 1e-6, std::string(r.engine) + " latency");
        ok &= expect(std::abs(1000.0 / lat - r.fps) <= 0.1,
                     std::string(r.engine) + " frame rate within rounding");
    }
    return ok;
}

// ---- criterion 4: deployability gate -------------------------------------------

bool criterion_gate() {
    bool ok = true;
    DeviceProfile stm32 = load_profile(fixture("profiles/stm32h747.json"));
    DeviceProfile gap9 = load_profile(fixture("profiles/gap9.json"));

    struct Row {
        double kb;
        bool deployable;
    };
    const Row rows[] = {{1070, false}, {398, true}, {1045, false}, {416, true},
                        {2654, false}, {802, true}, {2862, false}, {854, true}};
    for (const Row& r : rows) {
        MemoryPlan p;
        p.peak_bytes = std::uint64_t(r.kb * 1024);
        check_deployable(p, Graph{}, stm32.hierarchy, {StrategyKind::NoTiling, 0, false});
        ok &= expect((p.verdict == Verdict::Deployable) == r.deployable,
                     "verdict for " + std::to_string(int(r.kb)) + " KB");
    }

    // bundled fixtures against the published memory column (+-10%)
    struct Cell {
        const char* model;
        Precision prec;
        double kb;
    };
    const Cell cells[] = {
        {"models/fomo_mnv2_035_96_g.json", Precision::F32, 1070},
        {"models/fomo_mnv2_035_96_g.json", Precision::I8, 398},
        {"models/fomo_mnv2_035_96_rgb.json", Precision::F32, 1045},
        {"models/fomo_mnv2_035_96_rgb.json", Precision::I8, 416},
        {"models/fomo_mnv2_035_160_g.json", Precision::F32, 2654},
        {"models/fomo_mnv2_035_160_g.json", Precision::I8, 802},
        {"models/fomo_mnv2_035_160_rgb.json", Precision::F32, 2862},
        {"models/fomo_mnv2_035_160_rgb.json", Precision::I8, 854},
    };
    for (const Cell& c : cells) {
        Graph g = load_model(fixture(c.model));
        MemoryPlan p = plan_graph(g, c.prec, stm32);
        ok &= near(p.peak_bytes / 1024.0, c.kb, 0.10,
                   std::string(c.model) + " " + precision_name(c.prec) + " memory");
        bool should_deploy = c.kb * 1024 <= 1048576;
        ok &= expect((p.verdict == Verdict::Deployable) == should_deploy,
                     std::string(c.model) + " " + precision_name(c.prec) + " fixture verdict");
    }

    Graph ssd = load_model(fixture("models/ssdlite_mnv3_320x240.json"));
    MemoryPlan p8 = plan_graph(ssd, Precision::I8, gap9);
    MemoryPlan p16 = plan_graph(ssd, Precision::F16, gap9);
    ok &= near(p8.peak_bytes / 1024.0, 1811, 0.10, "ssdlite i8 memory");
    ok &= near(p16.peak_bytes / 1024.0, 3622, 0.10, "ssdlite f16 memory");
    ok &= expect(p16.peak_act_w_bytes == 2 * p8.peak_act_w_bytes,
                 "f16 activation+weight bytes exactly 2x i8");
    ok &= expect(p16.peak_bytes == 2 * p8.peak_bytes, "f16 peak exactly 2x i8 peak (3622/1811)");
    ok &= expect(p8.verdict == Verdict::Deployable && p16.verdict == Verdict::Deployable,
                 "ssdlite deploys on gap9 in both precisions");
    return ok;
}

// ---- criterion 5: model analysis --------------------------------------------------

bool criterion_analysis() {
    bool ok = true;
    Graph ssd = load_model(fixture("models/ssdlite_mnv3_320x240.json"));
    ok &= near(double(count_params(ssd).total), 3.44e6, 0.02, "ssdlite params vs 3.44M");
    ok &= near(double(count_macs(ssd).total), 584e6, 0.02, "ssdlite MACs vs 584M");

    struct Row {
        const char* file;
        double mmac;
        double params;
    };
    const Row rows[] = {{"models/fomo_mnv2_035_96_g.json", 5.21e6, 20532},
                        {"models/fomo_mnv2_035_96_rgb.json", 5.88e6, 20820},
                        {"models/fomo_mnv2_035_160_g.json", 14.49e6, 20532},
                        {"models/fomo_mnv2_035_160_rgb.json", 16.33e6, 20820}};
    for (const Row& r : rows) {
        Graph g = load_model(fixture(r.file));
        ok &= near(double(count_macs(g).total), r.mmac, 0.05, std::string(r.file) + " MACs");
        ok &= near(double(count_params(g).total), r.params, 0.02, std::string(r.file) + " params");
    }
    std::uint64_t delta = count_params(load_model(fixture("models/fomo_mnv2_035_96_rgb.json"))).total -
                          count_params(load_model(fixture("models/fomo_mnv2_035_96_g.json"))).total;
    ok &= expect(delta == 288, "rgb/gray parameter delta is exactly 288");
    return ok;
}

// ---- criterion 6: quantization / executor oracle ------------------------------------

bool criterion_quant_exec() {
    bool ok = true;
    int valid = 0;
    for (std::uint32_t seed = 1; valid < 100 && seed < 400; ++seed) {
        auto setup = tputil::random_quant_setup(seed);
        if (!setup) continue;
        ++valid;
        auto& s = *setup;
        const QuantParams eff = effective_qparams(s.graph, s.qparams);
        exec::Tensor in{s.graph.input_shape, s.calib[0]};
        exec::CodeTensor qin = exec::quantize_input(in, eff.at("input"));
        exec::Trace ti = exec::run_int8(s.qg, qin);
        exec::Trace tf = exec::run_fakequant(s.graph, s.weights, s.qparams, in);
        for (const auto& l : s.graph.layers) {
            const QuantParam& oq = eff.at(l.id);
            const auto& codes = ti.codes.at(l.id).data;
            const auto& fv = tf.values.at(l.id).data;
            for (size_t i = 0; i < codes.size(); ++i) {
                if (std::abs(int(codes[i]) - int(quantize_value(fv[i], oq))) > 1) {
                    details.push_back("seed " + std::to_string(seed) + " layer " + l.id +
                                      " disagrees by more than one step");
                    ok = false;
                }
            }
        }
    }
    ok &= expect(valid >= 100, "at least 100 random graphs compared");

    // quantize round-trip bound over the representable window
    std::mt19937 rng(99);
    QuantParam qp{8.0 / 255, 3, Scheme::Affine};
    std::uniform_real_distribution<float> d(float((-128 - qp.zero_point) * qp.scale),
                                            float((127 - qp.zero_point) * qp.scale));
    for (int i = 0; i < 10000; ++i) {
        float x = d(rng);
        float back = dequantize_value(quantize_value(x, qp), qp);
        if (std::abs(back - x) > 0.5 * qp.scale + 1e-7) {
            details.push_back("round-trip error above scale/2");
            ok = false;
            break;
        }
    }

    // tiled vs whole-layer execution, float and int8, bit-exact
    std::optional<tputil::QuantSetup> setup;
    for (std::uint32_t seed = 7; seed < 400; ++seed) {
        auto cand = tputil::random_quant_setup(seed, 1);
        if (cand && cand->graph.layers[0].kind == LayerKind::Conv2d &&
            cand->graph.layers[0].kh > 1) {
            setup = std::move(cand);
            break;
        }
    }
    if (!expect(setup.has_value(), "found a windowed conv setup for the tiling oracle"))
        return false;
    auto& s = *setup;
    const Layer& conv = s.graph.layers[0];
    exec::Tensor in{s.graph.input_shape, s.calib[0]};
    exec::Tensor whole = exec::run_layer_float(conv, {in}, s.weights);
    exec::CodeTensor qin = exec::quantize_input(in, s.qg.qparams.at("input"));
    exec::CodeTensor whole8 = exec::run_layer_int8(s.qg, conv, {qin});

    auto slice_of = [&](const auto& src, int r0, int r1, int c0, int c1, auto& dst) {
        dst.shape = {r1 - r0, c1 - c0, src.shape.c};
        dst.data.resize(size_t(dst.shape.elems()));
        for (int y = r0; y < r1; ++y)
            for (int x = c0; x < c1; ++x)
                for (int ch = 0; ch < src.shape.c; ++ch)
                    dst.data[((y - r0) * (c1 - c0) + (x - c0)) * src.shape.c + ch] =
                        src.data[(y * src.shape.w + x) * src.shape.c + ch];
    };
    const int th = std::max(1, whole.shape.h / 2), tw = std::max(1, whole.shape.w / 2);
    bool tiles_match = true;
    for (int r0 = 0; r0 < whole.shape.h; r0 += th)
        for (int c0 = 0; c0 < whole.shape.w; c0 += tw) {
            int r1 = std::min(r0 + th, whole.shape.h), c1 = std::min(c0 + tw, whole.shape.w);
            int ir0 = r0 * conv.sh - conv.pad_t, ir1 = (r1 - 1) * conv.sh - conv.pad_t + conv.kh;
            int ic0 = c0 * conv.sw - conv.pad_l, ic1 = (c1 - 1) * conv.sw - conv.pad_l + conv.kw;
            Layer sub = conv;
            sub.pad_t = std::max(0, -ir0);
            sub.pad_l = std::max(0, -ic0);
            sub.pad_b = std::max(0, ir1 - in.shape.h);
            sub.pad_r = std::max(0, ic1 - in.shape.w);
            ir0 = std::max(ir0, 0);
            ic0 = std::max(ic0, 0);
            ir1 = std::min(ir1, in.shape.h);
            ic1 = std::min(ic1, in.shape.w);
            exec::Tensor fslice;
            slice_of(in, ir0, ir1, ic0, ic1, fslice);
            exec::Tensor ftile = exec::run_layer_float(sub, {fslice}, s.weights);
            exec::CodeTensor qslice;
            slice_of(qin, ir0, ir1, ic0, ic1, qslice);
            exec::CodeTensor qtile = exec::run_layer_int8(s.qg, sub, {qslice});
            for (int y = r0; y < r1 && tiles_match; ++y)
                for (int x = c0; x < c1 && tiles_match; ++x)
                    for (int ch = 0; ch < whole.shape.c; ++ch) {
                        size_t wi = (size_t(y) * whole.shape.w + x) * whole.shape.c + ch;
                        size_t tix = (size_t(y - r0) * ftile.shape.w + (x - c0)) * ftile.shape.c + ch;
                        if (whole.data[wi] != ftile.data[tix] ||
                            whole8.data[wi] != qtile.data[tix]) {
                            tiles_match = false;
                            break;
                        }
                    }
        }
    ok &= expect(tiles_match, "tiled execution bit-identical to untiled (float and int8)");
    return ok;
}

// ---- criterion 7: detection oracles ---------------------------------------------------

bool criterion_detection() {
    bool ok = true;
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> sc(0, 1);
    std::uniform_int_distribution<int> cls(0, 2);
    for (int t = 0; t < 1000 && ok; ++t) {
        std::vector<detect::Detection> d;
        for (int i = 0; i < 6; ++i) d.push_back({tputil::random_box(rng), cls(rng), sc(rng)});
        auto a = detect::nms(d, 0.5, 0.25, 4);
        auto b = tputil::nms_oracle(d, 0.5, 0.25, 4);
        if (a.size() != b.size()) {
            ok = expect(false, "nms size mismatch at instance " + std::to_string(t));
            break;
        }
        for (size_t i = 0; i < a.size(); ++i)
            if (a[i].score != b[i].score || a[i].class_id != b[i].class_id)
                ok = expect(false, "nms element mismatch at instance " + std::to_string(t));
    }

    std::uniform_int_distribution<int> ng(0, 4), nd(0, 6);
    for (int t = 0; t < 100 && ok; ++t) {
        std::map<std::string, std::vector<detect::Detection>> dets;
        std::map<std::string, std::vector<detect::GroundTruth>> gts;
        for (int img = 0; img < 10; ++img) {
            std::string id = "img" + std::to_string(img);
            for (int i = 0, n = ng(rng); i < n; ++i)
                gts[id].push_back({tputil::random_box(rng), cls(rng)});
            for (int i = 0, m = nd(rng); i < m; ++i)
                dets[id].push_back({tputil::random_box(rng), cls(rng), sc(rng)});
        }
        detect::EvalResult a = detect::evaluate_map(dets, gts, 0.5);
        detect::EvalResult b = tputil::map_oracle(dets, gts, 0.5);
        if (std::abs(a.map - b.map) >= 1e-9)
            ok = expect(false, "mAP disagrees with the naive evaluator at dataset " +
                                   std::to_string(t));
        for (const auto& [c, ap] : a.ap_per_class)
            if (std::abs(ap - b.ap_per_class.at(c)) >= 1e-9)
                ok = expect(false, "per-class AP disagrees at dataset " + std::to_string(t));
    }

    // the exact literal examples
    ok &= expect(detect::iou({0, 0, 2, 2}, {1, 1, 3, 3}) == 1.0 / 7, "iou((0,0,2,2),(1,1,3,3)) = 1/7");
    ok &= expect(detect::iou({0, 0, 2, 2}, {0, 0, 2, 2}) == 1.0, "identical boxes -> 1");
    ok &= expect(detect::iou({0, 0, 1, 1}, {5, 5, 6, 6}) == 0.0, "disjoint boxes -> 0");
    detect::FomoGrid g;
    g.gh = g.gw = 4;
    g.classes = 2;
    g.stride = 8;
    g.scores.assign(32, 0.f);
    g.scores[(1 * 4 + 1) * 2 + 1] = 1.0f;
    auto fd = detect::decode_fomo(g, 0.5);
    ok &= expect(fd.size() == 1 && fd[0].det.box.x1 == 8 && fd[0].det.box.y2 == 16 &&
                     fd[0].centroid_x == 12 && fd[0].centroid_y == 12,
                 "single-cell fomo geometry");
    detect::AnchorSpec spec;
    spec.feature_maps = {{2, 2, {0.3}, {1.0, 2.0}}};
    ok &= expect(detect::generate_anchors(spec).size() == 8, "2x2 grid x 1 scale x 2 ratios = 8");
    return ok;
}

}  // namespace

int main() {
    auto t0 = std::chrono::steady_clock::now();
    report_line(1, "battery arithmetic (267 / 283 / 51 / 52 +/- 1, 58 flagged)", criterion_battery());
    report_line(2, "energy consistency (34 mW x 147 ms ~ 4.90 mJ, +radio = 6.9 mJ)", criterion_energy());
    report_line(3, "latency model fit (<5% residuals; 147/249/462 ms; 6.8/4.0/2.1 fps)",
                criterion_latency_fit());
    report_line(4, "deployability gate (8 verdicts; memory column +-10%; f16 = 2x i8)",
                criterion_gate());
    report_line(5, "model analysis (3.44M/584M +-2%; 288 delta; FOMO totals)", criterion_analysis());
    report_line(6, "quantization/executor oracle (<=1 step x100 graphs; tiling bit-exact)",
                criterion_quant_exec());
    report_line(7, "detection oracles (nms x1000; mAP x100 to 1e-9; literal examples)",
                criterion_detection());
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool fast = secs < 300.0;
    std::printf("[%s] 8. desk-scale runtime (%.1f s < 300 s)\n", fast ? "PASS" : "FAIL", secs);
    if (!fast) ++failures;
    return failures;
}
