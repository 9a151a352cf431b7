#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "tinyplan/container.hpp"
#include "tinyplan/report.hpp"

using namespace tinyplan;
using nlohmann::json;

namespace {

struct OutputOpts {
    bool as_json = false;
    bool quiet = false;
    std::string out_path;
};

void add_output_flags(CLI::App* cmd, OutputOpts& o) {
    cmd->add_flag("--json", o.as_json, "emit the JSON report instead of text");
    cmd->add_flag("--quiet", o.quiet, "suppress stdout (still writes --out)");
    cmd->add_option("--out", o.out_path, "write the report to a file");
}

void emit(const OutputOpts& o, const json& doc, const std::string& text) {
    const std::string payload = o.as_json ? doc.dump(1) + "\n" : text;
    if (!o.out_path.empty()) {
        std::ofstream f(o.out_path);
        if (!f) throw IoError(o.out_path + ": cannot open for writing");
        f << payload;
    }
    if (!o.quiet) std::cout << payload;
}

Precision engine_default_precision(const std::string& engine, const DeviceProfile& prof) {
    // ne16 is int8-only; otherwise take the profile's first entry for the engine
    if (engine == "ne16") return Precision::I8;
    const PerfProfile* p = prof.find_perf(engine);
    if (p) return p->precision;
    return Precision::I8;
}

int run(int argc, char** argv) {
    CLI::App app{"deployment planning and detection post-processing for tiny CNN detectors"};
    app.require_subcommand(1);

    // analyze ---------------------------------------------------------------
    auto* analyze = app.add_subcommand("analyze", "shapes, MAC and parameter counts");
    std::string model_path;
    OutputOpts an_out;
    analyze->add_option("--model", model_path, "model JSON file")->required();
    add_output_flags(analyze, an_out);
    analyze->callback([&] {
        Graph g = load_model(model_path);
        auto errs = validate(g);
        if (!errs.empty()) {
            std::string msg = "invalid model:";
            for (const auto& e : errs) msg += "\n  " + e;
            throw DomainError(msg);
        }
        json doc = report::analyze_doc(g);
        emit(an_out, doc, report::analyze_text(doc));
    });

    // quantize ----------------------------------------------------------------
    auto* quantize = app.add_subcommand("quantize", "post-training int8 quantization");
    std::string q_model, q_weights, q_calib, q_out, q_params_out;
    int calib_size = 0;
    OutputOpts q_report;
    quantize->add_option("--model", q_model, "model JSON file")->required();
    quantize->add_option("--weights", q_weights, "float weights container")->required();
    quantize->add_option("--calib", q_calib, "calibration inputs container")->required();
    quantize->add_option("--calib-size", calib_size,
                         "use only the first N calibration inputs (default: all)");
    quantize->add_option("--out", q_out, "output container for int8 weights")->required();
    quantize->add_option("--out-qparams", q_params_out,
                         "output JSON for scales/zero-points/requant (default <out>.qparams.json)");
    quantize->add_flag("--json", q_report.as_json, "emit the JSON report instead of text");
    quantize->add_flag("--quiet", q_report.quiet, "suppress stdout");
    quantize->callback([&] {
        Graph g = load_model(q_model);
        FloatTensors weights = to_float_map(read_container(q_weights));
        std::vector<std::vector<float>> inputs;
        for (const auto& t : read_container(q_calib)) {
            if (t.dtype != DType::F32) throw IoError(q_calib + ": calibration inputs must be f32");
            inputs.push_back(t.f32());
            if (calib_size > 0 && int(inputs.size()) >= calib_size) break;
        }
        CalibStats stats = collect_calibration_stats(g, weights, inputs);
        QuantParams qp = derive_qparams(stats, default_schemes(g));
        QuantizedGraph qg = quantize_graph(g, weights, qp);

        std::vector<NamedTensor> out_tensors;
        for (const auto& [id, w] : qg.weights) {
            NamedTensor t;
            t.id = id;
            t.dtype = DType::I8;
            t.shape = {int(w.size())};
            t.data = w;
            out_tensors.push_back(std::move(t));
        }
        for (const auto& [id, b] : qg.biases) {
            NamedTensor t;
            t.id = id;
            t.dtype = DType::I32;
            t.shape = {int(b.size())};
            t.data = b;
            out_tensors.push_back(std::move(t));
        }
        write_container(q_out, out_tensors);

        json qdoc;
        qdoc["command"] = "quantize";
        qdoc["model"] = g.name;
        qdoc["calibration_inputs"] = inputs.size();
        json tensors;
        for (const auto& [id, p] : qg.qparams)
            tensors[id] = {{"scale", p.scale},
                           {"zero_point", p.zero_point},
                           {"scheme", p.scheme == Scheme::Affine ? "affine" : "symmetric"}};
        qdoc["tensors"] = tensors;
        json rq;
        for (const auto& [id, rs] : qg.requant) {
            json list = json::array();
            for (const auto& r : rs) list.push_back({{"mantissa", r.mantissa}, {"shift", r.shift}});
            rq[id] = list;
        }
        qdoc["requant"] = rq;
        std::string params_path = q_params_out.empty() ? q_out + ".qparams.json" : q_params_out;
        {
            std::ofstream f(params_path);
            if (!f) throw IoError(params_path + ": cannot open for writing");
            f << qdoc.dump(1) << "\n";
        }
        std::ostringstream text;
        text << "quantized " << g.name << " with " << inputs.size() << " calibration inputs\n"
             << "weights   " << q_out << "\n"
             << "qparams   " << params_path << "\n";
        emit(q_report, qdoc, text.str());
    });

    // plan --------------------------------------------------------------------
    auto* plan = app.add_subcommand("plan", "peak memory and deployability");
    std::string p_model, p_profile, p_prec = "i8";
    OutputOpts p_out;
    plan->add_option("--model", p_model, "model JSON file")->required();
    plan->add_option("--profile", p_profile, "device profile JSON")->required();
    plan->add_option("--precision", p_prec, "f32|f16|i8 (default i8)");
    add_output_flags(plan, p_out);
    plan->callback([&] {
        Graph g = load_model(p_model);
        DeviceProfile prof = load_profile(p_profile);
        MemoryPlan mp = plan_graph(g, precision_from_name(p_prec), prof);
        json doc = report::plan_doc(g, mp, prof);
        emit(p_out, doc, report::plan_text(doc));
    });

    // estimate ------------------------------------------------------------------
    auto* estimate = app.add_subcommand("estimate", "latency, power, energy, battery life");
    std::string e_profile, e_engine, e_prec, e_model;
    int e_duty = -1;
    bool e_radio = false, e_no_radio = false;
    OutputOpts e_out;
    estimate->add_option("--profile", e_profile, "device profile JSON")->required();
    estimate->add_option("--engine", e_engine, "cpu|cluster|ne16")->required();
    estimate->add_option("--precision", e_prec, "f32|f16|i8 (default: engine's entry)");
    estimate->add_option("--model", e_model, "model JSON (enables the latency estimate)");
    estimate->add_option("--duty", e_duty, "inferences per day (enables battery life)");
    estimate->add_flag("--radio", e_radio, "include the radio transmission energy");
    estimate->add_flag("--no-radio", e_no_radio, "exclude the radio energy (default)");
    add_output_flags(estimate, e_out);
    estimate->callback([&] {
        DeviceProfile prof = load_profile(e_profile);
        Precision prec = e_prec.empty() ? engine_default_precision(e_engine, prof)
                                        : precision_from_name(e_prec);
        const PerfProfile* perf = prof.find_perf(e_engine, prec);
        if (!perf)
            throw DomainError("profile '" + prof.name + "' has no perf entry for engine '" +
                              e_engine + "' at " + precision_name(prec));
        report::EstimateInputs in{prof, *perf, {}, {}, e_radio && !e_no_radio, ""};
        if (!e_model.empty()) {
            Graph g = load_model(e_model);
            in.total_mmac = double(count_macs(g).total) / 1e6;
            in.model_name = g.name;
        }
        if (e_duty >= 0) in.duty = e_duty;
        if (in.duty && !in.total_mmac && !prof.energy.per_event_mj.count("compute"))
            throw DomainError(
                "battery estimate needs either --model (power x latency) or a per-event compute "
                "energy in the profile");
        json doc = report::estimate_doc(in);
        emit(e_out, doc, report::estimate_text(doc));
    });

    // detect ----------------------------------------------------------------------
    auto* det = app.add_subcommand("detect", "decode raw detector outputs to detections");
    std::string d_mode, d_raw, d_anchors, d_out_path = "detections.jsonl", d_image = "image";
    double d_iou = 0.5, d_score = 0.25;
    int d_topk = 100, d_stride = 8;
    OutputOpts d_out;
    det->add_option("--mode", d_mode, "ssd|fomo")->required();
    det->add_option("--raw", d_raw, "container with raw outputs")->required();
    det->add_option("--anchors", d_anchors, "anchor spec JSON (ssd mode)");
    det->add_option("--iou-thr", d_iou, "NMS IoU threshold (default 0.5)");
    det->add_option("--score-thr", d_score, "score threshold (default 0.25)");
    det->add_option("--top-k", d_topk, "keep at most K detections (default 100)");
    det->add_option("--stride", d_stride, "grid stride in pixels (fomo mode, default 8)");
    det->add_option("--image-id", d_image, "image id for the emitted detections");
    det->add_option("--out", d_out_path, "output detections JSONL (default detections.jsonl)");
    det->add_flag("--json", d_out.as_json, "print the report as JSON");
    det->add_flag("--quiet", d_out.quiet, "suppress stdout");
    det->callback([&] {
        auto tensors = read_container(d_raw);
        auto find = [&](const std::string& id) -> const NamedTensor* {
            for (const auto& t : tensors)
                if (t.id == id) return &t;
            return nullptr;
        };
        std::vector<detect::Detection> dets;
        if (d_mode == "ssd") {
            if (d_anchors.empty()) throw IoError("ssd mode needs --anchors");
            const NamedTensor* boxes = find("boxes");
            const NamedTensor* scores = find("scores");
            if (!boxes || !scores)
                throw IoError(d_raw + ": expected f32 tensors 'boxes' [N,4] and 'scores' [N,C+1]");
            detect::AnchorSpec spec = detect::load_anchor_spec(d_anchors);
            auto anchors = detect::generate_anchors(spec);
            int classes = int(scores->elems() / anchors.size()) - 1;
            auto raw = detect::decode_ssd(boxes->f32(), scores->f32(), anchors, spec, classes);
            dets = detect::nms(raw, d_iou, d_score, d_topk);
        } else if (d_mode == "fomo") {
            const NamedTensor* grid = find("grid");
            if (!grid || grid->shape.size() != 3)
                throw IoError(d_raw + ": expected f32 tensor 'grid' [gh,gw,classes]");
            detect::FomoGrid fg;
            fg.gh = grid->shape[0];
            fg.gw = grid->shape[1];
            fg.classes = grid->shape[2];
            fg.stride = d_stride;
            fg.scores = grid->f32();
            for (const auto& fd : detect::decode_fomo(fg, d_score)) dets.push_back(fd.det);
        } else {
            throw CLI::ValidationError("--mode", "must be ssd or fomo");
        }
        std::map<std::string, std::vector<detect::Detection>> by_image{{d_image, dets}};
        detect::save_detections(d_out_path, by_image);
        json doc;
        doc["command"] = "detect";
        doc["mode"] = d_mode;
        doc["detections"] = dets.size();
        doc["out"] = d_out_path;
        std::ostringstream text;
        text << dets.size() << " detections -> " << d_out_path << "\n";
        emit(d_out, doc, text.str());
    });

    // eval --------------------------------------------------------------------------
    auto* eval = app.add_subcommand("eval", "mAP@IoU against ground truth");
    std::string v_dets, v_gts;
    double v_iou = 0.5;
    OutputOpts v_out;
    eval->add_option("--detections", v_dets, "detections JSONL")->required();
    eval->add_option("--truths", v_gts, "ground-truth JSONL")->required();
    eval->add_option("--iou-thr", v_iou, "match threshold (default 0.5)");
    add_output_flags(eval, v_out);
    eval->callback([&] {
        auto dets = detect::load_detections(v_dets);
        auto gts = detect::load_ground_truths(v_gts);
        detect::EvalResult r = detect::evaluate_map(dets, gts, v_iou);
        json doc = report::eval_doc(r, v_iou);
        emit(v_out, doc, report::eval_text(doc));
    });

    // report -------------------------------------------------------------------------
    auto* survey = app.add_subcommand("report", "survey table over models x profiles");
    std::vector<std::string> r_models, r_profiles;
    int r_duty = -1;
    bool r_radio = false;
    OutputOpts r_out;
    survey->add_option("--models", r_models, "model JSON files")->required()->delimiter(',');
    survey->add_option("--profiles", r_profiles, "device profile JSONs")->required()->delimiter(',');
    survey->add_option("--duty", r_duty, "inferences per day (adds a battery column)");
    survey->add_flag("--radio", r_radio, "include radio energy in the battery column");
    add_output_flags(survey, r_out);
    survey->callback([&] {
        std::optional<int> duty;
        if (r_duty >= 0) duty = r_duty;
        json doc = report::survey_doc(r_models, r_profiles, duty, r_radio);
        emit(r_out, doc, report::survey_text(doc));
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;  // --help exits 0; usage errors exit 2
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
