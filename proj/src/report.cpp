#include "tinyplan/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tinyplan::report {

using nlohmann::json;

static std::string fmt(double v, int prec = 2) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(prec);
    ss << v;
    return ss.str();
}

json analyze_doc(const Graph& g) {
    ShapeMap shapes = infer_shapes(g);
    CountReport macs = count_macs(g, shapes);
    CountReport params = count_params(g, shapes);
    json per_layer = json::array();
    for (const auto& l : g.layers) {
        const TensorShape& s = shapes.at(l.id);
        per_layer.push_back({{"id", l.id},
                             {"kind", kind_name(l.kind)},
                             {"out_shape", {s.h, s.w, s.c}},
                             {"macs", macs.per_layer.at(l.id)},
                             {"params", params.per_layer.at(l.id)}});
    }
    json doc;
    doc["command"] = "analyze";
    doc["model"] = g.name;
    doc["input_shape"] = {g.input_shape.h, g.input_shape.w, g.input_shape.c};
    doc["total_macs"] = macs.total;
    doc["total_mmac"] = double(macs.total) / 1e6;
    doc["total_params"] = params.total;
    doc["mac_convention"] = "activations, pooling, add and concat count as 0 MACs";
    doc["per_layer"] = per_layer;
    return doc;
}

std::string analyze_text(const json& doc) {
    std::ostringstream out;
    out << "model    " << doc["model"].get<std::string>() << "\n";
    auto is_ = doc["input_shape"];
    out << "input    " << is_[0] << "x" << is_[1] << "x" << is_[2] << "\n";
    out << "macs     " << doc["total_macs"].get<std::uint64_t>() << " ("
        << fmt(doc["total_mmac"].get<double>(), 2) << " MMAC)\n";
    out << "params   " << doc["total_params"].get<std::uint64_t>() << "\n";
    out << "note     " << doc["mac_convention"].get<std::string>() << "\n";
    out << "\n  layer                             kind              out          macs      params\n";
    for (const auto& l : doc["per_layer"]) {
        std::ostringstream shp;
        shp << l["out_shape"][0] << "x" << l["out_shape"][1] << "x" << l["out_shape"][2];
        char buf[160];
        std::snprintf(buf, sizeof buf, "  %-33s %-17s %-10s %9llu %9llu\n",
                      l["id"].get<std::string>().c_str(), l["kind"].get<std::string>().c_str(),
                      shp.str().c_str(),
                      (unsigned long long)l["macs"].get<std::uint64_t>(),
                      (unsigned long long)l["params"].get<std::uint64_t>());
        out << buf;
    }
    return out.str();
}

json plan_doc(const Graph& g, const MemoryPlan& plan, const DeviceProfile& prof) {
    json doc;
    doc["command"] = "plan";
    doc["model"] = g.name;
    doc["profile"] = prof.name;
    doc["precision"] = precision_name(plan.precision);
    doc["strategy"] = prof.strategy.kind == StrategyKind::NoTiling ? "no_tiling" : "tiled";
    doc["verdict"] = plan.verdict == Verdict::Deployable ? "deployable" : "not_deployable";
    if (!plan.reason.empty()) doc["reason"] = plan.reason;
    doc["peak_bytes"] = plan.peak_bytes;
    doc["peak_kb"] = double(plan.peak_bytes) / 1024.0;
    doc["peak_layer"] = plan.peak_layer_id;
    doc["peak_layer_bytes"] = plan.peak_layer_bytes;
    doc["peak_act_w_bytes"] = plan.peak_act_w_bytes;
    doc["input_image_bytes"] = plan.input_image_bytes;
    doc["resident_overhead_bytes"] = plan.resident_overhead_bytes;
    doc["total_weight_bytes"] = plan.total_weight_bytes;
    json per_layer = json::array();
    for (const auto& l : g.layers) {
        const LayerFootprint& f = plan.footprints.at(l.id);
        json e = {{"id", l.id},
                  {"input_bytes", f.input_bytes},
                  {"weight_bytes", f.weight_bytes},
                  {"output_bytes", f.output_bytes},
                  {"total_bytes", f.total()}};
        auto it = plan.tiles.find(l.id);
        if (it != plan.tiles.end())
            e["tile"] = {{"tile_h", it->second.tile_h},
                         {"tile_w", it->second.tile_w},
                         {"buffers_bytes", it->second.buffers_bytes},
                         {"n_tiles", it->second.n_tiles}};
        per_layer.push_back(e);
    }
    doc["per_layer"] = per_layer;
    return doc;
}

std::string plan_text(const json& doc) {
    std::ostringstream out;
    out << "model     " << doc["model"].get<std::string>() << "\n";
    out << "profile   " << doc["profile"].get<std::string>() << " ("
        << doc["strategy"].get<std::string>() << ", "
        << doc["precision"].get<std::string>() << ")\n";
    out << "peak      " << fmt(doc["peak_kb"].get<double>(), 1) << " KB at layer '"
        << doc["peak_layer"].get<std::string>() << "'";
    if (doc["input_image_bytes"].get<std::uint64_t>() > 0 ||
        doc["resident_overhead_bytes"].get<std::uint64_t>() > 0)
        out << " (+ image " << doc["input_image_bytes"].get<std::uint64_t>() << " B, overhead "
            << doc["resident_overhead_bytes"].get<std::uint64_t>() << " B)";
    out << "\n";
    out << "weights   " << doc["total_weight_bytes"].get<std::uint64_t>() << " B total\n";
    out << "verdict   " << doc["verdict"].get<std::string>();
    if (doc.contains("reason")) out << " -- " << doc["reason"].get<std::string>();
    out << "\n";
    return out.str();
}

json estimate_doc(const EstimateInputs& in) {
    json doc;
    doc["command"] = "estimate";
    doc["profile"] = in.profile.name;
    doc["engine"] = in.perf.engine;
    doc["precision"] = precision_name(in.perf.precision);
    doc["power_mw"] = in.perf.active_power_mw;
    json notes = json::array();

    double latency = 0.0;
    if (in.total_mmac) {
        latency = estimate_latency_ms(*in.total_mmac, in.perf);
        doc["model"] = in.model_name;
        doc["total_mmac"] = *in.total_mmac;
        doc["latency_ms"] = latency;
        doc["fps"] = 1000.0 / latency;
    }

    const EnergyBudget& budget = in.profile.energy;
    bool have_compute = budget.per_event_mj.count("compute") > 0;
    if (have_compute || in.total_mmac) {
        EnergyEstimate e = estimate_inference_energy(latency, in.perf, budget, in.radio);
        json items;
        for (const auto& [k, v] : e.items_mj) items[k] = v;
        doc["energy"] = {{"items_mj", items},
                         {"total_mj", e.total_mj},
                         {"compute_source", e.compute_source}};

        if (in.duty) {
            DutyCycle duty{*in.duty, in.radio};
            int days = estimate_battery_days(budget, duty, e.total_mj);
            double daily =
                budget.sleep_j_per_day + duty.inferences_per_day * e.total_mj / 1000.0;
            doc["battery"] = {{"days", days},
                              {"battery_j", battery_joules(budget)},
                              {"daily_j", daily},
                              {"inferences_per_day", *in.duty},
                              {"radio", in.radio}};
            auto reported = in.radio ? in.profile.paper_days_radio : in.profile.paper_days_no_radio;
            if (reported) {
                json cmp = {{"reported_days", *reported}, {"computed_days", days}};
                cmp["derivable"] = std::abs(*reported - days) <= 1;
                if (!cmp["derivable"].get<bool>())
                    notes.push_back("reported lifetime of " + std::to_string(*reported) +
                                    " days is not derivable from the stated constants (computed " +
                                    std::to_string(days) + ")");
                doc["battery"]["reported"] = cmp;
            }
        }
    }

    if (budget.stated_wh) {
        double wh = budget.battery_mah * budget.battery_v / 1000.0;
        if (std::abs(*budget.stated_wh - wh) > 0.05)
            notes.push_back("stated battery capacity " + fmt(*budget.stated_wh, 1) +
                            " Wh conflicts with " + fmt(budget.battery_mah, 0) + " mAh x " +
                            fmt(budget.battery_v, 1) + " V = " + fmt(wh, 1) +
                            " Wh; the joule figure derived from mAh x V is used");
    }
    doc["notes"] = notes;
    return doc;
}

std::string estimate_text(const json& doc) {
    std::ostringstream out;
    out << "profile   " << doc["profile"].get<std::string>() << " ("
        << doc["engine"].get<std::string>() << ", " << doc["precision"].get<std::string>()
        << ", " << fmt(doc["power_mw"].get<double>(), 0) << " mW)\n";
    if (doc.contains("latency_ms")) {
        out << "model     " << doc["model"].get<std::string>() << " ("
            << fmt(doc["total_mmac"].get<double>(), 2) << " MMAC)\n";
        out << "latency   " << fmt(doc["latency_ms"].get<double>(), 1) << " ms  ("
            << fmt(doc["fps"].get<double>(), 1) << " frame/s)\n";
    }
    if (doc.contains("energy")) {
        out << "energy    " << fmt(doc["energy"]["total_mj"].get<double>(), 2)
            << " mJ per inference (compute from "
            << doc["energy"]["compute_source"].get<std::string>() << ")\n";
        for (const auto& [k, v] : doc["energy"]["items_mj"].items())
            out << "            " << k << ": " << fmt(v.get<double>(), 2) << " mJ\n";
    }
    if (doc.contains("battery")) {
        out << "battery   " << doc["battery"]["days"].get<int>() << " days ("
            << doc["battery"]["inferences_per_day"].get<int>() << " inferences/day, radio "
            << (doc["battery"]["radio"].get<bool>() ? "on" : "off") << ", "
            << fmt(doc["battery"]["daily_j"].get<double>(), 2) << " J/day of "
            << fmt(doc["battery"]["battery_j"].get<double>(), 0) << " J)\n";
    }
    for (const auto& n : doc["notes"]) out << "note      " << n.get<std::string>() << "\n";
    return out.str();
}

json eval_doc(const detect::EvalResult& r, double iou_thr) {
    json doc;
    doc["command"] = "eval";
    doc["iou_thr"] = iou_thr;
    json ap;
    for (const auto& [cls, v] : r.ap_per_class) ap[std::to_string(cls)] = v;
    doc["ap_per_class"] = ap;
    doc["map"] = r.map;
    return doc;
}

std::string eval_text(const json& doc) {
    std::ostringstream out;
    out << "mAP@" << fmt(doc["iou_thr"].get<double>(), 2) << "  "
        << fmt(doc["map"].get<double>(), 4) << "\n";
    for (const auto& [cls, v] : doc["ap_per_class"].items())
        out << "  class " << cls << "  AP " << fmt(v.get<double>(), 4) << "\n";
    return out.str();
}

json survey_doc(const std::vector<std::string>& model_paths,
                const std::vector<std::string>& profile_paths, std::optional<int> duty,
                bool radio) {
    json rows = json::array();
    for (const auto& mp : model_paths) {
        Graph g = load_model(mp);
        CountReport macs = count_macs(g);
        CountReport params = count_params(g);
        for (const auto& pp : profile_paths) {
            DeviceProfile prof = load_profile(pp);
            for (const auto& perf : prof.perf) {
                MemoryPlan plan = plan_graph(g, perf.precision, prof);
                json row;
                row["model"] = g.name;
                row["params"] = params.total;
                row["mmac"] = double(macs.total) / 1e6;
                row["profile"] = prof.name;
                row["engine"] = perf.engine;
                row["precision"] = precision_name(perf.precision);
                row["memory_kb"] = double(plan.peak_bytes) / 1024.0;
                row["verdict"] =
                    plan.verdict == Verdict::Deployable ? "deployable" : "not_deployable";
                if (plan.verdict == Verdict::Deployable) {
                    double lat = estimate_latency_ms(double(macs.total) / 1e6, perf);
                    row["latency_ms"] = lat;
                    row["fps"] = 1000.0 / lat;
                    row["power_mw"] = perf.active_power_mw;
                    EnergyEstimate e = estimate_inference_energy(lat, perf, prof.energy, radio);
                    row["energy_mj"] = e.total_mj;
                    if (duty)
                        row["battery_days"] =
                            estimate_battery_days(prof.energy, {*duty, radio}, e.total_mj);
                }
                rows.push_back(row);
            }
        }
    }
    // deterministic order independent of argument order
    std::vector<json> sorted(rows.begin(), rows.end());
    std::sort(sorted.begin(), sorted.end(), [](const json& a, const json& b) {
        auto key = [](const json& r) {
            return std::tuple(r["model"].get<std::string>(), r["profile"].get<std::string>(),
                              r["engine"].get<std::string>(), r["precision"].get<std::string>());
        };
        return key(a) < key(b);
    });
    json doc;
    doc["command"] = "report";
    doc["rows"] = sorted;
    return doc;
}

std::string survey_text(const json& doc) {
    std::ostringstream out;
    out << "model                    profile     engine   prec  params     MMAC    mem[KB]   "
           "verdict         lat[ms]  fps    P[mW]  E[mJ]  days\n";
    for (const auto& r : doc["rows"]) {
        char buf[240];
        std::string lat = r.contains("latency_ms") ? fmt(r["latency_ms"].get<double>(), 0) : "-";
        std::string fps = r.contains("fps") ? fmt(r["fps"].get<double>(), 1) : "-";
        std::string pw = r.contains("power_mw") ? fmt(r["power_mw"].get<double>(), 0) : "-";
        std::string e = r.contains("energy_mj") ? fmt(r["energy_mj"].get<double>(), 1) : "-";
        std::string days =
            r.contains("battery_days") ? std::to_string(r["battery_days"].get<int>()) : "-";
        std::snprintf(buf, sizeof buf,
                      "%-24s %-11s %-8s %-5s %-10llu %-7.2f %-9.1f %-15s %-8s %-6s %-6s %-6s %s\n",
                      r["model"].get<std::string>().c_str(),
                      r["profile"].get<std::string>().c_str(),
                      r["engine"].get<std::string>().c_str(),
                      r["precision"].get<std::string>().c_str(),
                      (unsigned long long)r["params"].get<std::uint64_t>(),
                      r["mmac"].get<double>(), r["memory_kb"].get<double>(),
                      r["verdict"].get<std::string>().c_str(), lat.c_str(), fps.c_str(),
                      pw.c_str(), e.c_str(), days.c_str());
        out << buf;
    }
    return out.str();
}

}  // namespace tinyplan::report
