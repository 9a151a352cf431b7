#include "tinyplan/profile.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

namespace tinyplan {

using nlohmann::json;

const PerfProfile* DeviceProfile::find_perf(const std::string& engine,
                                            std::optional<Precision> precision) const {
    for (const auto& p : perf) {
        if (p.engine != engine) continue;
        if (precision && p.precision != *precision) continue;
        return &p;
    }
    return nullptr;
}

DeviceProfile load_profile(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError(path + ": file not found");
    std::stringstream ss;
    ss << f.rdbuf();
    json j;
    try {
        j = json::parse(ss.str());
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    try {
        DeviceProfile p;
        p.name = j.at("name").get<std::string>();
        const json& h = j.at("hierarchy");
        p.hierarchy.l1_bytes = h.at("l1").get<std::uint64_t>();
        p.hierarchy.l2_bytes = h.at("l2").get<std::uint64_t>();
        p.hierarchy.onchip_flash_bytes = h.value("flash", std::uint64_t(0));
        p.hierarchy.offchip_ram_bytes = h.value("ram", std::uint64_t(0));
        p.hierarchy.offchip_flash_bytes = h.value("offchip_flash", std::uint64_t(0));
        const json& s = j.at("strategy");
        std::string kind = s.at("kind").get<std::string>();
        if (kind == "no_tiling")
            p.strategy.kind = StrategyKind::NoTiling;
        else if (kind == "tiled")
            p.strategy.kind = StrategyKind::Tiled;
        else
            throw IoError(path + ": unknown strategy kind '" + kind + "'");
        p.strategy.resident_overhead_bytes = s.value("resident_overhead_bytes", std::uint64_t(0));
        p.strategy.double_buffer = s.value("double_buffer", false);
        if (p.strategy.kind == StrategyKind::Tiled) p.strategy.resident_overhead_bytes = 0;
        if (p.hierarchy.l1_bytes > p.hierarchy.l2_bytes)
            std::cerr << "warning: " << path << ": L1 (" << p.hierarchy.l1_bytes
                      << " B) larger than L2 (" << p.hierarchy.l2_bytes << " B)\n";
        for (const auto& pj : j.value("perf", json::array())) {
            PerfProfile pp;
            pp.engine = pj.at("engine").get<std::string>();
            pp.precision = precision_from_name(pj.at("precision").get<std::string>());
            pp.throughput_mmac_per_ms = pj.at("throughput_mmac_per_ms").get<double>();
            pp.overhead_ms = pj.value("overhead_ms", 0.0);
            pp.active_power_mw = pj.at("active_power_mw").get<double>();
            p.perf.push_back(pp);
        }
        for (const auto& c : j.value("calibration_points", json::array()))
            p.calibration_points.emplace_back(c.at(0).get<double>(), c.at(1).get<double>());
        if (j.contains("energy")) {
            const json& e = j["energy"];
            p.energy.battery_mah = e.value("battery_mah", 0.0);
            p.energy.battery_v = e.value("battery_v", 0.0);
            p.energy.sleep_j_per_day = e.value("sleep_j_per_day", 0.0);
            if (e.contains("per_event_mj"))
                for (const auto& [k, v] : e["per_event_mj"].items())
                    p.energy.per_event_mj[k] = v.get<double>();
            if (e.contains("stated_wh")) p.energy.stated_wh = e["stated_wh"].get<double>();
        }
        for (const auto& c : j.value("configurations", json::array())) {
            ClockConfig cc;
            cc.name = c.at("name").get<std::string>();
            cc.voltage_v = c.value("voltage_v", 0.0);
            cc.freq_cl_mhz = c.value("freq_cl_mhz", 0);
            cc.freq_fc_mhz = c.value("freq_fc_mhz", 0);
            p.configurations.push_back(cc);
        }
        if (j.contains("notes")) {
            const json& n = j["notes"];
            if (n.contains("paper_days_radio")) p.paper_days_radio = n["paper_days_radio"].get<int>();
            if (n.contains("paper_days_no_radio"))
                p.paper_days_no_radio = n["paper_days_no_radio"].get<int>();
        }
        return p;
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
}

}  // namespace tinyplan
