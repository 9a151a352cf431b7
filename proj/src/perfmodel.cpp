#include "tinyplan/perfmodel.hpp"

#include <cmath>

namespace tinyplan {

PerfFit fit_perf(const std::vector<std::pair<double, double>>& pts) {
    if (pts.size() < 2) throw DomainError("perf fit needs at least two points");
    double sx = 0, sy = 0;
    for (const auto& [x, y] : pts) {
        sx += x;
        sy += y;
    }
    const double n = double(pts.size());
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (const auto& [x, y] : pts) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if (sxx == 0.0) throw DomainError("perf fit points have identical MACs");
    const double slope = sxy / sxx;  // ms per MMAC
    const double intercept = my - slope * mx;
    if (slope <= 0.0) throw DomainError("perf fit yields non-positive throughput");
    PerfFit fit;
    fit.throughput_mmac_per_ms = 1.0 / slope;
    fit.overhead_ms = intercept;
    for (const auto& [x, y] : pts)
        fit.rel_residuals.push_back((intercept + slope * x - y) / y);
    return fit;
}

double estimate_latency_ms(double total_mmac, const PerfProfile& p) {
    return p.overhead_ms + total_mmac / p.throughput_mmac_per_ms;
}

EnergyEstimate estimate_inference_energy(double latency_ms, const PerfProfile& p,
                                         const EnergyBudget& b, bool radio_enabled) {
    EnergyEstimate e;
    if (b.per_event_mj.count("compute")) {
        e.compute_source = "per_event_budget";
        for (const auto& [k, v] : b.per_event_mj) {
            if (k == "radio") continue;
            e.items_mj[k] = v;
        }
    } else {
        e.compute_source = "power_x_latency";
        e.items_mj["compute"] = p.active_power_mw * latency_ms / 1000.0;
        for (const auto& [k, v] : b.per_event_mj) {
            if (k == "radio") continue;
            e.items_mj[k] = v;
        }
    }
    if (radio_enabled) {
        auto it = b.per_event_mj.find("radio");
        e.items_mj["radio"] = it == b.per_event_mj.end() ? 0.0 : it->second;
    }
    for (const auto& [k, v] : e.items_mj) e.total_mj += v;
    return e;
}

double battery_joules(const EnergyBudget& b) {
    return b.battery_mah * b.battery_v * 3.6;  // mAh * V = mWh; *3.6 J/mWh
}

int estimate_battery_days(const EnergyBudget& b, const DutyCycle& duty, double e_inference_mj) {
    const double daily_j = b.sleep_j_per_day + duty.inferences_per_day * e_inference_mj / 1000.0;
    if (daily_j <= 0.0) throw DomainError("daily energy drain is zero");
    return int(std::lround(battery_joules(b) / daily_j));
}

}  // namespace tinyplan
