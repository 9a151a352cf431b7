#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tinyplan/planner.hpp"

namespace tinyplan {

struct PerfProfile {
    std::string engine;  // "cpu", "cluster", "ne16"
    Precision precision = Precision::I8;
    double throughput_mmac_per_ms = 1.0;
    double overhead_ms = 0.0;  // absorbs the idle/startup periods
    double active_power_mw = 1.0;
};

struct EnergyBudget {
    double battery_mah = 0.0;
    double battery_v = 0.0;
    double sleep_j_per_day = 0.0;
    std::map<std::string, double> per_event_mj;  // compute, memory, camera, radio, ...
    std::optional<double> stated_wh;             // flagged when it conflicts with mAh*V
};

struct DutyCycle {
    int inferences_per_day = 0;
    bool radio_enabled = false;
};

struct PerfFit {
    double throughput_mmac_per_ms = 0.0;
    double overhead_ms = 0.0;
    std::vector<double> rel_residuals;  // (predicted-actual)/actual per point
};

// Least-squares affine fit latency = overhead + mmac/throughput.
// Throws DomainError with < 2 points or all-identical mmac values.
PerfFit fit_perf(const std::vector<std::pair<double, double>>& mmac_latency_points);

double estimate_latency_ms(double total_mmac, const PerfProfile& p);

struct EnergyEstimate {
    std::map<std::string, double> items_mj;  // itemized; sums exactly to total
    double total_mj = 0.0;
    std::string compute_source;  // "per_event_budget" or "power_x_latency"
};

// compute = per-event budget entries (compute [+ memory]) when present, else
// active_power * latency; camera and other per-event items always included;
// radio only when enabled.
EnergyEstimate estimate_inference_energy(double latency_ms, const PerfProfile& p,
                                         const EnergyBudget& b, bool radio_enabled);

double battery_joules(const EnergyBudget& b);

// days = battery_J / (sleep_J + n * e_mJ/1000), rounded to the nearest day.
int estimate_battery_days(const EnergyBudget& b, const DutyCycle& duty, double e_inference_mj);

}  // namespace tinyplan
