#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tinyplan/perfmodel.hpp"
#include "tinyplan/planner.hpp"

namespace tinyplan {

struct ClockConfig {
    std::string name;
    double voltage_v = 0.0;
    int freq_cl_mhz = 0;
    int freq_fc_mhz = 0;
};

struct DeviceProfile {
    std::string name;
    MemoryHierarchy hierarchy;
    DeploymentStrategy strategy;
    std::vector<PerfProfile> perf;
    std::vector<std::pair<double, double>> calibration_points;  // (mmac, latency_ms)
    EnergyBudget energy;
    std::vector<ClockConfig> configurations;
    std::optional<int> paper_days_radio;     // reported lifetimes to cross-check
    std::optional<int> paper_days_no_radio;

    // First perf entry matching engine (and precision, when given).
    const PerfProfile* find_perf(const std::string& engine,
                                 std::optional<Precision> precision = {}) const;
};

DeviceProfile load_profile(const std::string& path);

}  // namespace tinyplan
