#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tinyplan/detect.hpp"
#include "tinyplan/exec.hpp"
#include "tinyplan/perfmodel.hpp"
#include "tinyplan/planner.hpp"
#include "tinyplan/profile.hpp"

namespace tinyplan::report {

// Every command builds a JSON document and renders text from that same
// document, so the two outputs always carry identical numbers. No timestamps.

nlohmann::json analyze_doc(const Graph& g);
std::string analyze_text(const nlohmann::json& doc);

nlohmann::json plan_doc(const Graph& g, const MemoryPlan& plan, const DeviceProfile& prof);
std::string plan_text(const nlohmann::json& doc);

struct EstimateInputs {
    const DeviceProfile& profile;
    const PerfProfile& perf;
    std::optional<double> total_mmac;  // from --model
    std::optional<int> duty;           // inferences per day
    bool radio = false;
    std::string model_name;
};
nlohmann::json estimate_doc(const EstimateInputs& in);
std::string estimate_text(const nlohmann::json& doc);

nlohmann::json eval_doc(const detect::EvalResult& r, double iou_thr);
std::string eval_text(const nlohmann::json& doc);

nlohmann::json survey_doc(const std::vector<std::string>& model_paths,
                          const std::vector<std::string>& profile_paths,
                          std::optional<int> duty, bool radio);
std::string survey_text(const nlohmann::json& doc);

}  // namespace tinyplan::report
