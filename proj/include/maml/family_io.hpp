// JSON persistence for task families and run configurations, and the CSV
// emitters. Families round-trip exactly: doubles serialize with
// shortest-round-trip precision and derived quantities (Gram caches, b_i)
// are recomputed deterministically on load.

#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "maml/task.hpp"
#include "maml/trainer.hpp"

namespace maml {

nlohmann::json family_to_json(const TaskDistribution& dist);
TaskDistribution family_from_json(const nlohmann::json& j);

void save_family(const TaskDistribution& dist, const std::filesystem::path& p);
TaskDistribution load_family(const std::filesystem::path& p);

nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

// Fixed-schema metrics CSV: k,grad_norm,loss,beta,hat_L,elapsed_ms.
std::string metrics_to_csv(const RunMetrics& m);

// Debug dump of an inner path, one row per inner step.
std::string inner_path_to_csv(const InnerPath& path);

// Summary document: config echo, zeta, final norms, bound values, counters.
nlohmann::json run_summary_json(const RunConfig& cfg, const RunMetrics& m);

void write_text_file(const std::filesystem::path& p, const std::string& text);
std::string read_text_file(const std::filesystem::path& p);

// 17-significant-digit float formatting shared by all CSV writers.
std::string format_double(double v);

}  // namespace maml
