#pragma once

// Key/value configuration file:
//
//   # comment
//   key = value
//   uiqm_weights = 0.0282 0.2953 3.5753
//
// Unknown keys are rejected. Every key is optional; missing keys keep the
// built-in defaults, which equal config/default.cfg.

#include "uwqa/det_eval.hpp"
#include "uwqa/metrics.hpp"
#include "uwqa/qindex.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace uwqa {

struct ToolkitConfig {
    MetricConfig metrics;
    QIndexOptions qindex;
    AuditOptions audit;
    int histogram_bins = 20;
};

ToolkitConfig parse_config(std::string_view text, std::string_view origin = "<config>");
ToolkitConfig load_config(const std::filesystem::path& path);
// The path from --config, else $UWQA_CONFIG, else built-in defaults.
ToolkitConfig resolve_config(const std::optional<std::filesystem::path>& explicit_path);
std::string render_config(const ToolkitConfig& cfg);

} // namespace uwqa
