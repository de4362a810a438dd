#pragma once

// Batch commands behind the `uwqa` CLI. Each command reads its inputs, runs
// one stage of the workflow and writes its artifacts through export_report.

#include "uwqa/config.hpp"
#include "uwqa/io.hpp"
#include "uwqa/report.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace uwqa {

using LogSink = std::function<void(const std::string&)>;

// <root>/original/            unenhanced images
// <root>/<model>/             one directory per enhancer, same image stems
// <root>/ground_truth.json    optional
// <root>/detections/<model>.json  optional
struct DatasetLayout {
    std::filesystem::path root;
    std::vector<std::string> models;       // "original" first, then enhancers sorted
    std::vector<std::string> image_ids;    // stems from original/, sorted
    std::map<std::string, std::map<std::string, std::filesystem::path>> files; // model -> stem -> path

    std::filesystem::path ground_truth_path() const { return root / "ground_truth.json"; }
    std::filesystem::path detections_dir() const { return root / "detections"; }
    // Throws Error{UnknownModel} for an unknown model or image stem.
    std::filesystem::path image_path(const std::string& model, const std::string& image_id) const;
};

// Throws Error{Layout} when original/ is missing or a model directory does
// not hold exactly the original stems.
DatasetLayout scan_layout(const std::filesystem::path& root);

inline constexpr std::string_view metrics_journal_name = "metrics.manifest.jsonl";

struct MetricsRun {
    MetricTable table;
    std::size_t computed = 0;
    std::size_t skipped = 0;
    std::vector<std::string> failures; // "model/image: reason"
};

// Scores every (model, image). Rows already present in the journal under
// out_dir are reused; failed images are logged and skipped.
MetricsRun cmd_metrics(const DatasetLayout& layout, const ToolkitConfig& cfg, const std::filesystem::path& out_dir,
                       unsigned threads = 0, const LogSink& log = {});

struct QIndexRun {
    QIndexTable qindex;
    std::vector<DeltaRecord> deltas;
    std::vector<std::string> dropped_images;
};

QIndexRun cmd_qindex(const std::filesystem::path& metric_table, const ToolkitConfig& cfg, std::uint64_t seed,
                     const std::filesystem::path& out_dir, const LogSink& log = {});

std::vector<std::pair<std::string, EvalResult>> cmd_map(const std::filesystem::path& ground_truth,
                                                        const std::vector<std::filesystem::path>& detection_files,
                                                        const std::optional<std::vector<std::string>>& class_names,
                                                        io::BoxFormat format, const std::filesystem::path& out_dir);

ScatterReport cmd_correlate(const std::filesystem::path& summaries, const std::vector<std::filesystem::path>& eval_files,
                            const std::filesystem::path& out_dir);

// Detection files are given as "model=path" or as a path whose JSON names the model.
std::vector<AuditCandidate> cmd_audit(const std::filesystem::path& ground_truth,
                                      const std::vector<std::string>& detection_specs, const AuditOptions& options,
                                      io::BoxFormat format, const std::filesystem::path& out_dir);

} // namespace uwqa
