#pragma once

// File formats: CSV tables (six significant digits) with JSON mirrors (full
// precision), the ground-truth / detection JSON schema, and audit candidates.

#include "uwqa/det_eval.hpp"
#include "uwqa/qindex.hpp"
#include "uwqa/report.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace uwqa::io {

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json(const std::filesystem::path& path);

// --- metric tables --------------------------------------------------------
csv::Table metric_table_csv(const MetricTable& table);
nlohmann::json metric_table_json(const MetricTable& table);
MetricTable metric_table_from_csv(const csv::Table& table);
MetricTable metric_table_from_json(const nlohmann::json& j);
// Dispatches on extension (.csv or .json).
MetricTable load_metric_table(const std::filesystem::path& path);
Artifact metric_table_artifact(const MetricTable& table, std::string name = "metric_table");

// --- model summaries ------------------------------------------------------
Artifact summaries_artifact(const std::vector<ModelSummary>& summaries, std::string name = "model_summaries");
std::vector<ModelSummary> summaries_from_csv(const csv::Table& table);
std::vector<ModelSummary> summaries_from_json(const nlohmann::json& j);
std::vector<ModelSummary> load_summaries(const std::filesystem::path& path);

// --- Q-index outputs ------------------------------------------------------
Artifact qindex_artifact(const QIndexTable& qt, std::string name = "qindex");
Artifact deltas_artifact(const std::vector<DeltaRecord>& deltas, std::string name = "delta_qindex");
Artifact bin_samples_artifact(const QIndexTable& qt, std::uint64_t seed, std::string name = "bin_samples");
Artifact distributions_artifact(const QIndexTable& qt, const std::vector<DeltaRecord>& deltas, int bins,
                                std::string name = "distributions");
Artifact extrema_artifact(const QIndexTable& qt, std::string name = "qindex_extrema");

// --- detection schema -----------------------------------------------------
struct ImageInfo {
    ImageId id = 0;
    int width = 0;
    int height = 0;
    std::string file_name;
};

struct GroundTruth {
    std::vector<ClassInfo> classes;
    std::vector<ImageInfo> images;
    std::vector<Annotation> annotations;

    const ImageInfo* find_image(ImageId id) const;
};

enum class BoxFormat { Corners, XYWH };

GroundTruth parse_ground_truth(const nlohmann::json& j, BoxFormat format = BoxFormat::Corners);
nlohmann::json ground_truth_json(const GroundTruth& gt);
GroundTruth load_ground_truth(const std::filesystem::path& path, BoxFormat format = BoxFormat::Corners);

struct DetectionFile {
    std::string model; // from the file's "model" field, else the file stem
    std::vector<Detection> detections;
};

// Validates boxes, confidences and (when gt is given) image ids and classes.
DetectionFile parse_detections(const nlohmann::json& j, const GroundTruth* gt, BoxFormat format = BoxFormat::Corners);
DetectionFile load_detections(const std::filesystem::path& path, const GroundTruth* gt,
                              BoxFormat format = BoxFormat::Corners);
nlohmann::json detections_json(const DetectionFile& file);

BoundingBox parse_box(const nlohmann::json& j, BoxFormat format, const std::string& context);
nlohmann::json box_json(const BoundingBox& box);

// --- evaluation tables (rows = models) ------------------------------------
struct EvalTableRow {
    std::string model;
    std::vector<std::optional<double>> per_class; // parallel to EvalTable::classes
    double overall = 0.0;
};

struct EvalTable {
    std::vector<std::string> classes;
    std::vector<EvalTableRow> rows;

    std::map<std::string, double> overall_by_model() const;
};

EvalTable eval_table(const std::vector<std::pair<std::string, EvalResult>>& results);
Artifact eval_artifact(const std::vector<std::pair<std::string, EvalResult>>& results, std::string name = "map_50_95");
Artifact eval_table_artifact(const EvalTable& table, std::string name = "map_50_95");
EvalTable eval_table_from_csv(const csv::Table& table);
EvalTable load_eval_table(const std::filesystem::path& path);

// --- correlation ----------------------------------------------------------
Artifact correlation_artifact(const ScatterReport& report, std::string name = "correlation");
Artifact scatter_artifact(const ScatterReport& report, std::string name = "scatter");

// --- audit candidates -----------------------------------------------------
std::string_view to_string(AuditStatus status);
AuditStatus parse_status(std::string_view text);
nlohmann::json candidate_json(const AuditCandidate& c);
AuditCandidate candidate_from_json(const nlohmann::json& j);
Artifact candidates_artifact(const std::vector<AuditCandidate>& candidates, std::string name = "audit_candidates");
std::vector<AuditCandidate> load_candidates(const std::filesystem::path& path);

} // namespace uwqa::io
