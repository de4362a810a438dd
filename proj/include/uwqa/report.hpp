#pragma once

// Dataset-level statistics and deterministic export of every artifact.

#include "uwqa/csv.hpp"
#include "uwqa/det_eval.hpp"
#include "uwqa/qindex.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace uwqa {

struct MeanStd {
    double mean = 0.0;
    double std = 0.0; // population
    bool operator==(const MeanStd&) const = default;
};

struct ModelSummary {
    std::string model;
    std::array<MeanStd, 4> metrics{};
    std::size_t count = 0;
    bool operator==(const ModelSummary&) const = default;
};

// Per model, per metric mean and population standard deviation.
std::vector<ModelSummary> summarize_models(const MetricTable& table);

struct Correlation {
    double pearson_r = 0.0;
    double spearman_rho = 0.0;
};

// Throws Error{OutOfRange} for fewer than 3 points, Error{ConstantInput} for zero variance.
Correlation correlate(std::span<const double> x, std::span<const double> y);
// Fractional ranks (1-based, ties share the average rank).
std::vector<double> fractional_ranks(std::span<const double> values);

struct ScatterPoint {
    std::string model;
    double metric_mean = 0.0;
    double map = 0.0;
};

struct CorrelationResult {
    std::string metric;
    std::size_t n = 0;
    std::vector<ScatterPoint> scatter;
    // Set when the coefficients could not be computed (too few points, flat axis).
    std::optional<Correlation> coefficients;
    std::string error;
};

struct ScatterReport {
    std::vector<CorrelationResult> metrics; // one per metric, in metric order
    std::vector<std::string> excluded;      // models without an eval, or evals without a summary
};

// Throws Error{NoOverlap} when no model id is shared.
ScatterReport build_scatter(const std::vector<ModelSummary>& summaries, const std::map<std::string, double>& overall_map);
ScatterReport build_scatter(const std::vector<ModelSummary>& summaries, const std::map<std::string, EvalResult>& evals);

// One exported table: written as <name>.csv and <name>.json.
struct Artifact {
    std::string name;
    csv::Table table;
    nlohmann::json json;
};

struct ManifestEntry {
    std::string file;
    std::size_t rows = 0;
    std::string sha256;
};

struct Manifest {
    std::vector<ManifestEntry> entries;
    nlohmann::json to_json() const;
};

inline constexpr std::string_view manifest_file_name = "report.manifest.json";

std::string sha256_hex(std::string_view data);

// Writes every artifact plus report.manifest.json; identical inputs give
// identical bytes. Throws Error{Io} naming the failing path.
Manifest export_report(const std::vector<Artifact>& artifacts, const std::filesystem::path& dest);

} // namespace uwqa
