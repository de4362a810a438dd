#pragma once

// Fusion of the four metrics into a bounded quality index: per-model MAD
// outlier replacement, global min-max rescaling over every model, averaging.

#include "uwqa/metrics.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace uwqa {

inline constexpr std::string_view original_model_id = "original";

struct MetricRow {
    std::string model;
    std::string image_id;
    MetricVector metrics;
};

// Raw metric scores per (model, image). The unenhanced set is a model too.
class MetricTable {
public:
    // Throws Error{Schema} on a duplicate (model, image) pair or non-finite values.
    void add(const std::string& model, const std::string& image_id, const MetricVector& metrics);

    bool empty() const noexcept { return rows_.empty(); }
    const std::vector<MetricRow>& rows() const noexcept { return rows_; }
    // First-seen order.
    const std::vector<std::string>& models() const noexcept { return models_; }
    std::vector<std::string> image_ids(const std::string& model) const;
    bool contains(const std::string& model, const std::string& image_id) const;
    const MetricVector& at(const std::string& model, const std::string& image_id) const;

    // Throws Error{Schema} unless every model covers the same image-id set.
    void validate_aligned() const;
    // Restricts every model to the images present in all models.
    MetricTable aligned(std::vector<std::string>* dropped_images = nullptr) const;

    bool operator==(const MetricTable& other) const { return rows_ == other.rows_; }

private:
    std::vector<MetricRow> rows_;
    std::vector<std::string> models_;
    std::map<std::pair<std::string, std::string>, std::size_t> index_;
};

inline bool operator==(const MetricRow& a, const MetricRow& b)
{
    return a.model == b.model && a.image_id == b.image_id && a.metrics == b.metrics;
}

struct Extrema {
    double min = 0.0;
    double max = 0.0;
};

struct QIndexTable {
    std::vector<std::string> models;
    std::vector<std::string> image_ids;
    std::vector<std::vector<double>> q; // [model][image], each in [0, 1]
    std::array<Extrema, 4> global_extrema{};
    std::vector<std::array<std::size_t, 4>> replaced; // [model][metric]

    // Throws Error{UnknownModel}.
    std::size_t model_index(std::string_view model) const;
    double at(std::string_view model, std::string_view image_id) const;
};

struct DeltaRecord {
    std::string image_id;
    std::string model;
    double delta = 0.0;
};

// Where the global extrema are taken relative to outlier replacement.
enum class ExtremaOrder {
    AfterReplacement,  // default; keeps every rescaled value inside [0, 1]
    BeforeReplacement, // extrema of the raw values, rescaled values clamped
};

struct QIndexOptions {
    ExtremaOrder extrema_order = ExtremaOrder::AfterReplacement;
};

// -1 / (sqrt(2) erfcinv(3/2)), the normal-consistency scale of the MAD.
double mad_scale();
// Inverse complementary error function on (0, 2).
double erfcinv(double y);

double median(std::span<const double> values);
double mad(std::span<const double> values);
std::vector<bool> flag_outliers(std::span<const double> values);
std::vector<double> replace_outliers(std::span<const double> values, const std::vector<bool>& mask);

QIndexTable compute_qindex(const MetricTable& table, const QIndexOptions& options = {});
std::vector<DeltaRecord> delta_qindex(const QIndexTable& qt, std::string_view original_model = original_model_id);

inline constexpr int quality_bin_count = 10;
int assign_bin(double q);
std::array<std::optional<std::string>, quality_bin_count> sample_bins(const QIndexTable& qt, std::string_view model,
                                                                      std::uint64_t seed);

struct DistributionSummary {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    std::vector<std::size_t> counts;
};

// Equal-width histogram over [min, max] plus the five-number summary
// (quartiles by linear interpolation between order statistics).
DistributionSummary distribution_summary(std::span<const double> values, int bins);

} // namespace uwqa
