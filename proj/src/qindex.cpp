#include "uwqa/qindex.hpp"

#include "uwqa/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>

namespace uwqa {

// --- MetricTable ----------------------------------------------------------

void MetricTable::add(const std::string& model, const std::string& image_id, const MetricVector& metrics)
{
    for (std::size_t m = 0; m < MetricVector::size; ++m)
        if (!std::isfinite(metrics[m]))
            throw Error(ErrorKind::Schema, "non-finite " + std::string(metric_names[m]) + " for " + model + "/" + image_id);
    auto [it, inserted] = index_.emplace(std::make_pair(model, image_id), rows_.size());
    if (!inserted)
        throw Error(ErrorKind::Schema, "duplicate row " + model + "/" + image_id);
    if (std::find(models_.begin(), models_.end(), model) == models_.end())
        models_.push_back(model);
    rows_.push_back(MetricRow{model, image_id, metrics});
}

std::vector<std::string> MetricTable::image_ids(const std::string& model) const
{
    std::vector<std::string> ids;
    for (const auto& row : rows_)
        if (row.model == model)
            ids.push_back(row.image_id);
    return ids;
}

bool MetricTable::contains(const std::string& model, const std::string& image_id) const
{
    return index_.count({model, image_id}) != 0;
}

const MetricVector& MetricTable::at(const std::string& model, const std::string& image_id) const
{
    auto it = index_.find({model, image_id});
    if (it == index_.end())
        throw Error(ErrorKind::UnknownModel, "no row for " + model + "/" + image_id);
    return rows_[it->second].metrics;
}

void MetricTable::validate_aligned() const
{
    if (models_.empty())
        return;
    const auto reference = image_ids(models_.front());
    const std::set<std::string> ref_set(reference.begin(), reference.end());
    for (const auto& model : models_) {
        const auto ids = image_ids(model);
        if (std::set<std::string>(ids.begin(), ids.end()) != ref_set)
            throw Error(ErrorKind::Schema,
                        "model '" + model + "' does not cover the same images as '" + models_.front() + "'");
    }
}

MetricTable MetricTable::aligned(std::vector<std::string>* dropped_images) const
{
    std::map<std::string, std::size_t> coverage;
    for (const auto& row : rows_)
        ++coverage[row.image_id];
    MetricTable out;
    std::set<std::string> dropped;
    for (const auto& row : rows_) {
        if (coverage[row.image_id] == models_.size())
            out.add(row.model, row.image_id, row.metrics);
        else
            dropped.insert(row.image_id);
    }
    if (dropped_images != nullptr)
        dropped_images->assign(dropped.begin(), dropped.end());
    return out;
}

// --- QIndexTable ----------------------------------------------------------

std::size_t QIndexTable::model_index(std::string_view model) const
{
    auto it = std::find(models.begin(), models.end(), model);
    if (it == models.end())
        throw Error(ErrorKind::UnknownModel, "unknown model '" + std::string(model) + "'");
    return static_cast<std::size_t>(it - models.begin());
}

double QIndexTable::at(std::string_view model, std::string_view image_id) const
{
    const std::size_t m = model_index(model);
    auto it = std::find(image_ids.begin(), image_ids.end(), image_id);
    if (it == image_ids.end())
        throw Error(ErrorKind::UnknownModel, "unknown image '" + std::string(image_id) + "'");
    return q[m][static_cast<std::size_t>(it - image_ids.begin())];
}

// --- robust statistics ----------------------------------------------------

double erfcinv(double y)
{
    if (!(y > 0.0 && y < 2.0))
        throw Error(ErrorKind::OutOfRange, "erfcinv domain is (0, 2)");
    // Newton iteration on erfc(x) - y; erfc is smooth and monotone.
    double x = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double f = std::erfc(x) - y;
        const double slope = -2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x);
        const double step = f / slope;
        x -= step;
        if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(x)))
            break;
    }
    return x;
}

double mad_scale()
{
    static const double c = -1.0 / (std::sqrt(2.0) * erfcinv(1.5));
    return c;
}

double median(std::span<const double> values)
{
    if (values.empty())
        throw Error(ErrorKind::EmptyInput, "median of an empty sequence");
    std::vector<double> v(values.begin(), values.end());
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1)
        return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + mid);
    return (lower + upper) / 2.0;
}

double mad(std::span<const double> values)
{
    const double med = median(values);
    std::vector<double> dev(values.size());
    std::transform(values.begin(), values.end(), dev.begin(), [med](double v) { return std::abs(v - med); });
    return mad_scale() * median(dev);
}

std::vector<bool> flag_outliers(std::span<const double> values)
{
    const double med = median(values);
    const double limit = 3.0 * mad(values);
    std::vector<bool> mask(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        mask[i] = std::abs(values[i] - med) > limit;
    return mask;
}

std::vector<double> replace_outliers(std::span<const double> values, const std::vector<bool>& mask)
{
    if (mask.size() != values.size())
        throw Error(ErrorKind::OutOfRange, "outlier mask length does not match values");
    double lo = 0.0, hi = 0.0;
    bool any_kept = false;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (mask[i])
            continue;
        lo = any_kept ? std::min(lo, values[i]) : values[i];
        hi = any_kept ? std::max(hi, values[i]) : values[i];
        any_kept = true;
    }
    if (!any_kept)
        throw Error(ErrorKind::AllOutliers, "every value is flagged as an outlier");

    const double med = median(values);
    std::vector<double> out(values.begin(), values.end());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!mask[i])
            continue;
        out[i] = out[i] > med ? hi : lo;
    }
    return out;
}

// --- Q-index --------------------------------------------------------------

QIndexTable compute_qindex(const MetricTable& table, const QIndexOptions& options)
{
    if (table.empty())
        throw Error(ErrorKind::EmptyInput, "metric table is empty");
    table.validate_aligned();

    QIndexTable qt;
    qt.models = table.models();
    qt.image_ids = table.image_ids(qt.models.front());
    const std::size_t n_models = qt.models.size();
    const std::size_t n_images = qt.image_ids.size();

    // values[metric][model][image]
    std::array<std::vector<std::vector<double>>, 4> raw;
    for (std::size_t k = 0; k < MetricVector::size; ++k) {
        raw[k].assign(n_models, std::vector<double>(n_images));
        for (std::size_t m = 0; m < n_models; ++m)
            for (std::size_t i = 0; i < n_images; ++i)
                raw[k][m][i] = table.at(qt.models[m], qt.image_ids[i])[k];
    }

    const auto pooled_extrema = [&](const std::vector<std::vector<double>>& per_model) {
        Extrema e{per_model[0][0], per_model[0][0]};
        for (const auto& col : per_model)
            for (double v : col) {
                e.min = std::min(e.min, v);
                e.max = std::max(e.max, v);
            }
        return e;
    };

    std::array<std::vector<std::vector<double>>, 4> cleaned;
    qt.replaced.assign(n_models, {});
    for (std::size_t k = 0; k < MetricVector::size; ++k) {
        if (options.extrema_order == ExtremaOrder::BeforeReplacement)
            qt.global_extrema[k] = pooled_extrema(raw[k]);
        cleaned[k].resize(n_models);
        for (std::size_t m = 0; m < n_models; ++m) {
            const auto mask = flag_outliers(raw[k][m]);
            qt.replaced[m][k] = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
            cleaned[k][m] = replace_outliers(raw[k][m], mask);
        }
        if (options.extrema_order == ExtremaOrder::AfterReplacement)
            qt.global_extrema[k] = pooled_extrema(cleaned[k]);
        if (!(qt.global_extrema[k].min < qt.global_extrema[k].max))
            throw Error(ErrorKind::DegenerateMetric,
                        "metric '" + std::string(metric_names[k]) + "' is constant across the pool");
    }

    qt.q.assign(n_models, std::vector<double>(n_images, 0.0));
    for (std::size_t m = 0; m < n_models; ++m)
        for (std::size_t i = 0; i < n_images; ++i) {
            double total = 0.0;
            for (std::size_t k = 0; k < MetricVector::size; ++k) {
                const Extrema& e = qt.global_extrema[k];
                total += std::clamp((cleaned[k][m][i] - e.min) / (e.max - e.min), 0.0, 1.0);
            }
            qt.q[m][i] = total / static_cast<double>(MetricVector::size);
        }
    return qt;
}

std::vector<DeltaRecord> delta_qindex(const QIndexTable& qt, std::string_view original_model)
{
    const std::size_t org = qt.model_index(original_model);
    std::vector<DeltaRecord> out;
    for (std::size_t m = 0; m < qt.models.size(); ++m) {
        if (m == org)
            continue;
        for (std::size_t i = 0; i < qt.image_ids.size(); ++i)
            out.push_back(DeltaRecord{qt.image_ids[i], qt.models[m], qt.q[m][i] - qt.q[org][i]});
    }
    return out;
}

int assign_bin(double q)
{
    if (!(q >= 0.0 && q <= 1.0))
        throw Error(ErrorKind::OutOfRange, "Q-index " + std::to_string(q) + " outside [0, 1]");
    return std::min(quality_bin_count - 1, static_cast<int>(std::floor(q * quality_bin_count)));
}

namespace {

// Unbiased draw in [0, n) by rejection.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n)
{
    const std::uint64_t range = n;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return static_cast<std::size_t>(x % range);
}

double interpolated_quantile(const std::vector<double>& sorted, double p)
{
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

} // namespace

std::array<std::optional<std::string>, quality_bin_count> sample_bins(const QIndexTable& qt, std::string_view model,
                                                                      std::uint64_t seed)
{
    const std::size_t m = qt.model_index(model);
    std::array<std::vector<std::size_t>, quality_bin_count> members;
    for (std::size_t i = 0; i < qt.image_ids.size(); ++i)
        members[static_cast<std::size_t>(assign_bin(qt.q[m][i]))].push_back(i);

    std::mt19937_64 rng(seed);
    std::array<std::optional<std::string>, quality_bin_count> picks;
    for (std::size_t b = 0; b < members.size(); ++b) {
        if (members[b].empty())
            continue;
        picks[b] = qt.image_ids[members[b][uniform_index(rng, members[b].size())]];
    }
    return picks;
}

DistributionSummary distribution_summary(std::span<const double> values, int bins)
{
    if (values.empty())
        throw Error(ErrorKind::EmptyInput, "distribution of an empty sequence");
    if (bins < 1)
        throw Error(ErrorKind::OutOfRange, "histogram needs at least one bin");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());

    DistributionSummary s;
    s.min = sorted.front();
    s.max = sorted.back();
    s.q1 = interpolated_quantile(sorted, 0.25);
    s.median = interpolated_quantile(sorted, 0.5);
    s.q3 = interpolated_quantile(sorted, 0.75);

    if (s.min == s.max) {
        s.counts = {sorted.size()};
        return s;
    }
    s.counts.assign(static_cast<std::size_t>(bins), 0);
    const double width = (s.max - s.min) / bins;
    for (double v : sorted) {
        auto b = static_cast<std::size_t>((v - s.min) / width);
        ++s.counts[std::min(b, s.counts.size() - 1)];
    }
    return s;
}

} // namespace uwqa
