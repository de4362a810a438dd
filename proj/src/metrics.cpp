#include "uwqa/metrics.hpp"

#include "uwqa/error.hpp"
#include "uwqa/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace uwqa {

namespace {

void require(bool ok, const std::string& what)
{
    if (!ok)
        throw Error(ErrorKind::Config, what);
}

bool finite_all(std::span<const double> values)
{
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void require_block_grid(const ImageBuffer& img, const MetricConfig& cfg, std::string_view metric)
{
    if (img.width() < cfg.blocks_k1 || img.height() < cfg.blocks_k2)
        throw Error(ErrorKind::Metric, std::string(metric) + ": image " + std::to_string(img.width()) + "x" +
                                           std::to_string(img.height()) + " is smaller than the " +
                                           std::to_string(cfg.blocks_k1) + "x" + std::to_string(cfg.blocks_k2) +
                                           " block grid");
}

std::vector<double> channel_plane(const ImageBuffer& img, int c)
{
    std::vector<double> out(img.pixel_count());
    kernels::active().channel(img.rgb().data(), c, out.data(), out.size());
    return out;
}

double mean_of(std::span<const double> v)
{
    return kernels::active().sum(v.data(), v.size()) / static_cast<double>(v.size());
}

double population_variance(std::span<const double> v, double center)
{
    return kernels::active().sum_sq_dev(v.data(), v.size(), center) / static_cast<double>(v.size());
}

// Trimmed mean for values on the half-integer grid [-255, 255] (the opponent
// channels), using a counting pass instead of a sort. Exact: every partial sum
// is a multiple of 0.5 well below 2^53.
double trimmed_mean_half_grid(std::span<const double> values, double alpha)
{
    constexpr int buckets = 1021;
    std::vector<std::size_t> counts(buckets, 0);
    for (double v : values)
        ++counts[static_cast<std::size_t>((v + 255.0) * 2.0)];

    const std::size_t k = values.size();
    std::size_t skip_low = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(k)));
    std::size_t skip_high = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(k)));
    if (skip_low + skip_high >= k)
        skip_low = skip_high = 0;
    std::size_t keep = k - skip_low - skip_high;
    const std::size_t kept_total = keep;

    double total = 0.0;
    for (int i = 0; i < buckets && keep > 0; ++i) {
        std::size_t c = counts[i];
        const std::size_t dropped = std::min(c, skip_low);
        skip_low -= dropped;
        c -= dropped;
        const std::size_t taken = std::min(c, keep);
        keep -= taken;
        total += static_cast<double>(taken) * (i * 0.5 - 255.0);
    }
    return total / static_cast<double>(kept_total);
}

// (2 / (k1 k2)) * sum log(max / min); blocks with min == 0 contribute 0.
double eme(const Plane& plane, int k1, int k2)
{
    const auto& kern = kernels::active();
    double acc = 0.0;
    for (const PlaneView& block : partition_blocks(plane, k1, k2)) {
        kernels::MinMax mm = kern.min_max(block.row(0).data(), block.width);
        for (int y = 1; y < block.height; ++y) {
            const kernels::MinMax r = kern.min_max(block.row(y).data(), block.width);
            mm.min = std::min(mm.min, r.min);
            mm.max = std::max(mm.max, r.max);
        }
        if (mm.min > 0.0)
            acc += std::log(mm.max / mm.min);
    }
    return 2.0 / (static_cast<double>(k1) * k2) * acc;
}

} // namespace

void MetricConfig::validate() const
{
    require(alpha_trim >= 0.0 && alpha_trim <= 0.4, "alpha_trim must be in [0, 0.4]");
    require(blocks_k1 >= 1 && blocks_k2 >= 1, "block counts must be >= 1");
    require(finite_all(uiqm_weights) && finite_all(uism_channel_weights) && finite_all(uciqe_weights) &&
                finite_all(ccf_weights) && std::isfinite(uicm_mean_weight) && std::isfinite(uicm_variance_weight) &&
                std::isfinite(ccf_colorfulness_mean_weight),
            "metric weights must be finite");
    require(luminance_percentile >= 0.0 && luminance_percentile < 0.5, "luminance_percentile must be in [0, 0.5)");
    require(std::isfinite(lab_scale) && lab_scale > 0.0, "lab_scale must be positive");
    require(ccf_dark_channel_radius >= 0, "ccf_dark_channel_radius must be >= 0");
}

double MetricVector::operator[](std::size_t i) const
{
    switch (i) {
    case 0: return uiqm;
    case 1: return uciqe;
    case 2: return ccf;
    default: return entropy;
    }
}

double& MetricVector::operator[](std::size_t i)
{
    switch (i) {
    case 0: return uiqm;
    case 1: return uciqe;
    case 2: return ccf;
    default: return entropy;
    }
}

double alpha_trimmed_mean(std::span<const double> values, double alpha)
{
    if (values.empty())
        throw Error(ErrorKind::EmptyInput, "alpha_trimmed_mean of an empty sequence");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t k = sorted.size();
    std::size_t low = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(k)));
    std::size_t high = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(k)));
    if (low + high >= k)
        low = high = 0;
    double total = 0.0;
    for (std::size_t i = low; i < k - high; ++i)
        total += sorted[i];
    return total / static_cast<double>(k - low - high);
}

// --- UIQM -----------------------------------------------------------------

double uicm(const ImageBuffer& img, const MetricConfig& cfg)
{
    const std::size_t n = img.pixel_count();
    std::vector<double> rg(n), yb(n);
    kernels::active().opponent(img.rgb().data(), rg.data(), yb.data(), n);

    const double mu_rg = trimmed_mean_half_grid(rg, cfg.alpha_trim);
    const double mu_yb = trimmed_mean_half_grid(yb, cfg.alpha_trim);
    const double var_rg = population_variance(rg, mu_rg);
    const double var_yb = population_variance(yb, mu_yb);
    return cfg.uicm_mean_weight * std::sqrt(mu_rg * mu_rg + mu_yb * mu_yb) +
           cfg.uicm_variance_weight * std::sqrt(var_rg + var_yb);
}

double uism(const ImageBuffer& img, const MetricConfig& cfg)
{
    require_block_grid(img, cfg, "uism");
    const auto& kern = kernels::active();
    const std::size_t n = img.pixel_count();
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        const std::vector<double> channel = channel_plane(img, c);
        std::vector<double> edges(n);
        kern.sobel_magnitude(channel.data(), img.width(), img.height(), edges.data());
        kern.multiply(edges.data(), channel.data(), edges.data(), n);
        const Plane edge_map(img.width(), img.height(), std::move(edges));
        total += cfg.uism_channel_weights[c] * eme(edge_map, cfg.blocks_k1, cfg.blocks_k2);
    }
    return total;
}

double uiconm(const ImageBuffer& img, const MetricConfig& cfg)
{
    require_block_grid(img, cfg, "uiconm");
    const auto& kern = kernels::active();
    const Plane gray = to_grayscale(img);
    double acc = 0.0;
    for (const PlaneView& block : partition_blocks(gray, cfg.blocks_k1, cfg.blocks_k2)) {
        kernels::MinMax mm = kern.min_max(block.row(0).data(), block.width);
        for (int y = 1; y < block.height; ++y) {
            const kernels::MinMax r = kern.min_max(block.row(y).data(), block.width);
            mm.min = std::min(mm.min, r.min);
            mm.max = std::max(mm.max, r.max);
        }
        const double range = mm.max - mm.min;
        const double total = mm.max + mm.min;
        if (range <= 0.0 || total <= 0.0)
            continue;
        const double m = range / total;
        acc += m * std::log(m);
    }
    // -M ln M per block
    return -acc / (static_cast<double>(cfg.blocks_k1) * cfg.blocks_k2);
}

UiqmParts uiqm_parts(const ImageBuffer& img, const MetricConfig& cfg)
{
    require_block_grid(img, cfg, "uiqm");
    return UiqmParts{uicm(img, cfg), uism(img, cfg), uiconm(img, cfg)};
}

double combine_uiqm(const UiqmParts& parts, const MetricConfig& cfg)
{
    return cfg.uiqm_weights[0] * parts.uicm + cfg.uiqm_weights[1] * parts.uism + cfg.uiqm_weights[2] * parts.uiconm;
}

double uiqm(const ImageBuffer& img, const MetricConfig& cfg)
{
    return combine_uiqm(uiqm_parts(img, cfg), cfg);
}

// --- UCIQE ----------------------------------------------------------------

UciqeParts uciqe_parts(const ImageBuffer& img, const MetricConfig& cfg)
{
    constexpr double black_threshold = 1e-6;
    const LabImage lab = rgb_to_lab(img);
    const std::size_t n = lab.l.size();

    std::vector<double> chroma(n);
    std::vector<double> lum(n);
    double sat_sum = 0.0;
    std::size_t sat_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double c = std::sqrt(lab.a[i] * lab.a[i] + lab.b[i] * lab.b[i]);
        chroma[i] = c / cfg.lab_scale;
        lum[i] = lab.l[i] / cfg.lab_scale;
        if (lab.l[i] >= black_threshold) {
            sat_sum += c / lab.l[i];
            ++sat_count;
        }
    }
    if (sat_count == 0)
        throw Error(ErrorKind::Metric, "uciqe: saturation undefined (every pixel is black)");

    UciqeParts parts;
    parts.chroma_std = std::sqrt(population_variance(chroma, mean_of(chroma)));

    // Order statistics at index floor(q N) from each end.
    const std::size_t tail = static_cast<std::size_t>(std::floor(cfg.luminance_percentile * static_cast<double>(n)));
    std::nth_element(lum.begin(), lum.begin() + tail, lum.end());
    const double low = lum[tail];
    std::nth_element(lum.begin(), lum.begin() + (n - 1 - tail), lum.end());
    const double high = lum[n - 1 - tail];
    parts.luminance_contrast = high - low;

    parts.mean_saturation = sat_sum / static_cast<double>(sat_count);
    return parts;
}

double combine_uciqe(const UciqeParts& parts, const MetricConfig& cfg)
{
    return cfg.uciqe_weights[0] * parts.chroma_std + cfg.uciqe_weights[1] * parts.luminance_contrast +
           cfg.uciqe_weights[2] * parts.mean_saturation;
}

double uciqe(const ImageBuffer& img, const MetricConfig& cfg)
{
    return combine_uciqe(uciqe_parts(img, cfg), cfg);
}

// --- CCF ------------------------------------------------------------------

double ccf_colorfulness(const ImageBuffer& img, const MetricConfig& cfg)
{
    const std::size_t n = img.pixel_count();
    std::vector<double> rg(n), yb(n);
    kernels::active().opponent(img.rgb().data(), rg.data(), yb.data(), n);
    const double mu_rg = mean_of(rg);
    const double mu_yb = mean_of(yb);
    const double spread = std::sqrt(population_variance(rg, mu_rg) + population_variance(yb, mu_yb));
    return spread + cfg.ccf_colorfulness_mean_weight * std::sqrt(mu_rg * mu_rg + mu_yb * mu_yb);
}

double ccf_contrast(const ImageBuffer& img, const MetricConfig& cfg)
{
    require_block_grid(img, cfg, "ccf contrast");
    const auto& kern = kernels::active();
    const Plane gray = to_grayscale(img);
    double acc = 0.0;
    for (const PlaneView& block : partition_blocks(gray, cfg.blocks_k1, cfg.blocks_k2)) {
        double s = 0.0;
        for (int y = 0; y < block.height; ++y)
            s += kern.sum(block.row(y).data(), block.width);
        const double mean = s / static_cast<double>(block.size());
        double ss = 0.0;
        for (int y = 0; y < block.height; ++y)
            ss += kern.sum_sq_dev(block.row(y).data(), block.width, mean);
        acc += std::sqrt(ss / static_cast<double>(block.size()));
    }
    return acc / (static_cast<double>(cfg.blocks_k1) * cfg.blocks_k2);
}

double ccf_fog_density(const ImageBuffer& img, const MetricConfig& cfg)
{
    const int w = img.width();
    const int h = img.height();
    const int r = cfg.ccf_dark_channel_radius;
    std::vector<double> cmin(img.pixel_count());
    kernels::active().channel_min(img.rgb().data(), cmin.data(), cmin.size());

    // Separable (2r+1)^2 minimum filter, window clipped at the borders.
    std::vector<double> horiz(cmin.size());
    for (int y = 0; y < h; ++y) {
        const double* src = cmin.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            const int lo = std::max(0, x - r), hi = std::min(w - 1, x + r);
            horiz[static_cast<std::size_t>(y) * w + x] = *std::min_element(src + lo, src + hi + 1);
        }
    }
    double total = 0.0;
    for (int y = 0; y < h; ++y) {
        const int lo = std::max(0, y - r), hi = std::min(h - 1, y + r);
        for (int x = 0; x < w; ++x) {
            double m = horiz[static_cast<std::size_t>(lo) * w + x];
            for (int yy = lo + 1; yy <= hi; ++yy)
                m = std::min(m, horiz[static_cast<std::size_t>(yy) * w + x]);
            total += m;
        }
    }
    return total / (255.0 * static_cast<double>(img.pixel_count()));
}

CcfParts ccf_parts(const ImageBuffer& img, const MetricConfig& cfg)
{
    return CcfParts{ccf_colorfulness(img, cfg), ccf_contrast(img, cfg), ccf_fog_density(img, cfg)};
}

double combine_ccf(const CcfParts& parts, const MetricConfig& cfg)
{
    return cfg.ccf_weights[0] * parts.colorfulness + cfg.ccf_weights[1] * parts.contrast +
           cfg.ccf_weights[2] * parts.fog_density;
}

double ccf(const ImageBuffer& img, const MetricConfig& cfg)
{
    return combine_ccf(ccf_parts(img, cfg), cfg);
}

// --- Entropy --------------------------------------------------------------

double entropy(const ImageBuffer& img)
{
    const Plane gray = to_grayscale(img);
    std::array<std::size_t, 256> hist{};
    for (double v : gray.values())
        ++hist[static_cast<std::size_t>(std::clamp(std::lround(v), 0L, 255L))];
    const double n = static_cast<double>(gray.size());
    double h = 0.0;
    for (std::size_t count : hist) {
        if (count == 0)
            continue;
        const double p = static_cast<double>(count) / n;
        h -= p * std::log2(p);
    }
    return std::clamp(h, 0.0, 8.0);
}

MetricVector metric_vector(const ImageBuffer& img, const MetricConfig& cfg)
{
    MetricVector mv;
    const auto labeled = [](std::string_view name, auto&& fn) {
        try {
            return fn();
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Metric || e.kind() == ErrorKind::InvalidPartition)
                throw Error(ErrorKind::Metric, std::string(name) + " failed: " + e.what());
            throw;
        }
    };
    mv.uiqm = labeled("uiqm", [&] { return uiqm(img, cfg); });
    mv.uciqe = labeled("uciqe", [&] { return uciqe(img, cfg); });
    mv.ccf = labeled("ccf", [&] { return ccf(img, cfg); });
    mv.entropy = labeled("entropy", [&] { return entropy(img); });
    return mv;
}

} // namespace uwqa
