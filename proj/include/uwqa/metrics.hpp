#pragma once

#include "uwqa/image.hpp"

#include <array>
#include <string_view>

namespace uwqa {

// Weights and hyper-parameters for the four reference-free metrics.
// Defaults match config/default.cfg.
struct MetricConfig {
    double alpha_trim = 0.1;
    int blocks_k1 = 10;
    int blocks_k2 = 10;

    std::array<double, 3> uiqm_weights{0.0282, 0.2953, 3.5753};
    double uicm_mean_weight = -0.0268;
    double uicm_variance_weight = 0.1586;
    std::array<double, 3> uism_channel_weights{0.299, 0.587, 0.114};

    std::array<double, 3> uciqe_weights{0.4680, 0.2745, 0.2576};
    double luminance_percentile = 0.01;
    // L, a and b are divided by this before the UCIQE statistics.
    double lab_scale = 100.0;

    std::array<double, 3> ccf_weights{0.17593, 0.61759, 0.33988};
    double ccf_colorfulness_mean_weight = 0.3;
    int ccf_dark_channel_radius = 7;

    // Throws Error{Config} when a field is out of range.
    void validate() const;
};

struct MetricVector {
    double uiqm = 0.0;
    double uciqe = 0.0;
    double ccf = 0.0;
    double entropy = 0.0;

    static constexpr std::size_t size = 4;
    double operator[](std::size_t i) const;
    double& operator[](std::size_t i);
    bool operator==(const MetricVector&) const = default;
};

inline constexpr std::array<std::string_view, 4> metric_names{"uiqm", "uciqe", "ccf", "entropy"};

struct UiqmParts {
    double uicm = 0.0;
    double uism = 0.0;
    double uiconm = 0.0;
};

struct UciqeParts {
    double chroma_std = 0.0;
    double luminance_contrast = 0.0;
    double mean_saturation = 0.0;
};

struct CcfParts {
    double colorfulness = 0.0;
    double contrast = 0.0;
    double fog_density = 0.0;
};

// Mean of the sorted values after dropping ceil(alpha*K) from the bottom and
// floor(alpha*K) from the top.
double alpha_trimmed_mean(std::span<const double> values, double alpha);

double uicm(const ImageBuffer& img, const MetricConfig& cfg);
double uism(const ImageBuffer& img, const MetricConfig& cfg);
double uiconm(const ImageBuffer& img, const MetricConfig& cfg);
UiqmParts uiqm_parts(const ImageBuffer& img, const MetricConfig& cfg);
double combine_uiqm(const UiqmParts& parts, const MetricConfig& cfg);
double uiqm(const ImageBuffer& img, const MetricConfig& cfg);

UciqeParts uciqe_parts(const ImageBuffer& img, const MetricConfig& cfg);
double combine_uciqe(const UciqeParts& parts, const MetricConfig& cfg);
double uciqe(const ImageBuffer& img, const MetricConfig& cfg);

double ccf_colorfulness(const ImageBuffer& img, const MetricConfig& cfg);
double ccf_contrast(const ImageBuffer& img, const MetricConfig& cfg);
double ccf_fog_density(const ImageBuffer& img, const MetricConfig& cfg);
CcfParts ccf_parts(const ImageBuffer& img, const MetricConfig& cfg);
double combine_ccf(const CcfParts& parts, const MetricConfig& cfg);
double ccf(const ImageBuffer& img, const MetricConfig& cfg);

// Shannon entropy (bits) of the 256-bin rounded grayscale histogram.
double entropy(const ImageBuffer& img);

MetricVector metric_vector(const ImageBuffer& img, const MetricConfig& cfg);

} // namespace uwqa
